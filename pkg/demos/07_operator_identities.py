"""Dense checks of the splitting operator algebra on tiny meshes.

Run: python demos/07_operator_identities.py
Equivalent CLI: bssplit verify-oracle --report oracle.txt
"""
# %%
import numpy as np

from bssplit.mesh import disk_mesh_from_rings
from bssplit import oracle

fw = oracle.from_mesh(disk_mesh_from_rings(3))
print("factorization through three sub-flows:", oracle.verify_splitting_factorization(fw, 0.1))
print("closed form of the 20th power:        ", oracle.verify_powers_formula(fw, 0.1, 20))
print("integration-by-parts identity:        ", oracle.verify_q_identity(fw, 0.5))

# %% Single-step defect against the exact linear flow
x, y = oracle.generic_pair(fw)
for start in (0.1, 1e-3):
    fit = oracle.measure_local_error_rate(fw, start * 2.0 ** -np.arange(6), x, y)
    print(f"defect slope for tau from {start:g}: {fit.slope:.2f}  "
          f"(pairwise {np.round(np.log2(fit.defects[:-1] / fit.defects[1:]), 2)})")

# %% Powers of the step operator grow at most logarithmically
norms = oracle.measure_stability_growth(fw, 0.01, 200)
print("||T^k|| at k = 1, 10, 100, 200:", np.round(norms[[0, 9, 99, 199]], 3))
print("spread of ||T^k|| / (1 + log k):", round(oracle.growth_ratio(norms), 3))
