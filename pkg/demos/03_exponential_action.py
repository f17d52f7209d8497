"""Action of the matrix exponential by scaled truncated Taylor series.

Run: python demos/03_exponential_action.py
"""
# %%
import time

import numpy as np
import scipy.linalg as sla

from bssplit import assemble, build_disk_mesh, build_transformed, expmv
from bssplit.linops import select_degree

# %% A nonsymmetric test matrix against the dense Pade exponential
rng = np.random.default_rng(0)
g, k = rng.standard_normal((30, 30)), rng.standard_normal((30, 30))
a = -(g @ g.T) / 30 + 0.5 * (k - k.T)
b = rng.standard_normal(30)
for t in (0.1, 1.0, 3.0):
    err = np.linalg.norm(expmv(t, a, b) - sla.expm(t * a) @ b) / np.linalg.norm(b)
    print(f"t={t}: relative deviation from expm {err:.1e}")

# %% Degree and substep choice grows with the norm of tA
for norm in (0.5, 5, 50, 500):
    m, s = select_degree(norm, 1e-10)
    print(f"||tA||_1={norm:6}: degree {m:2d}, substeps {s:3d}, matvecs <= {m * s}")

# %% The surface heat semigroup on a fine mesh (mass-transformed, nonsymmetric)
fem = assemble(build_disk_mesh(0.1))
ops = build_transformed(fem)
y = rng.standard_normal(ops.a_surf.shape[0])
t0 = time.perf_counter()
out = expmv(0.05, -ops.a_surf, y)
# S conserves the mass-weighted integral of y
print(f"S(0.05) y in {1e3 * (time.perf_counter() - t0):.1f} ms; integral "
      f"{fem.mass_surf @ out:.12f} vs {fem.mass_surf @ y:.12f}")
