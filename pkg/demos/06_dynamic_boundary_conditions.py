"""Heat equation with a dynamic boundary condition: the normal derivative enters the surface equation.

The observed temporal order is below one here; see the README section on
known deviations.

Run: python demos/06_dynamic_boundary_conditions.py   (about ten seconds)
"""
# %%
from bssplit import RunConfig, run_convergence
from bssplit.harness import fitted_slope

for neumann in ("variational", "edge-flux"):
    report = run_convergence(RunConfig(problem="dynbc-allen-cahn", neumann=neumann))
    finest = report.mesh_levels()[-1]
    taus, e = report.curve(finest, "err_bulk")
    print(f"{neumann:12s} finest-mesh errors: " + " ".join(f"{x:.2e}" for x in e))
    print(f"{'':12s} slope over the four smallest tau: {fitted_slope(taus[-4:], e[-4:]):.3f}")
    print(f"{'':12s} pairwise orders: " + " ".join(
        f"{o:.2f}" for o in report.observed_orders()[(finest, 'err_bulk')]))
