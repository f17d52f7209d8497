"""Temporal convergence for the Allen-Cahn and mixing test problems.

Run: python demos/05_convergence_study.py   (about ten seconds)
Equivalent CLI: bssplit run-convergence --problem mixing --out mixing.csv --plot mixing.svg
"""
# %%
from bssplit import RunConfig, emit_csv, emit_plot, run_convergence
from bssplit.harness import fitted_slope

for problem in ("allen-cahn", "mixing"):
    report = run_convergence(RunConfig(problem=problem))
    finest = report.mesh_levels()[-1]
    print(f"\n{problem}")
    for lev in report.mesh_levels():
        taus, eb = report.curve(lev, "err_bulk")
        _, es = report.curve(lev, "err_surf")
        print(f"  level {lev}: bulk " + " ".join(f"{e:.2e}" for e in eb))
    for col in ("err_bulk", "err_surf"):
        taus, e = report.curve(finest, col)
        print(f"  slope on finest mesh ({col}, four smallest tau): {fitted_slope(taus[-4:], e[-4:]):.3f}")
    emit_csv(report, f"{problem}.csv")
    emit_plot(report, f"{problem}.svg")
    print(f"  wrote {problem}.csv and {problem}.svg")
