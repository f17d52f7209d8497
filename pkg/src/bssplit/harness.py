"""Temporal convergence studies: runs, error norms, CSV and SVG output."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .fem import FemOperators, assemble
from .linops import EXPMV_TOL
from .mesh import refine_sequence
from .problems import NEUMANN_TRACES, NodalForcing, get_problem, interpolate_exact
from .splitting import StepperConfig, build_transformed, integrate

log = logging.getLogger(__name__)

CSV_HEADER = ("problem", "mesh_level", "h", "ndof_bulk", "ndof_surf", "tau", "err_bulk", "err_surf")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "allen-cahn"
    tau0: float = 0.2
    tau_levels: int = 7
    h0: float = 0.4
    mesh_levels: int = 5
    t_max: float = 1.0
    expmv_tol: float = EXPMV_TOL
    out: Optional[str] = None
    plot: Optional[str] = None
    h1: bool = False
    neumann: str = "variational"

    def taus(self) -> list[float]:
        return [self.tau0 * 2.0 ** (-k) for k in range(self.tau_levels)]

    def validate(self) -> None:
        try:
            get_problem(self.problem)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.neumann not in NEUMANN_TRACES:
            raise ConfigError(f"unknown Neumann trace {self.neumann!r}")
        if self.tau0 <= 0 or self.tau_levels < 1 or self.mesh_levels < 1:
            raise ConfigError("tau0 must be positive and level counts at least 1")
        if self.h0 <= 0 or self.h0 > 1:
            raise ConfigError(f"h0 must lie in (0, 1], got {self.h0}")
        if self.t_max < 0 or self.expmv_tol <= 0:
            raise ConfigError("t_max must be nonnegative and expmv_tol positive")
        for tau in self.taus():
            n = self.t_max / tau
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ConfigError(f"t_max={self.t_max} is not a whole number of steps of tau={tau}")


@dataclass(frozen=True)
class ConvergenceRow:
    problem: str
    mesh_level: int
    h: float
    ndof_bulk: int
    ndof_surf: int
    tau: float
    err_bulk: float
    err_surf: float


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow] = field(default_factory=list)
    failures: list[tuple[int, float, str]] = field(default_factory=list)
    # max |trace(u_n) - v_n| over every run, keyed by (mesh_level, tau)
    constraint_violation: dict = field(default_factory=dict)

    def curve(self, mesh_level: int, column: str = "err_bulk"):
        rows = sorted((r for r in self.rows if r.mesh_level == mesh_level), key=lambda r: -r.tau)
        return np.array([r.tau for r in rows]), np.array([getattr(r, column) for r in rows])

    def mesh_levels(self) -> list[int]:
        return sorted({r.mesh_level for r in self.rows})

    def observed_orders(self) -> dict:
        """``log2(e_k / e_{k+1})`` per mesh level and error column."""
        out = {}
        for lev in self.mesh_levels():
            for col in ("err_bulk", "err_surf"):
                _, e = self.curve(lev, col)
                out[(lev, col)] = np.log2(e[:-1] / e[1:])
        return out


def lumped_norm(mass: np.ndarray, x: np.ndarray) -> float:
    return float(np.sqrt(np.sum(mass * x * x)))


def discrete_error(trajectory, problem, mesh, fem: FemOperators, h1: bool = False):
    """Max over the time levels of the lumped-mass L2 norms of nodal errors.

    With ``h1=True`` the stiffness seminorm is added, giving discrete H1 norms.
    """
    if not trajectory:
        raise ValueError("empty trajectory")
    eb = es = 0.0
    for st in trajectory:
        u_ex, v_ex = interpolate_exact(problem, mesh, fem, st.t)
        du, dv = st.u - u_ex, st.v - v_ex
        nb, ns = lumped_norm(fem.mass_bulk, du), lumped_norm(fem.mass_surf, dv)
        if h1:
            nb = math.sqrt(nb ** 2 + float(du @ (fem.stiff_bulk @ du)))
            ns = math.sqrt(ns ** 2 + float(dv @ (fem.stiff_surf @ dv)))
        eb, es = max(eb, nb), max(es, ns)
    return eb, es


def run_single(problem, mesh, fem, ops, tau, t_max, tol, neumann="variational"):
    """Integrate one (mesh, tau) pair from the interpolated exact initial data."""
    rhs = NodalForcing(problem, mesh, fem, neumann=neumann)
    u0, v0 = interpolate_exact(problem, mesh, fem, 0.0)
    cfg = StepperConfig(tau=tau, t_max=t_max, tol=tol, rhs=rhs)
    return integrate(u0, v0, cfg, ops)


def run_convergence(cfg: RunConfig) -> ConvergenceReport:
    cfg.validate()
    problem = get_problem(cfg.problem, t_max=cfg.t_max)
    report = ConvergenceReport()
    meshes = refine_sequence(cfg.h0, cfg.mesh_levels)
    for level, mesh in enumerate(meshes, start=1):
        fem = assemble(mesh)
        ops = build_transformed(fem)
        for tau in cfg.taus():
            try:
                traj = run_single(problem, mesh, fem, ops, tau, cfg.t_max, cfg.expmv_tol,
                                  cfg.neumann)
                eb, es = discrete_error(traj, problem, mesh, fem, h1=cfg.h1)
            except Exception as exc:  # one failed row must not abort the study
                log.error("level %d, tau=%g failed: %s", level, tau, exc)
                report.failures.append((level, tau, str(exc)))
                continue
            report.constraint_violation[(level, tau)] = max(
                float(np.max(np.abs(st.u[fem.trace_map] - st.v), initial=0.0)) for st in traj)
            report.rows.append(ConvergenceRow(problem=cfg.problem, mesh_level=level, h=mesh.h,
                                              ndof_bulk=mesh.n_nodes, ndof_surf=mesh.n_boundary,
                                              tau=tau, err_bulk=eb, err_surf=es))
            log.info("%s level %d h=%.4f tau=%.6g err_bulk=%.3e err_surf=%.3e",
                     cfg.problem, level, mesh.h, tau, eb, es)
    report.rows.sort(key=lambda r: (r.mesh_level, -r.tau))
    return report


def fitted_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)[0])


def emit_csv(report: ConvergenceReport, path) -> None:
    """Write the rows with full-precision floats; ``path`` may be an open text stream."""
    if not report.rows:
        raise ValueError("empty report")
    if hasattr(path, "write"):
        _write_rows(report, path)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(report, fh)


def _write_rows(report, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in report.rows:
        w.writerow([r.problem, r.mesh_level, repr(r.h), r.ndof_bulk, r.ndof_surf,
                    repr(r.tau), repr(r.err_bulk), repr(r.err_surf)])


def read_csv(path) -> ConvergenceReport:
    types = {f.name: f.type for f in fields(ConvergenceRow)}
    conv = {"str": str, "int": int, "float": float}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        rows = [ConvergenceRow(**{k: conv[types[k]](v) for k, v in rec.items()}) for rec in reader]
    return ConvergenceReport(rows=rows)


def emit_plot(report: ConvergenceReport, path) -> None:
    """Log-log SVG: one line per mesh level and error column, plus an order-1 guide."""
    if not report.rows:
        raise ValueError("empty report")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4.2))
    for ax, col, label in zip(axes, ("err_bulk", "err_surf"), ("bulk", "surface")):
        for lev in report.mesh_levels():
            taus, errs = report.curve(lev, col)
            r = next(r for r in report.rows if r.mesh_level == lev)
            ax.loglog(taus, errs, marker="o", label=f"h={r.h:.3f} ({r.ndof_bulk} dofs)")
        taus = np.array(sorted({r.tau for r in report.rows}))
        ref = reference_segment(report, col)
        ax.loglog(taus, ref(taus), "k--", label=r"$O(\tau)$")
        ax.set_xlabel(r"$\tau$")
        ax.set_ylabel(f"{label} error")
        ax.legend(fontsize=7)
    fig.suptitle(report.rows[0].problem)
    fig.tight_layout()
    # Fixed hash salt and no date keep the SVG bytes reproducible.
    with matplotlib.rc_context({"svg.hashsalt": "bssplit"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def reference_segment(report: ConvergenceReport, col: str):
    """Order-1 guide through the largest-tau error of the finest mesh, scaled down."""
    taus, errs = report.curve(report.mesh_levels()[-1], col)
    c = 0.5 * errs[0] / taus[0]
    return lambda t: c * np.asarray(t)
