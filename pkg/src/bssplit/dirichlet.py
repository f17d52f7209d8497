"""Discrete harmonic extension of boundary data into the bulk."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fem import FemOperators
from .linops import SOLVE_TOL, SolverError, SpdSolver


@dataclass(frozen=True)
class DirichletOp:
    """Harmonic extension ``v -> u`` with ``u[boundary] = v`` and interior rows of ``A u`` zero."""

    interior: np.ndarray
    boundary: np.ndarray
    solver: SpdSolver
    coupling: sp.csr_matrix  # A_IG, interior rows and boundary columns of the stiffness matrix

    @property
    def n_bulk(self) -> int:
        return len(self.interior) + len(self.boundary)


def build_dirichlet(fem: FemOperators, tol: float = SOLVE_TOL) -> DirichletOp:
    boundary = np.asarray(fem.trace_map)
    mask = np.ones(fem.n_bulk, dtype=bool)
    mask[boundary] = False
    interior = np.flatnonzero(mask)
    a = fem.stiff_bulk.tocsr()
    a_ii = a[interior][:, interior]
    a_ig = a[interior][:, boundary]
    try:
        solver = SpdSolver(a_ii, tol=tol)
    except SolverError as exc:
        raise SolverError(f"interior stiffness block is singular or indefinite: {exc}",
                          exc.residual) from exc
    return DirichletOp(interior=interior, boundary=boundary, solver=solver, coupling=a_ig.tocsr())


def extend(op: DirichletOp, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (len(op.boundary),):
        raise ValueError(f"expected {len(op.boundary)} boundary values, got shape {v.shape}")
    u = np.empty(op.n_bulk)
    u[op.boundary] = v
    if len(op.interior):
        u[op.interior] = op.solver.solve(-(op.coupling @ v))
    return u
