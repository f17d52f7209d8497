"""Manufactured bulk-surface test problems on the unit disk.

The exact solution is ``u(x, t) = exp(-t) x1^2 x2^2`` with ``v = u`` on the
circle.  Inhomogeneities are chosen so that ``u`` solves

    du/dt = Lap u + F1(u, v) + rho1         in the disk,
    dv/dt = Lap_Gamma v + F2(u, v) + rho2   on the circle,

with either an Allen-Cahn pair ``F1 = 0, F2 = -v^3 + v`` or a mixing pair
``F1 = u^2, F2 = v * trace(u)``.  The ``dynbc-*`` variants add ``-du/dn``
to ``F2``, which turns the system into the heat equation with a dynamic
boundary condition.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fem import BulkQuadrature, FemOperators, SurfaceQuadrature
from .mesh import TriMesh

PROBLEMS = ("allen-cahn", "mixing", "dynbc-allen-cahn", "dynbc-mixing")
NEUMANN_TRACES = ("variational", "edge-flux")


def exact_solution(x, t):
    x = np.asarray(x, dtype=float)
    return np.exp(-t) * x[..., 0] ** 2 * x[..., 1] ** 2


def exact_surface(theta, t):
    return np.exp(-t) * np.cos(theta) ** 2 * np.sin(theta) ** 2


def laplacian_exact(x, t):
    x = np.asarray(x, dtype=float)
    return 2.0 * np.exp(-t) * (x[..., 0] ** 2 + x[..., 1] ** 2)


def laplace_beltrami_exact(theta, t):
    # v = exp(-t) (1 - cos 4 theta) / 8 on the unit circle
    return 2.0 * np.exp(-t) * np.cos(4.0 * theta)


def normal_derivative_exact(theta, t):
    # x . grad u = 4 u for the degree-4 homogeneous polynomial u
    return 4.0 * exact_surface(theta, t)


def _zero(u):
    return np.zeros_like(u)


def _square(u):
    return u * u


def _allen_cahn(trace_u, v):
    return -v ** 3 + v


def _mixing(trace_u, v):
    return v * trace_u


@dataclass(frozen=True)
class ProblemSpec:
    """Pointwise data of one test problem.

    ``f_bulk(u)`` and ``f_surf(trace_u, v)`` are the reaction terms without the
    Neumann coupling; ``dynbc`` switches on ``F2 = -du/dn + f_surf``.
    """

    name: str
    f_bulk: Callable
    f_surf: Callable
    dynbc: bool
    t_max: float = 1.0

    def exact_u(self, x, t):
        return exact_solution(x, t)

    def exact_v(self, theta, t):
        return exact_surface(theta, t)

    def nonlinearity(self, u_val, v_val, neumann_val=None):
        """``(F1, F2)`` at a point; ``u_val`` is the bulk value (its trace on the boundary)."""
        u_val = np.asarray(u_val, dtype=float)
        v_val = np.asarray(v_val, dtype=float)
        f1 = self.f_bulk(u_val)
        f2 = self.f_surf(u_val, v_val)
        if self.dynbc:
            if neumann_val is None:
                raise ValueError(f"problem {self.name!r} needs the normal derivative of u")
            f2 = f2 - neumann_val
        return f1, f2

    def rho1(self, x, t):
        u = exact_solution(x, t)
        return -u - laplacian_exact(x, t) - self.f_bulk(u)

    def rho2(self, theta, t):
        v = exact_surface(theta, t)
        dn = normal_derivative_exact(theta, t) if self.dynbc else None
        _, f2 = self.nonlinearity(v, v, dn)
        return -v - laplace_beltrami_exact(theta, t) - f2


def get_problem(name: str, t_max: float = 1.0) -> ProblemSpec:
    if name not in PROBLEMS:
        raise ValueError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}")
    mixing = name.endswith("mixing")
    return ProblemSpec(name=name,
                       f_bulk=_square if mixing else _zero,
                       f_surf=_mixing if mixing else _allen_cahn,
                       dynbc=name.startswith("dynbc"),
                       t_max=t_max)


def rho1(x, t, problem: ProblemSpec):
    return problem.rho1(x, t)


def rho2(theta, t, problem: ProblemSpec):
    return problem.rho2(theta, t)


class NodalForcing:
    """Mass-transformed right-hand side ``(t, u, v) -> (g1, g2)`` of the nodal system.

    Reaction terms are evaluated nodally; inhomogeneities enter as quadrature
    load vectors divided by the lumped masses.

    For dynamic boundary conditions ``g2`` also carries ``-du/dn``.  With
    ``neumann="variational"`` (default) the normal derivative is the one implied
    by Green's formula on the boundary rows of the bulk equation,

        M_G w = (A u)_G + M_OG (u'_G - g1_G),   u'_G = B v + g2 - w,

    solved for ``w`` entrywise.  ``neumann="edge-flux"`` uses
    ``M_G^{-1} N u`` with the edge-flux matrix ``N`` instead.
    """

    def __init__(self, problem: ProblemSpec, mesh: TriMesh, fem: FemOperators,
                 neumann: str = "variational"):
        if neumann not in NEUMANN_TRACES:
            raise ValueError(f"unknown Neumann trace {neumann!r}")
        self.problem = problem
        self.fem = fem
        self.neumann_kind = neumann
        self._bulk_quad = BulkQuadrature(mesh)
        self._surf_quad = SurfaceQuadrature(mesh)
        self._inv_mass_bulk = 1.0 / fem.mass_bulk
        self._inv_mass_surf = 1.0 / fem.mass_surf
        self._mass_ratio = fem.mass_bulk[fem.trace_map] / fem.mass_surf

    def _parts(self, t, u, v):
        p = self.problem
        g1 = p.f_bulk(u) + self._inv_mass_bulk * self._bulk_quad.load(
            p.rho1(self._bulk_quad.points, t))
        g2 = p.f_surf(u[self.fem.trace_map], v) + self._inv_mass_surf * self._surf_quad.load(
            p.rho2(self._surf_quad.angles, t))
        return g1, g2

    def _neumann(self, u, v, g1, g2):
        fem = self.fem
        if self.neumann_kind == "edge-flux":
            return self._inv_mass_surf * (fem.neumann_mat @ u)
        r = self._mass_ratio
        flux = self._inv_mass_surf * (fem.stiff_bulk @ u)[fem.trace_map]
        bv = -self._inv_mass_surf * (fem.stiff_surf @ v)
        return (flux + r * (bv + g2 - g1[fem.trace_map])) / (1.0 + r)

    def neumann(self, t: float, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Discrete normal derivative of ``u`` at the surface nodes."""
        g1, g2 = self._parts(t, u, v)
        return self._neumann(u, v, g1, g2)

    def __call__(self, t: float, u: np.ndarray, v: np.ndarray):
        g1, g2 = self._parts(t, u, v)
        if self.problem.dynbc:
            g2 = g2 - self._neumann(u, v, g1, g2)
        return g1, g2


def interpolate_exact(problem: ProblemSpec, mesh: TriMesh, fem: FemOperators, t: float):
    """Nodal interpolants ``(u, v)`` of the exact solution at time ``t``."""
    u = problem.exact_u(mesh.nodes, t)
    return u, u[fem.trace_map].copy()
