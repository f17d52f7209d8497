"""Dense realisation of the abstract operator framework on tiny meshes.

Everything here uses dense matrices and ``scipy.linalg.expm`` (scaling and
squaring with Pade approximants), so it shares no code with the sparse Taylor
path in :mod:`bssplit.linops`.

Conventions: bulk vectors live in ``R^{N_Omega}`` (all nodes).  ``T0(t)`` is
the Dirichlet heat semigroup, which ignores boundary entries of its argument
and returns zeros there; ``A0`` is its generator on the interior nodes.
``D0`` maps surface data to discretely harmonic bulk vectors and ``B`` is the
(negated, mass-transformed) discrete Laplace-Beltrami operator.  The pair
operators act on ``R^{N_Omega} x R^{N_Gamma}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad_vec

from .fem import assemble
from .mesh import TriMesh

MAX_BULK_NODES = 200
QUAD_TOL = 1e-9
QUAD_LIMIT = 2 ** 12


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class DenseFramework:
    A0: np.ndarray         # (N_I, N_I)
    B: np.ndarray          # (N_G, N_G)
    D0: np.ndarray         # (N_O, N_G)
    interior: np.ndarray
    boundary: np.ndarray   # bulk index of surface DOF k
    mass_bulk: np.ndarray
    mass_surf: np.ndarray
    A_full: np.ndarray     # (N_O, N_O) mass-transformed bulk stiffness, negated

    @property
    def n_bulk(self) -> int:
        return self.D0.shape[0]

    @property
    def n_surf(self) -> int:
        return self.B.shape[0]

    @property
    def n(self) -> int:
        return self.n_bulk + self.n_surf

    # -- projections between all bulk nodes and interior nodes
    def restrict(self, x):
        return x[self.interior]

    def prolong(self, xi):
        out = np.zeros((self.n_bulk,) + xi.shape[1:])
        out[self.interior] = xi
        return out

    @cached_property
    def _P(self):
        return np.eye(self.n_bulk)[self.interior]

    def T0(self, t: float) -> np.ndarray:
        return self._P.T @ sla.expm(t * self.A0) @ self._P

    def S(self, t: float) -> np.ndarray:
        return sla.expm(t * self.B)

    @cached_property
    def A0_full(self) -> np.ndarray:
        return self._P.T @ self.A0 @ self._P

    def V(self, tau: float) -> np.ndarray:
        return -tau * self.T0(tau) @ self.D0 @ self.B @ self.S(tau)

    def V_k(self, tau: float, k: int) -> np.ndarray:
        return sum(self.T0((k - 1 - j) * tau) @ self.V(tau) @ self.S(j * tau) for j in range(k))

    def block(self, a, b, c, d) -> np.ndarray:
        return np.block([[a, b], [c, d]])

    def _zero_gb(self):
        return np.zeros((self.n_surf, self.n_bulk))

    def R0(self) -> np.ndarray:
        return self.block(np.eye(self.n_bulk), -self.D0, self._zero_gb(), np.eye(self.n_surf))

    def R0_inv(self) -> np.ndarray:
        return self.block(np.eye(self.n_bulk), self.D0, self._zero_gb(), np.eye(self.n_surf))

    def sub_T1(self, tau):
        return self.block(self.T0(tau), np.zeros_like(self.D0), self._zero_gb(), np.eye(self.n_surf))

    def sub_T2(self, tau):
        return self.block(np.eye(self.n_bulk), -tau * self.D0 @ self.B, self._zero_gb(),
                          np.eye(self.n_surf))

    def sub_T3(self, tau):
        return self.block(np.eye(self.n_bulk), np.zeros_like(self.D0), self._zero_gb(), self.S(tau))

    def split_T(self, tau: float) -> np.ndarray:
        """Splitting operator ``T(tau)`` with upper-right block ``V + D0 S - T0 D0``."""
        t0, s = self.T0(tau), self.S(tau)
        upper = self.V(tau) + self.D0 @ s - t0 @ self.D0
        return self.block(t0, upper, self._zero_gb(), s)

    def Q0_exact(self, t: float) -> np.ndarray:
        """``Q0(t) = -int_0^t T0(t-s) D0 B S(s) ds`` from one block exponential."""
        ni, ng = len(self.interior), self.n_surf
        big = np.zeros((ni + ng, ni + ng))
        big[:ni, :ni] = self.A0
        big[:ni, ni:] = -(self.D0 @ self.B)[self.interior]
        big[ni:, ni:] = self.B
        e = sla.expm(t * big)
        return self.prolong(e[:ni, ni:])

    def exact_T(self, t: float) -> np.ndarray:
        """Exact linear flow ``calT(t)`` with ``Q = Q0 + D0 S - T0 D0``."""
        t0, s = self.T0(t), self.S(t)
        q = self.Q0_exact(t) + self.D0 @ s - t0 @ self.D0
        return self.block(t0, q, self._zero_gb(), s)

    def generator(self) -> np.ndarray:
        """Generator of the reduced ODE in ``(u_I, v)``: ``u_I' = -(A u)_I``, ``v' = B v``."""
        ni = len(self.interior)
        g = np.zeros((ni + self.n_surf,) * 2)
        g[:ni, :ni] = -self.A_full[np.ix_(self.interior, self.interior)]
        g[:ni, ni:] = -self.A_full[np.ix_(self.interior, self.boundary)]
        g[ni:, ni:] = self.B
        return g

    def pair_to_reduced(self, u, v):
        return np.concatenate([u[self.interior], v])

    def reduced_to_pair(self, z):
        ni = len(self.interior)
        u = np.empty(self.n_bulk)
        u[self.interior] = z[:ni]
        u[self.boundary] = z[ni:]
        return u, u[self.boundary].copy()


def from_mesh(mesh: TriMesh, max_nodes: int = MAX_BULK_NODES) -> DenseFramework:
    if mesh.n_nodes > max_nodes:
        raise OracleError(f"mesh has {mesh.n_nodes} bulk nodes, cap is {max_nodes}")
    fem = assemble(mesh)
    a = fem.stiff_bulk.toarray()
    g = np.asarray(fem.trace_map)
    mask = np.ones(mesh.n_nodes, dtype=bool)
    mask[g] = False
    i = np.flatnonzero(mask)
    a_full = a / fem.mass_bulk[:, None]
    a0 = -a_full[np.ix_(i, i)]
    b = -fem.stiff_surf.toarray() / fem.mass_surf[:, None]
    d0 = np.zeros((mesh.n_nodes, len(g)))
    d0[g] = np.eye(len(g))
    if len(i):
        d0[i] = -np.linalg.solve(a[np.ix_(i, i)], a[np.ix_(i, g)])
    return DenseFramework(A0=a0, B=b, D0=d0, interior=i, boundary=g,
                          mass_bulk=fem.mass_bulk, mass_surf=fem.mass_surf, A_full=a_full)


def q0_quadrature(fw: DenseFramework, t: float, y: np.ndarray, tol: float = QUAD_TOL,
                  full_output: bool = False):
    """Adaptive Gauss-Kronrod (7-15) evaluation of ``-int_0^t T0(t-s) D0 S(s) B y ds``.

    ``y`` may be a vector or a matrix of column vectors.  With
    ``full_output`` the quadrature's own error estimate is returned as well.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    y = np.asarray(y, dtype=float)
    if t == 0 or len(fw.interior) == 0:
        res, err = np.zeros((fw.n_bulk,) + y.shape[1:]), 0.0
        return (res, err) if full_output else res
    by = fw.B @ y

    def integrand(s):
        w = sla.expm((t - s) * fw.A0) @ (fw.D0 @ (fw.S(s) @ by))[fw.interior]
        return -w

    res, err, info = quad_vec(integrand, 0.0, t, epsabs=tol, epsrel=0.0, norm="max",
                              quadrature="gk15", limit=QUAD_LIMIT, full_output=True)
    if not info.success:
        raise OracleError(f"quadrature did not converge: {info.message}")
    out = fw.prolong(res)
    return (out, err) if full_output else out


def q_quadrature(fw: DenseFramework, t: float, y: np.ndarray, tol: float = QUAD_TOL):
    """Interior part of ``Q(t) y = -A0 int_0^t T0(t-s) D0 S(s) y ds`` by quadrature."""
    y = np.asarray(y, dtype=float)
    if t == 0 or len(fw.interior) == 0:
        return np.zeros((len(fw.interior),) + y.shape[1:])

    def integrand(s):
        return -fw.A0 @ (sla.expm((t - s) * fw.A0) @ (fw.D0 @ (fw.S(s) @ y))[fw.interior])

    res, _, info = quad_vec(integrand, 0.0, t, epsabs=tol, epsrel=0.0, norm="max",
                            quadrature="gk15", limit=QUAD_LIMIT, full_output=True)
    if not info.success:
        raise OracleError(f"quadrature did not converge: {info.message}")
    return res


def verify_q_identity(fw: DenseFramework, t: float, tol: float = QUAD_TOL, basis=None) -> float:
    """Max deviation between both sides of the integration-by-parts identity for ``Q(t)``.

    Compared on interior rows, where ``A0`` acts; on boundary rows the right-hand
    side reduces to ``S(t) y``, the trace of the exact flow.
    """
    if not 0 < t <= 2:
        raise ValueError("t must lie in (0, 2]")
    basis = np.eye(fw.n_surf) if basis is None else np.asarray(basis, dtype=float)
    lhs = q_quadrature(fw, t, basis, tol)
    rhs = (q0_quadrature(fw, t, basis, tol) + fw.D0 @ fw.S(t) @ basis
           - fw.T0(t) @ fw.D0 @ basis)
    return float(np.max(np.abs(lhs - rhs[fw.interior]), initial=0.0))


def verify_splitting_factorization(fw: DenseFramework, tau: float) -> float:
    """``max |T(tau) - R0^{-1} T1 T2 T3 R0|`` over all entries."""
    lhs = fw.split_T(tau)
    rhs = fw.R0_inv() @ fw.sub_T1(tau) @ fw.sub_T2(tau) @ fw.sub_T3(tau) @ fw.R0()
    return float(np.max(np.abs(lhs - rhs)))


def verify_powers_formula(fw: DenseFramework, tau: float, k: int) -> float:
    """``max |T(tau)^k - closed form|`` with ``V_k = sum_j T0((k-1-j) tau) V S(j tau)``."""
    if k < 1 or k * tau > 2 + 1e-12:
        raise ValueError("need k >= 1 and k tau <= 2")
    power = np.linalg.matrix_power(fw.split_T(tau), k)
    t0k, sk = fw.T0(k * tau), fw.S(k * tau)
    upper = -t0k @ fw.D0 + fw.D0 @ sk + fw.V_k(tau, k)
    closed = fw.block(t0k, upper, fw._zero_gb(), sk)
    return float(np.max(np.abs(power - closed)))


def local_defect(fw: DenseFramework, tau: float, x, y) -> float:
    """``||(calT(tau) - T(tau)) (x, y)||_2``."""
    z = np.concatenate([x, y])
    return float(np.linalg.norm((fw.exact_T(tau) - fw.split_T(tau)) @ z))


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of ``log defect = slope * log tau + c``."""

    slope: float
    residual: float
    taus: np.ndarray
    defects: np.ndarray


def measure_local_error_rate(fw: DenseFramework, taus, x, y) -> RateFit:
    """Fitted slope of the single-step defect against ``tau``.

    The slope is ``nan`` when some defect vanishes (for instance ``y = 0``).
    """
    taus = np.asarray(taus, dtype=float)
    if len(taus) < 5:
        raise ValueError("need at least five step sizes")
    d = np.array([local_defect(fw, t, x, y) for t in taus])
    if np.any(d <= 0):
        return RateFit(math.nan, math.nan, taus, d)
    lx, ly = np.log(taus), np.log(d)
    coef = np.polyfit(lx, ly, 1)
    res = float(np.sqrt(np.mean((np.polyval(coef, lx) - ly) ** 2)))
    return RateFit(float(coef[0]), res, taus, d)


def operator_norm(fw: DenseFramework, m: np.ndarray) -> float:
    """Spectral norm in the lumped-mass inner product on both components."""
    w = np.sqrt(np.concatenate([fw.mass_bulk, fw.mass_surf]))
    return float(np.linalg.norm(w[:, None] * m / w[None, :], 2))


def measure_stability_growth(fw: DenseFramework, tau: float, k_max: int, zero_b: bool = False):
    """``||T(tau)^k||`` for ``k = 1..k_max`` in the mass-weighted spectral norm."""
    if k_max * tau > 2 + 1e-12:
        raise ValueError("need k_max tau <= 2")
    if zero_b:
        fw = replace(fw, B=np.zeros_like(fw.B))
    step = fw.split_T(tau)
    p = np.eye(fw.n)
    out = []
    for _ in range(k_max):
        p = step @ p
        out.append(operator_norm(fw, p))
    return np.array(out)


def growth_ratio(norms, k_min: int = 4) -> float:
    """Spread ``max/min`` of ``||T^k|| / (1 + log k)`` over ``k >= k_min``."""
    k = np.arange(1, len(norms) + 1)
    r = np.asarray(norms)[k_min - 1:] / (1.0 + np.log(k[k_min - 1:]))
    return float(r.max() / r.min())


def reference_trajectory(fw: DenseFramework, u0, v0, tau_ref: float, t_max: float, rhs=None,
                         every: int = 1):
    """Classical RK4 on the reduced ODE in ``(u_I, v)`` with dense operators.

    ``rhs(t, u, v)`` is the same mass-transformed forcing the splitting uses.
    Returns ``(times, us, vs)`` sampled every ``every`` steps.
    """
    n = int(round(t_max / tau_ref))
    g = fw.generator()
    ni = len(fw.interior)

    def f(t, z):
        dz = g @ z
        if rhs is not None:
            u, v = fw.reduced_to_pair(z)
            g1, g2 = rhs(t, u, v)
            dz[:ni] += g1[fw.interior]
            dz[ni:] += g2
        return dz

    z = fw.pair_to_reduced(np.asarray(u0, float), np.asarray(v0, float))
    times, us, vs = [0.0], [], []
    u, v = fw.reduced_to_pair(z)
    us.append(u)
    vs.append(v)
    for i in range(n):
        t = i * tau_ref
        k1 = f(t, z)
        k2 = f(t + tau_ref / 2, z + tau_ref / 2 * k1)
        k3 = f(t + tau_ref / 2, z + tau_ref / 2 * k2)
        k4 = f(t + tau_ref, z + tau_ref * k3)
        z = z + tau_ref / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if (i + 1) % every == 0:
            u, v = fw.reduced_to_pair(z)
            times.append((i + 1) * tau_ref)
            us.append(u)
            vs.append(v)
    return np.array(times), us, vs


# Rings of the three tiny meshes used by the identity suite (19, 37 and 61 nodes).
SUITE_RINGS = (2, 3, 4)
SUITE_SEED = 20240611


@dataclass(frozen=True)
class CheckResult:
    name: str
    mesh: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{tag}  {self.name:<22} {self.mesh:<14} value={self.value:.3e} bound={self.threshold:.3e}{extra}"


def generic_pair(fw: DenseFramework, seed: int = SUITE_SEED):
    """Fixed-seed pseudorandom ``(x, y)``."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal(fw.n_bulk), rng.standard_normal(fw.n_surf)


def run_suite(meshes, tau: float = 0.1, k_max_powers: int = 20, t_q: float = 0.5,
              quad_tol: float = QUAD_TOL, stability_tau: float = 0.01,
              stability_k: int = 200) -> list[CheckResult]:
    """Identity checks, local-defect slope and power growth on each mesh."""
    out = []
    for mesh in meshes:
        fw = from_mesh(mesh)
        label = f"N={mesh.n_nodes}"
        dev = verify_splitting_factorization(fw, tau)
        out.append(CheckResult("factorization", label, dev, 1e-10, dev <= 1e-10))
        dev_v = float(np.max(np.abs(fw.split_T(tau)[:fw.n_bulk, fw.n_bulk:]
                                    - (fw.V(tau) + fw.D0 @ fw.S(tau) - fw.T0(tau) @ fw.D0))))
        out.append(CheckResult("V block", label, dev_v, 1e-10, dev_v <= 1e-10))
        worst = max(verify_powers_formula(fw, tau, k) / k for k in range(1, k_max_powers + 1))
        out.append(CheckResult("powers (per k)", label, worst, 1e-10, worst <= 1e-10))
        dev_q = verify_q_identity(fw, t_q, quad_tol)
        out.append(CheckResult("Q identity", label, dev_q, 10 * quad_tol, dev_q <= 10 * quad_tol))
        x, y = generic_pair(fw)
        fit = measure_local_error_rate(fw, 0.1 * 2.0 ** -np.arange(6), x, y)
        out.append(CheckResult("local defect slope", label, fit.slope, 1.9, fit.slope >= 1.9,
                               f"residual={fit.residual:.2e}"))
        ratio = growth_ratio(measure_stability_growth(fw, stability_tau, stability_k))
        out.append(CheckResult("power growth ratio", label, ratio, 10.0, ratio <= 10.0))
    return out
