"""Sparse products, SPD solves and the action of the matrix exponential."""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

EXPMV_TOL = 1e-10
SOLVE_TOL = 1e-11
MAX_DEGREE = 55
MAX_SUBSTEPS = 10_000


class SolverError(RuntimeError):
    """Raised when an SPD solve fails; ``residual`` holds the last relative residual."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class ExpmvError(RuntimeError):
    def __init__(self, message, estimate=float("nan")):
        super().__init__(message)
        self.estimate = estimate


def as_sparse(a) -> sp.csr_matrix:
    """CSR copy with sorted indices and duplicates summed."""
    m = sp.csr_matrix(a, dtype=float, copy=True)
    m.sum_duplicates()
    m.sort_indices()
    return m


def spmv(a, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if a.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {a.shape} times vector {x.shape}")
    return a @ x


class SpdSolver:
    """Reusable solver for a sparse symmetric positive definite matrix.

    Uses a sparse LU with symmetric fill-reducing ordering and no pivoting
    (which for an SPD matrix is a scaled Cholesky factorisation); the
    ``"cg"`` method runs Jacobi-preconditioned conjugate gradients instead.
    """

    def __init__(self, a, tol: float = SOLVE_TOL, method: str = "direct", maxiter: int | None = None):
        if not 0.0 < tol <= 1e-6:
            raise ValueError(f"tol must lie in (0, 1e-6], got {tol}")
        self.a = as_sparse(a)
        n = self.a.shape[0]
        if self.a.shape != (n, n):
            raise ValueError(f"matrix must be square, got {self.a.shape}")
        self.tol = tol
        self.method = method
        self.maxiter = maxiter or max(10 * n, 100)
        self._lu = None
        if n == 0:
            return
        diag = self.a.diagonal()
        if np.any(diag <= 0.0):
            raise SolverError(f"matrix is not positive definite: diagonal entry {diag.min():.3e}")
        if method == "direct":
            try:
                self._lu = spla.splu(self.a.tocsc(), permc_spec="MMD_AT_PLUS_A",
                                     diag_pivot_thresh=0.0,
                                     options={"SymmetricMode": True})
            except RuntimeError as exc:
                raise SolverError(f"factorisation failed: {exc}") from exc
            pivots = self._lu.U.diagonal()
            if np.any(pivots <= 0.0):
                raise SolverError("matrix is not positive definite: non-positive pivot")
        elif method != "cg":
            raise ValueError(f"unknown method {method!r}")

    @property
    def shape(self):
        return self.a.shape

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.a.shape[0]:
            raise ValueError(f"dimension mismatch: {self.a.shape} vs {b.shape}")
        if b.shape[0] == 0:
            return b.copy()
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros_like(b)
        if self._lu is not None:
            x = self._lu.solve(b)
            # One step of iterative refinement keeps the residual at round-off level.
            x += self._lu.solve(b - self.a @ x)
        else:
            x = self._pcg(b, bnorm)
        res = np.linalg.norm(self.a @ x - b) / bnorm
        if not res <= self.tol:
            raise SolverError(f"residual {res:.3e} above tolerance {self.tol:.1e}", res)
        return x

    def _pcg(self, b, bnorm):
        dinv = 1.0 / self.a.diagonal()
        x = np.zeros_like(b)
        r = b.copy()
        z = dinv * r
        p = z.copy()
        rz = r @ z
        for _ in range(self.maxiter):
            ap = self.a @ p
            curv = p @ ap
            if curv <= 0.0:
                raise SolverError("matrix is not positive definite: non-positive curvature",
                                  np.linalg.norm(r) / bnorm)
            alpha = rz / curv
            x += alpha * p
            r -= alpha * ap
            if np.linalg.norm(r) <= 0.1 * self.tol * bnorm:
                return x
            z = dinv * r
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise SolverError(f"CG did not converge in {self.maxiter} iterations",
                          np.linalg.norm(r) / bnorm)


def spd_solve(a, b: np.ndarray, tol: float = SOLVE_TOL) -> np.ndarray:
    return SpdSolver(a, tol=tol).solve(b)


def _onenorm(a) -> float:
    if sp.issparse(a):
        return float(abs(a).sum(axis=0).max()) if a.shape[0] else 0.0
    if isinstance(a, np.ndarray):
        return float(np.abs(a).sum(axis=0).max()) if a.size else 0.0
    return float(spla.onenormest(spla.aslinearoperator(a)))


def _taylor_tail(theta: float, m: int) -> float:
    """Bound on ``sum_{k>m} theta^k / k!`` valid for ``theta < m + 2``."""
    if theta == 0.0:
        return 0.0
    log_lead = (m + 1) * math.log(theta) - math.lgamma(m + 2)
    return math.exp(log_lead) / (1.0 - theta / (m + 2))


def _substeps_for_degree(norm: float, m: int, tol: float) -> int | None:
    """Smallest substep count ``s`` with per-step tail at most ``tol / s``."""
    def ok(s):
        theta = norm / s
        return theta < m + 2 and _taylor_tail(theta, m) <= tol / s

    if not ok(MAX_SUBSTEPS):
        return None
    lo, hi = 1, MAX_SUBSTEPS
    if ok(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def select_degree(norm: float, tol: float, max_degree: int = MAX_DEGREE) -> tuple[int, int]:
    """Taylor degree ``m`` and substep count ``s`` minimising the matvec count ``m * s``.

    ``norm`` is the 1-norm of ``t A``.  Each substep truncates the series of
    ``exp(t A / s)`` after degree ``m`` with tail at most ``tol / s``.
    """
    if norm == 0.0:
        return 0, 1
    best = None
    for m in range(1, max_degree + 1):
        s = _substeps_for_degree(norm, m, tol)
        if s is not None and (best is None or m * s < best[0] * best[1]):
            best = (m, s)
    if best is None:
        raise ExpmvError(f"||tA||_1 = {norm:.3e} needs more than {MAX_SUBSTEPS} substeps")
    return best


def expmv(t: float, a, b: np.ndarray, tol: float = EXPMV_TOL, shift: bool = True) -> np.ndarray:
    """Compute ``exp(t A) b`` by scaled, truncated Taylor series.

    ``a`` is a dense or sparse matrix or a ``LinearOperator``.  The operator is
    shifted by the mean of its diagonal, ``t A`` is split into ``s`` substeps,
    and each substep sums the series until two consecutive terms fall below
    the per-step tolerance or the selected degree is reached.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"dimension mismatch: operator {a.shape}, vector {b.shape}")
    if t == 0.0 or n == 0:
        return b.copy()

    mu = 0.0
    if shift and (sp.issparse(a) or isinstance(a, np.ndarray)):
        mu = float(a.diagonal().sum()) / n
        a = a - mu * (sp.identity(n, format="csr") if sp.issparse(a) else np.eye(n))
    matvec = a.__matmul__ if not hasattr(a, "matvec") else a.matvec

    norm = t * _onenorm(a)
    m, s = select_degree(norm, tol)
    h = t / s
    eta = math.exp(mu * h)
    bnorm = np.linalg.norm(b, 1)
    step_tol = tol / s
    f = b.copy()
    for _ in range(s):
        fnorm = np.linalg.norm(f, 1)
        scale = max(fnorm, bnorm)
        c1 = fnorm
        term = f
        for k in range(1, m + 1):
            term = (h / k) * matvec(term)
            c2 = np.linalg.norm(term, 1)
            f = f + term
            if c1 + c2 <= step_tol * scale:
                break
            c1 = c2
        f = eta * f
        if not np.all(np.isfinite(f)):
            raise ExpmvError("non-finite values in the Taylor recursion", np.inf)
    return f
