"""Dense eigensolvers, linear solves and shifted power iteration.

Matrices are plain numpy arrays. The routines here only add the contracts
the rest of the package relies on: symmetry checks, deterministic
eigenvalue ordering, pivot and residual checks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import (
    IllConditionedWarning,
    NoConvergenceError,
    NotSymmetricError,
    SingularMatrixError,
)

SYMMETRY_TOL = 1e-12
PIVOT_TOL = 1e-14
COND_WARN = 1e12
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectrumR:
    values: np.ndarray  # descending
    n: int
    residual_bound: Optional[float] = None


@dataclass(frozen=True, eq=False)
class SpectrumC:
    values: np.ndarray  # descending real part, ties by descending imaginary part
    n: int


def sort_real_desc(values) -> np.ndarray:
    return np.sort(np.asarray(values, dtype=float))[::-1].copy()


def sort_complex_desc(values) -> np.ndarray:
    """Order by descending real part, then descending imaginary part."""
    v = np.asarray(values, dtype=complex)
    order = np.lexsort((-v.imag, -v.real))
    return v[order]


def symmetry_defect(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.T))) if m.size else 0.0


def _check_square(m):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")


def eig_sym_all(m, vectors: bool = False) -> SpectrumR:
    """All eigenvalues of a real symmetric matrix, sorted descending.

    With ``vectors=True`` the eigenvectors are also computed and the
    returned spectrum carries ``max |m v - w v|``.
    """
    m = np.asarray(m, dtype=float)
    _check_square(m)
    n = m.shape[0]
    if n == 0:
        return SpectrumR(values=np.zeros(0), n=0, residual_bound=0.0 if vectors else None)
    scale = float(np.max(np.abs(m)))
    if symmetry_defect(m) > SYMMETRY_TOL * scale:
        raise NotSymmetricError(f"symmetry defect {symmetry_defect(m):.3g} exceeds {SYMMETRY_TOL:g} * max|m|")
    try:
        if vectors:
            w, v = sla.eigh(m, driver="evd", check_finite=True)
            resid = float(np.max(np.linalg.norm(m @ v - v * w, axis=0)))
        else:
            w = sla.eigh(m, eigvals_only=True, driver="evd", check_finite=True)
            resid = None
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(f"symmetric eigensolver failed: {exc}") from exc
    return SpectrumR(values=w[::-1].copy(), n=n, residual_bound=resid)


def eig_general_all(m, overwrite: bool = False) -> SpectrumC:
    """All eigenvalues of a general (real or complex) square matrix."""
    m = np.asarray(m)
    _check_square(m)
    n = m.shape[0]
    if n == 0:
        return SpectrumC(values=np.zeros(0, dtype=complex), n=0)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    try:
        w = sla.eigvals(m, overwrite_a=overwrite, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(f"general eigensolver failed: {exc}") from exc
    return SpectrumC(values=sort_complex_desc(w), n=n)


def solve_linear(m, rhs):
    """Solve ``m x = rhs`` by LU factorization.

    Raises SingularMatrixError when a pivot falls below ``1e-14 * ||m||`` or
    the multiply-back residual exceeds ``1e-10 * ||m|| ||x||``. Warns with
    IllConditionedWarning when the condition estimate exceeds 1e12.
    """
    m = np.asarray(m)
    _check_square(m)
    rhs = np.asarray(rhs)
    if rhs.shape[0] != m.shape[0]:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, matrix has {m.shape[0]}")
    n = m.shape[0]
    if n == 0:
        return np.zeros(rhs.shape, dtype=np.result_type(m, rhs))
    norm = float(np.linalg.norm(m, 1))
    if norm == 0:
        raise SingularMatrixError("zero matrix")
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrixError
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(m, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOL * norm:
        raise SingularMatrixError(f"pivot {pivots.min():.3g} below {PIVOT_TOL:g} * ||m||")
    (gecon,) = sla.get_lapack_funcs(("gecon",), (lu,))
    rcond, _ = gecon(lu, norm, norm="1")
    if rcond * COND_WARN < 1.0:
        warnings.warn(f"condition estimate {1 / max(rcond, 1e-300):.3g} exceeds {COND_WARN:g}", IllConditionedWarning)
    x = sla.lu_solve((lu, piv), rhs, check_finite=False)
    residual = float(np.linalg.norm(m @ x - rhs))
    bound = RESIDUAL_TOL * float(np.linalg.norm(m)) * float(np.linalg.norm(x))
    if residual > bound and residual > 0:
        raise SingularMatrixError(f"residual {residual:.3g} exceeds {bound:.3g}")
    return x


@dataclass(frozen=True)
class PowerResult:
    w_max: float
    iterations: int
    residual: float


def _power_run(m, shift, tol, max_iter, x):
    x = x / np.linalg.norm(x)
    lam, resid = 0.0, np.inf
    for it in range(1, max_iter + 1):
        y = m @ x
        y += shift * x
        lam = float(x @ y)
        resid = float(np.linalg.norm(y - lam * x)) / max(abs(lam), 1e-300)
        if resid <= tol:
            return lam - shift, it, resid, True
        ny = np.linalg.norm(y)
        if ny == 0:
            return lam - shift, it, resid, False
        x = y / ny
    return lam - shift, max_iter, resid, False


def power_max_shifted(m, shift: float = 1.0, tol: float = 1e-10, max_iter: int = 10000) -> PowerResult:
    """Algebraically largest eigenvalue of a symmetric matrix by power iteration
    on ``m + shift * I``.

    The shift must make ``m + shift * I`` positive definite; 1.0 suffices
    when every eigenvalue is above -1. Iteration stops when the relative
    Rayleigh residual ``||y - rho x|| / |rho|`` drops to ``tol``. The start
    vector is the normalized all-ones vector; if that lands on a zero
    eigenvalue of a nonzero matrix, the run is repeated once from a seeded
    perturbation and the larger estimate kept.
    """
    m = np.asarray(m, dtype=float)
    _check_square(m)
    n = m.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    lam, it, resid, ok = _power_run(m, shift, tol, max_iter, np.ones(n))
    scale = float(np.max(np.abs(m)))
    if scale > 0 and abs(lam) <= 10 * tol * scale:
        rng = np.random.default_rng(12345)
        lam2, it2, resid2, ok2 = _power_run(m, shift, tol, max_iter, np.ones(n) + 1e-3 * rng.standard_normal(n))
        it += it2
        if lam2 > lam:
            lam, resid, ok = lam2, resid2, ok2
    if not ok:
        raise NoConvergenceError(
            f"power iteration did not reach tol={tol:g} in {max_iter} iterations (residual {resid:.3g})",
            best=lam,
            iterations=it,
        )
    return PowerResult(w_max=lam, iterations=it, residual=resid)
