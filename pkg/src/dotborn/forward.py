"""Forward problem: T-matrix, Born iteration and the source-detector data function."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .geometry import ProbeLayout, VoxelGrid
from .linalg import eig_general_all, solve_linear
from .operators import (
    Polarizabilities,
    assemble_g0vv,
    assemble_probes,
    assemble_sigma,
    assemble_w,
)

NONE = "none"
RESIDUAL_GROWTH = "residual_growth"
OVERFLOW_CAP = "overflow_cap"

GROWTH_WINDOW = 10
OVERFLOW_FACTOR = 1e12


def tmatrix_direct(grid: VoxelGrid, pol: Polarizabilities) -> np.ndarray:
    """T = (I - V G0vv)^-1 V with V = diag(chi)."""
    n = grid.n
    if n == 0:
        return np.zeros((0, 0))
    a = assemble_g0vv(grid)
    a *= -pol.chis[:, None]
    a[np.diag_indices(n)] += 1.0
    return solve_linear(a, np.diag(pol.chis))


def tmatrix_symmetric(grid: VoxelGrid, pol: Polarizabilities) -> np.ndarray:
    """T = -S (Sigma + W)^-1 S, valid for mixed-sign contrast."""
    n = grid.n
    if n == 0:
        return np.zeros((0, 0))
    s = np.sqrt(np.abs(pol.chis))
    a = assemble_w(grid, pol)
    a[np.diag_indices(n)] += assemble_sigma(grid)
    x = solve_linear(a, np.diag(s))
    return -s[:, None] * x


@dataclass(eq=False)
class BornReport:
    converged: bool
    iterations: int
    residuals: List[float]
    divergence_flag: str
    dipoles: np.ndarray
    update_norms: List[float] = field(default_factory=list, repr=False)


def born_iterate(
    grid: VoxelGrid,
    pol: Polarizabilities,
    u_inc,
    tol: float = 1e-10,
    max_iter: int = 10000,
    g0vv: Optional[np.ndarray] = None,
) -> BornReport:
    """Partial sums of the Born series for the dipoles,
    d_(k+1) = V (u_inc + G0vv d_k), starting from d_0 = V u_inc.

    ``residuals[k]`` is ||d_(k+1) - d_k|| / ||d_k||. The run is declared
    divergent when the update norm ||d_(k+1) - d_k|| grows for
    GROWTH_WINDOW consecutive iterations, or when ||d|| passes
    OVERFLOW_FACTOR * ||d_0||.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    u = np.asarray(u_inc, dtype=float)
    vec = u.ndim == 1
    if vec:
        u = u[:, None]
    if u.shape[0] != grid.n:
        raise ValueError(f"incident field has {u.shape[0]} rows, grid has {grid.n} voxels")
    g = assemble_g0vv(grid) if g0vv is None else g0vv
    chi = pol.chis[:, None]
    d = chi * u
    d0_norm = float(np.linalg.norm(d))
    residuals, updates = [], []
    converged, flag, growth = False, NONE, 0
    for _ in range(max_iter):
        d_new = chi * (u + g @ d)
        step = float(np.linalg.norm(d_new - d))
        norm = float(np.linalg.norm(d))
        if norm > 0:
            residuals.append(step / norm)
        else:
            residuals.append(0.0 if step == 0 else float("inf"))
        if updates and step > updates[-1]:
            growth += 1
        else:
            growth = 0
        updates.append(step)
        d = d_new
        if residuals[-1] <= tol:
            converged = True
            break
        if growth >= GROWTH_WINDOW:
            flag = RESIDUAL_GROWTH
            break
        if float(np.linalg.norm(d)) > OVERFLOW_FACTOR * d0_norm:
            flag = OVERFLOW_CAP
            break
    return BornReport(
        converged=converged,
        iterations=len(residuals),
        residuals=residuals,
        divergence_flag=flag,
        dipoles=d[:, 0] if vec else d,
        update_norms=updates,
    )


@dataclass(frozen=True, eq=False)
class DataFunction:
    g_ds: np.ndarray
    g0_ds: np.ndarray
    delta: np.ndarray


def data_function(
    grid: VoxelGrid,
    pol: Polarizabilities,
    probes: ProbeLayout,
    tmatrix: Optional[np.ndarray] = None,
) -> DataFunction:
    """Perturbed source-to-detector Green's matrix G0ds + G0dv T G0vs.

    Unit-strength Green's functions; source strengths are not applied.
    """
    pm = assemble_probes(grid, probes)
    if grid.n == 0:
        delta = np.zeros_like(pm.g0_ds)
    else:
        t = tmatrix_direct(grid, pol) if tmatrix is None else tmatrix
        delta = pm.g0_dv @ t @ pm.g0_vs
    return DataFunction(g_ds=pm.g0_ds + delta, g0_ds=pm.g0_ds, delta=delta)


def first_born_delta(grid: VoxelGrid, probes: ProbeLayout) -> np.ndarray:
    """First-Born data perturbation -G0dv diag(v delta_alpha) G0vs."""
    pm = assemble_probes(grid, probes)
    weights = grid.volume * grid.kappas * grid.medium.alpha0
    return -(pm.g0_dv * weights[None, :]) @ pm.g0_vs


def convergence_radius(grid: VoxelGrid, pol: Polarizabilities) -> float:
    """Spectral radius of V G0vv, i.e. max |eigenvalue| of W_c.

    The Born series converges iff the result is below 1. Computed from
    Sigma W, which is similar to W_c.
    """
    if grid.n == 0:
        return 0.0
    m = assemble_w(grid, pol)
    m *= assemble_sigma(grid)[:, None]
    return float(np.max(np.abs(eig_general_all(m, overwrite=True).values)))
