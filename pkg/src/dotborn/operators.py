"""Discrete operators of the coupled-monopole model.

For a grid of N voxels with contrasts delta_alpha_n = kappa_n * alpha0:

* polarizabilities   chi_n = -v delta_alpha_n / (1 + Q_F delta_alpha_n)
* G0vv               zero-diagonal matrix of g_free between voxel centers
* W                  S G0vv S with S = diag(|chi|^(1/2)), real symmetric
* W_c                S_c G0vv S_c with S_c = diag(sqrt(-chi)), complex symmetric
* sign operator      +1 where delta_alpha >= 0, -1 elsewhere

The interaction matrix V = diag(chi) factors as ``-S Sigma S`` and as
``-S_c S_c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import PoleContrastError
from .geometry import POLE_TOL, ProbeLayout, VoxelGrid
from .green import g_free_matrix

# rows per block when scaling N x N matrices in place
_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class Polarizabilities:
    chis: np.ndarray
    q_f: float
    v: float


@dataclass(frozen=True, eq=False)
class ProbeMatrices:
    g0_dv: np.ndarray  # (N_d, N)
    g0_vs: np.ndarray  # (N, N_s)
    g0_ds: np.ndarray  # (N_d, N_s)


def polarizabilities(grid: VoxelGrid, use_self_energy: bool = True) -> Polarizabilities:
    """Per-voxel polarizabilities; ``use_self_energy=False`` sets Q_F = 0."""
    alpha = grid.kappas * grid.medium.alpha0
    q_f = grid.q_f if use_self_energy else 0.0
    denom = 1.0 + q_f * alpha
    if np.any(np.abs(denom) < POLE_TOL):
        k = int(np.argmin(np.abs(denom)))
        raise PoleContrastError(f"voxel {k} with kappa={grid.kappas[k]} is at the polarizability pole")
    chis = -grid.volume * alpha / denom
    return Polarizabilities(chis=chis, q_f=q_f, v=grid.volume)


def assemble_g0vv(grid: VoxelGrid) -> np.ndarray:
    """Volume-to-volume Green's matrix with zero diagonal."""
    n = grid.n
    if n == 0:
        return np.zeros((0, 0))
    medium = grid.medium
    dist = cdist(grid.centers, grid.centers)
    np.fill_diagonal(dist, 1.0)
    g = np.multiply(dist, -medium.kd)
    np.exp(g, out=g)
    g /= dist
    del dist
    g *= 1.0 / (4.0 * np.pi * medium.d0)
    np.fill_diagonal(g, 0.0)
    return g


def _scale_symmetric(g, s):
    """In place g_ij *= s_i s_j; the product s_i s_j is formed once per entry
    so a symmetric ``g`` stays exactly symmetric."""
    n = g.shape[0]
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        g[lo:hi] *= s[lo:hi, None] * s[None, :]
    return g


def _check_pol(grid, pol):
    if pol.chis.shape[0] != grid.n:
        raise ValueError(f"polarizabilities for {pol.chis.shape[0]} voxels, grid has {grid.n}")


def assemble_w(grid: VoxelGrid, pol: Polarizabilities, g0vv=None) -> np.ndarray:
    """Real symmetric kernel W = S G0vv S.

    Pass ``g0vv`` to reuse an assembled Green's matrix; it is scaled in
    place and returned.
    """
    _check_pol(grid, pol)
    g = assemble_g0vv(grid) if g0vv is None else g0vv
    return _scale_symmetric(g, np.sqrt(np.abs(pol.chis)))


def sqrt_factors(pol: Polarizabilities, branch: int = 1) -> np.ndarray:
    """Diagonal of S_c: principal square roots of -chi, times ``branch`` (+1 or -1)."""
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    return branch * np.sqrt(-pol.chis.astype(complex))


def assemble_wc(grid: VoxelGrid, pol: Polarizabilities, branch: int = 1) -> np.ndarray:
    """Complex symmetric kernel W_c = S_c G0vv S_c.

    Real-valued (equal to W) when every contrast is positive.
    """
    _check_pol(grid, pol)
    g = assemble_g0vv(grid).astype(complex)
    return _scale_symmetric(g, sqrt_factors(pol, branch))


def assemble_sigma(grid: VoxelGrid) -> np.ndarray:
    """Diagonal of the sign operator, +1 for kappa >= 0 and -1 otherwise."""
    return np.where(grid.kappas >= 0, 1.0, -1.0)


def assemble_probes(grid: VoxelGrid, probes: ProbeLayout) -> ProbeMatrices:
    probes.check_against(grid)
    medium = grid.medium
    return ProbeMatrices(
        g0_dv=g_free_matrix(probes.detectors, grid.centers, medium),
        g0_vs=g_free_matrix(grid.centers, probes.sources, medium),
        g0_ds=g_free_matrix(probes.detectors, probes.sources, medium),
    )


def incident_field(grid: VoxelGrid, probes: ProbeLayout) -> np.ndarray:
    """Field of the point sources at each voxel center, shape (N, N_s)."""
    probes.check_against(grid)
    return g_free_matrix(grid.centers, probes.sources, grid.medium) * probes.strengths[None, :]
