"""Voxelized absorption-contrast targets.

All builders take lengths in units of the diffuse wavelength and store
them internally in medium units (``Medium.lambda_d`` per wavelength).
Voxel centers live on a lattice of pitch ``h`` and are ordered
lexicographically by ``(x, y, z)``; zero-contrast voxels are never stored.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import (
    EmptyGridError,
    GeometryError,
    NonCommensurateError,
    PoleContrastError,
    SingularArgumentsError,
)
from .green import q_self
from .medium import DEFAULT_MEDIUM, Medium

COMMENSURATE_TOL = 1e-6
POLE_TOL = 1e-6


def _freeze(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Cubic voxels of pitch ``h`` carrying contrasts ``kappa = delta_alpha / alpha0``.

    Use :meth:`from_arrays` to build one from raw data; it drops zero
    contrasts and applies the canonical ordering before validation.
    """

    h: float
    centers: np.ndarray
    kappas: np.ndarray
    medium: Medium = DEFAULT_MEDIUM
    tag: str = "custom"
    q_f: float = field(init=False)

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        kappas = np.asarray(self.kappas, dtype=float).reshape(-1)
        if not self.h > 0:
            raise GeometryError(f"voxel pitch must be positive, got {self.h}")
        if centers.shape[0] != kappas.shape[0]:
            raise GeometryError(f"{centers.shape[0]} centers but {kappas.shape[0]} contrasts")
        if not (np.all(np.isfinite(centers)) and np.all(np.isfinite(kappas))):
            raise GeometryError("centers and contrasts must be finite")
        if np.any(kappas == 0):
            raise GeometryError("zero-contrast voxels must not be stored")
        if centers.shape[0] > 1:
            dist, _ = cKDTree(centers).query(centers, k=2)
            if dist[:, 1].min() < self.h * (1 - 1e-9):
                raise GeometryError(
                    f"voxel centers closer than the pitch (min distance {dist[:, 1].min():.6g}, h={self.h:.6g})"
                )
        q_f = q_self(self.h, self.medium)
        check_pole(kappas, q_f, self.medium)
        object.__setattr__(self, "centers", _freeze(centers))
        object.__setattr__(self, "kappas", _freeze(kappas))
        object.__setattr__(self, "q_f", q_f)

    @classmethod
    def from_arrays(cls, h, centers, kappas, medium: Medium = DEFAULT_MEDIUM, tag: str = "custom"):
        centers = np.asarray(centers, dtype=float).reshape(-1, 3)
        kappas = np.broadcast_to(np.asarray(kappas, dtype=float), (centers.shape[0],))
        keep = kappas != 0
        centers, kappas = centers[keep], kappas[keep]
        order = np.lexsort((centers[:, 2], centers[:, 1], centers[:, 0]))
        return cls(h=float(h), centers=centers[order], kappas=kappas[order], medium=medium, tag=tag)

    @property
    def n(self) -> int:
        return int(self.kappas.shape[0])

    def __len__(self):
        return self.n

    @property
    def volume(self) -> float:
        return self.h ** 3

    @property
    def h_over_lambda(self) -> float:
        return self.h / self.medium.lambda_d

    def with_kappas(self, kappas) -> "VoxelGrid":
        """Same lattice, new contrasts (zeros are dropped)."""
        return VoxelGrid.from_arrays(self.h, self.centers, kappas, self.medium, self.tag)

    def translated(self, shift) -> "VoxelGrid":
        return VoxelGrid.from_arrays(
            self.h, self.centers + np.asarray(shift, dtype=float), self.kappas, self.medium, self.tag
        )

    def digest(self) -> str:
        """SHA-256 over pitch, centers and contrasts; stable across runs."""
        sha = hashlib.sha256()
        sha.update(np.float64(self.h).tobytes())
        sha.update(self.centers.tobytes())
        sha.update(self.kappas.tobytes())
        return sha.hexdigest()


@dataclass(frozen=True, eq=False)
class ProbeLayout:
    """Point sources (with strengths) and point detectors, in medium units."""

    sources: np.ndarray
    detectors: np.ndarray
    strengths: Optional[np.ndarray] = None

    def __post_init__(self):
        src = np.asarray(self.sources, dtype=float).reshape(-1, 3)
        det = np.asarray(self.detectors, dtype=float).reshape(-1, 3)
        if self.strengths is None:
            q = np.ones(src.shape[0])
        else:
            q = np.asarray(self.strengths, dtype=float).reshape(-1)
        if q.shape[0] != src.shape[0]:
            raise GeometryError(f"{src.shape[0]} sources but {q.shape[0]} strengths")
        object.__setattr__(self, "sources", _freeze(src))
        object.__setattr__(self, "detectors", _freeze(det))
        object.__setattr__(self, "strengths", _freeze(q))

    @classmethod
    def from_lambda_units(cls, sources, detectors, strengths=None, medium: Medium = DEFAULT_MEDIUM):
        scale = medium.lambda_d
        return cls(
            sources=np.asarray(sources, dtype=float).reshape(-1, 3) * scale,
            detectors=np.asarray(detectors, dtype=float).reshape(-1, 3) * scale,
            strengths=strengths,
        )

    def swapped(self) -> "ProbeLayout":
        """Sources become detectors and vice versa (unit strengths)."""
        return ProbeLayout(sources=self.detectors, detectors=self.sources)

    def check_against(self, grid: VoxelGrid):
        """Raise if any probe lies within h/2 of a voxel center."""
        if grid.n == 0:
            return
        tree = cKDTree(grid.centers)
        for name, pts in (("source", self.sources), ("detector", self.detectors)):
            if pts.shape[0] == 0:
                continue
            dist, idx = tree.query(pts)
            bad = np.flatnonzero(dist < grid.h / 2)
            if bad.size:
                k = bad[0]
                raise SingularArgumentsError(
                    f"{name} {k} at {pts[k]} lies within h/2 of voxel center {grid.centers[idx[k]]}"
                )


def check_pole(kappas, q_f: float, medium: Medium = DEFAULT_MEDIUM):
    """Reject contrasts at the polarizability pole or beyond |kappa| Q_F alpha0 < 1."""
    kappas = np.asarray(kappas, dtype=float)
    if kappas.size == 0:
        return
    qa = q_f * medium.alpha0
    near_pole = np.abs(1.0 + qa * kappas) < POLE_TOL
    beyond = np.abs(kappas) * qa >= 1.0
    bad = np.flatnonzero(near_pole | beyond)
    if bad.size:
        k = bad[0]
        raise PoleContrastError(
            f"contrast {kappas[k]} violates the pole bound |kappa| < 1/(Q_F alpha0) = {1 / qa:.6g}"
        )


def _lattice_count(length: float, h: float, what: str) -> int:
    if not (h > 0 and math.isfinite(h)):
        raise GeometryError(f"pitch must be positive, got {h}")
    if not (length > 0 and math.isfinite(length)):
        raise GeometryError(f"{what} must be positive, got {length}")
    ratio = length / h
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > COMMENSURATE_TOL:
        raise NonCommensurateError(f"{what}/h = {ratio:.9g} is not an integer")
    return m


def _gap_count(length: float, h: float, what: str) -> int:
    if length < 0:
        raise GeometryError(f"{what} must be nonnegative, got {length}")
    if length == 0:
        return 0
    return _lattice_count(length, h, what)


def _box_indices(nx: int, ny: int, nz: int) -> np.ndarray:
    ix, iy, iz = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    return np.stack([ix.ravel(), iy.ravel(), iz.ravel()], axis=1)


def _centered(indices: np.ndarray, extent, h: float) -> np.ndarray:
    """Map integer lattice indices to coordinates centered on the bounding box."""
    offset = (np.asarray(extent, dtype=float) - 1.0) / 2.0
    return (indices - offset) * h


def build_box(
    lx: float, ly: float, lz: float, h: float, kappa: float, medium: Medium = DEFAULT_MEDIUM, tag: str = "box"
) -> VoxelGrid:
    """Uniform rectangular box centered at the origin, sides in wavelengths."""
    hh = medium.to_length(h)
    counts = [_lattice_count(side, h, name) for side, name in ((lx, "Lx"), (ly, "Ly"), (lz, "Lz"))]
    idx = _box_indices(*counts)
    return VoxelGrid.from_arrays(hh, _centered(idx, counts, hh), float(kappa), medium, tag=tag)


def build_cube(H: float, h: float, kappa: float, medium: Medium = DEFAULT_MEDIUM) -> VoxelGrid:
    """Cube of side ``H`` (wavelengths) with pitch ``h``, uniform contrast."""
    return build_box(H, H, H, h, kappa, medium, tag="cube")


def build_two_cubes(
    H: float,
    h: float,
    deltaH: float,
    kappa1: float,
    kappa2: float,
    medium: Medium = DEFAULT_MEDIUM,
) -> VoxelGrid:
    """Two cubes of side ``H`` face to face along x, surface gap ``deltaH * H``.

    The pair is centered at the origin; the first cube (``kappa1``) sits
    at negative x.
    """
    m = _lattice_count(H, h, "H")
    g = _gap_count(deltaH * H, h, "deltaH*H")
    hh = medium.to_length(h)
    extent = (2 * m + g, m, m)
    a = _box_indices(m, m, m)
    b = a + np.array([m + g, 0, 0])
    idx = np.concatenate([a, b])
    kappas = np.concatenate([np.full(len(a), float(kappa1)), np.full(len(b), float(kappa2))])
    return VoxelGrid.from_arrays(hh, _centered(idx, extent, hh), kappas, medium, tag="two_cubes")


def build_sandwich(H: float, h: float, kappa_amplitude: float, medium: Medium = DEFAULT_MEDIUM) -> VoxelGrid:
    """Cube of side ``H`` cut into one-voxel layers normal to x.

    Layer ``j`` (counted from negative x, starting at 0) has contrast
    ``(-1)**j * kappa_amplitude``.
    """
    m = _lattice_count(H, h, "H")
    hh = medium.to_length(h)
    idx = _box_indices(m, m, m)
    kappas = np.where(idx[:, 0] % 2 == 0, 1.0, -1.0) * float(kappa_amplitude)
    return VoxelGrid.from_arrays(hh, _centered(idx, (m, m, m), hh), kappas, medium, tag="sandwich")


def build_embedded(
    H_out: float,
    H_in: float,
    h: float,
    kappa_out: float,
    kappa_in: float,
    medium: Medium = DEFAULT_MEDIUM,
) -> VoxelGrid:
    """Concentric cubes: an inner cube of contrast ``kappa_in`` replacing the
    core of an outer cube of contrast ``kappa_out`` (contrasts do not add)."""
    m_out = _lattice_count(H_out, h, "H_out")
    m_in = _lattice_count(H_in, h, "H_in")
    if m_in >= m_out:
        raise GeometryError(f"inner cube ({H_in}) must be smaller than outer cube ({H_out})")
    if (m_out - m_in) % 2:
        raise NonCommensurateError(
            f"inner cube of {m_in} voxels cannot be centered in an outer cube of {m_out} voxels"
        )
    hh = medium.to_length(h)
    idx = _box_indices(m_out, m_out, m_out)
    lo = (m_out - m_in) // 2
    inner = np.all((idx >= lo) & (idx < lo + m_in), axis=1)
    kappas = np.where(inner, float(kappa_in), float(kappa_out))
    return VoxelGrid.from_arrays(hh, _centered(idx, (m_out,) * 3, hh), kappas, medium, tag="embedded")


# -- enclosing ball -----------------------------------------------------------


def _ball2(p, q):
    c = (p + q) / 2.0
    return c, float(np.linalg.norm(p - c))


def _ball3(p, q, s):
    """Smallest ball with three points on its boundary (circumcircle)."""
    a, b = q - p, s - p
    axb = np.cross(a, b)
    den = 2.0 * np.dot(axb, axb)
    if den < 1e-300:
        pairs = [(p, q), (p, s), (q, s)]
        return max((_ball2(*pr) for pr in pairs), key=lambda cr: cr[1])
    c = p + (np.dot(b, b) * np.cross(axb, a) + np.dot(a, a) * np.cross(b, axb)) / den
    return c, float(np.linalg.norm(p - c))


def _ball4(p, q, s, t):
    """Circumsphere of four points; falls back to the 3-point balls if coplanar."""
    a = np.array([q - p, s - p, t - p])
    rhs = 0.5 * np.array([np.dot(v, v) for v in a])
    if abs(np.linalg.det(a)) < 1e-14 * max(1.0, np.abs(a).max()) ** 3:
        candidates = [_ball3(p, q, s), _ball3(p, q, t), _ball3(p, s, t), _ball3(q, s, t)]
        pts = (p, q, s, t)
        ok = [cr for cr in candidates if all(np.linalg.norm(x - cr[0]) <= cr[1] * (1 + 1e-9) + 1e-15 for x in pts)]
        return min(ok or candidates, key=lambda cr: cr[1])
    off = np.linalg.solve(a, rhs)
    c = p + off
    return c, float(np.linalg.norm(off))


def minimal_enclosing_ball(points) -> tuple:
    """Exact smallest ball around a point set (randomized incremental algorithm).

    Returns ``(center, radius)``. The point order is shuffled with a fixed
    seed so results are reproducible.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if pts.shape[0] == 0:
        raise EmptyGridError("no points")
    pts = np.unique(pts, axis=0)
    if pts.shape[0] >= 5:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except (QhullError, ValueError):
            pass
    pts = pts[np.random.default_rng(0).permutation(pts.shape[0])]
    scale = max(1.0, float(np.abs(pts).max()))
    eps = 1e-12 * scale

    def outside(x, c, r):
        return np.linalg.norm(x - c) > r + eps

    c, r = pts[0].copy(), 0.0
    for i in range(1, len(pts)):
        if not outside(pts[i], c, r):
            continue
        c, r = pts[i].copy(), 0.0
        for j in range(i):
            if not outside(pts[j], c, r):
                continue
            c, r = _ball2(pts[i], pts[j])
            for k in range(j):
                if not outside(pts[k], c, r):
                    continue
                c, r = _ball3(pts[i], pts[j], pts[k])
                for l in range(k):
                    if outside(pts[l], c, r):
                        c, r = _ball4(pts[i], pts[j], pts[k], pts[l])
    return c, r


def enclosing_ball(grid: VoxelGrid) -> tuple:
    """Center and radius of a ball containing every voxel of the grid.

    The minimal ball of the voxel centers is padded by the half-diagonal
    ``h * sqrt(3) / 2`` so that the full cubes are enclosed.
    """
    if grid.n == 0:
        raise EmptyGridError("grid has no voxels")
    c, r = minimal_enclosing_ball(grid.centers)
    return c, r + grid.h * math.sqrt(3.0) / 2.0


def enclosing_radius(grid: VoxelGrid) -> float:
    return enclosing_ball(grid)[1]


# -- diagnostics --------------------------------------------------------------


NOT_PHYSICALLY_ALLOWABLE = "NotPhysicallyAllowable"
EXCEEDS_THEOREM = "ExceedsTheorem"
POLE_PROXIMITY = "PoleProximity"


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    index: int
    kappa: float
    severity: str  # "warning" or "error"

    def __str__(self):
        return f"{self.severity}: {self.kind} at voxel {self.index} (kappa={self.kappa:g})"


def validate(grid: VoxelGrid) -> List[Diagnostic]:
    """Report contrasts outside the range where convergence is guaranteed.

    kappa < -1 is not physically allowable (gain medium); kappa > 1 lies
    outside the proven convergence region but is still computed. Never
    raises.
    """
    out = []
    qa = grid.q_f * grid.medium.alpha0
    for i, k in enumerate(grid.kappas.tolist()):
        if k < -1.0:
            out.append(Diagnostic(NOT_PHYSICALLY_ALLOWABLE, i, k, "warning"))
        if k > 1.0:
            out.append(Diagnostic(EXCEEDS_THEOREM, i, k, "warning"))
        if abs(1.0 + qa * k) < POLE_TOL:
            out.append(Diagnostic(POLE_PROXIMITY, i, k, "error"))
    return out


def voxel_corners(grid: VoxelGrid) -> np.ndarray:
    """All 8 corners of every voxel, shape (8 N, 3)."""
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
    return (grid.centers[:, None, :] + 0.5 * grid.h * signs[None, :, :]).reshape(-1, 3)


def grid_from_points(
    h: float,
    centers_over_lambda: Sequence,
    kappas: Sequence,
    medium: Medium = DEFAULT_MEDIUM,
    tag: str = "custom",
) -> VoxelGrid:
    """Build a grid from centers and pitch given in wavelengths."""
    scale = medium.lambda_d
    return VoxelGrid.from_arrays(h * scale, np.asarray(centers_over_lambda, dtype=float) * scale, kappas, medium, tag)
