"""Spectra of W and W_c, dominant-eigenvalue sweeps and pair-splitting metrics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .errors import CapExceededError, DotBornError
from .geometry import VoxelGrid, build_cube
from .green import f_shape
from .linalg import SpectrumC, SpectrumR, eig_general_all, eig_sym_all, power_max_shifted
from .medium import DEFAULT_MEDIUM, Medium
from .operators import assemble_sigma, assemble_w, assemble_wc, polarizabilities

log = logging.getLogger(__name__)

REAL_CAP = 12000
COMPLEX_CAP = 4000


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    spectrum: Union[SpectrumR, SpectrumC]
    w_max: float
    max_abs: float
    max_imag_abs: float
    trace_defect: float
    n: int
    h: float
    tag: str

    @property
    def values(self) -> np.ndarray:
        return self.spectrum.values

    @property
    def is_complex(self) -> bool:
        return isinstance(self.spectrum, SpectrumC)


def _check_cap(grid, cap):
    if grid.n > cap:
        raise CapExceededError(f"grid has {grid.n} voxels, cap is {cap}")


def _report(grid, spectrum):
    vals = spectrum.values
    if vals.size == 0:
        return SpectrumReport(spectrum, 0.0, 0.0, 0.0, 0.0, 0, grid.h, grid.tag)
    re = vals.real
    return SpectrumReport(
        spectrum=spectrum,
        w_max=float(re.max()),
        max_abs=float(np.abs(vals).max()),
        max_imag_abs=float(np.abs(vals.imag).max()) if np.iscomplexobj(vals) else 0.0,
        trace_defect=float(abs(vals.sum())),
        n=grid.n,
        h=grid.h,
        tag=grid.tag,
    )


def spectrum_w(grid: VoxelGrid, use_self_energy: bool = True, cap: int = REAL_CAP) -> SpectrumReport:
    """Full real spectrum of W, descending."""
    _check_cap(grid, cap)
    w = assemble_w(grid, polarizabilities(grid, use_self_energy))
    return _report(grid, eig_sym_all(w))


def spectrum_wc(
    grid: VoxelGrid,
    use_self_energy: bool = True,
    cap: int = COMPLEX_CAP,
    method: str = "similar",
) -> SpectrumReport:
    """Full complex spectrum of W_c.

    ``method="similar"`` diagonalizes the real matrix Sigma W, which is
    similar to W_c (W_c = D W D with D^2 = Sigma); this halves memory and
    runs the real nonsymmetric solver. ``method="complex"`` assembles W_c
    itself and calls the complex solver.
    """
    _check_cap(grid, cap)
    pol = polarizabilities(grid, use_self_energy)
    if method == "similar":
        m = assemble_w(grid, pol)
        m *= assemble_sigma(grid)[:, None]
        spec = eig_general_all(m, overwrite=True)
    elif method == "complex":
        spec = eig_general_all(assemble_wc(grid, pol), overwrite=True)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _report(grid, spec)


@dataclass(frozen=True)
class SweepPoint:
    H: float  # wavelengths
    n: int
    w_max: Optional[float]
    bound: float  # f(pi sqrt(3) H / lambda_d)
    iterations: Optional[int] = None
    w_max_full: Optional[float] = None
    error: Optional[str] = None


def wmax_sweep(
    H_values: Sequence[float],
    h: float,
    kappa: float = 1.0,
    medium: Medium = DEFAULT_MEDIUM,
    cap: int = REAL_CAP,
    tol: float = 1e-10,
    max_iter: int = 10000,
    verify_every: int = 4,
    use_self_energy: bool = True,
) -> List[SweepPoint]:
    """Largest eigenvalue of W for cubes of side H (wavelengths) at pitch h.

    Uses shifted power iteration; every ``verify_every``-th point (starting
    with the first) is also fully diagonalized. Errors at one point are
    recorded on that point and the sweep continues.
    """
    out = []
    for i, H in enumerate(H_values):
        bound = float(f_shape(math.pi * math.sqrt(3.0) * H))
        try:
            grid = build_cube(H, h, kappa, medium)
            _check_cap(grid, cap)
            w = assemble_w(grid, polarizabilities(grid, use_self_energy))
            res = power_max_shifted(w, shift=1.0, tol=tol, max_iter=max_iter)
            full = None
            if verify_every and i % verify_every == 0:
                full = float(eig_sym_all(w).values[0])
            out.append(SweepPoint(H, grid.n, res.w_max, bound, res.iterations, full))
            log.info("sweep H=%g N=%d w_max=%.10g", H, grid.n, res.w_max)
        except (DotBornError, MemoryError) as exc:
            log.warning("sweep point H=%g failed: %s", H, exc)
            out.append(SweepPoint(H, 0, None, bound, error=f"{type(exc).__name__}: {exc}"))
    return out


def sweep_difference(a: Sequence[SweepPoint], b: Sequence[SweepPoint]) -> List[tuple]:
    """``(H, w_max_a - w_max_b)`` for cube sizes present in both sweeps."""
    lookup = {round(p.H, 9): p.w_max for p in b if p.w_max is not None}
    return [
        (p.H, p.w_max - lookup[round(p.H, 9)])
        for p in a
        if p.w_max is not None and round(p.H, 9) in lookup
    ]


@dataclass(frozen=True)
class SplitRow:
    delta_h: float
    w_max: float
    pairing_gap: float
    ratio: Optional[float] = None  # w_max relative to the isolated reference


def pairing_gap(values, n_pairs: int = 20) -> float:
    """Largest gap w_(2k-1) - w_(2k) over the leading ``n_pairs`` pairs of a
    descending spectrum."""
    v = np.asarray(values, dtype=float)
    k = min(n_pairs, v.size // 2)
    if k == 0:
        return 0.0
    return float(np.max(v[0 : 2 * k : 2] - v[1 : 2 * k : 2]))


def degeneracy_split(
    grid_pair_factory: Callable[[float], VoxelGrid],
    deltaH_values: Sequence[float],
    reference: Optional[VoxelGrid] = None,
    n_pairs: int = 20,
    use_self_energy: bool = True,
    cap: int = REAL_CAP,
) -> List[SplitRow]:
    """Interaction splitting of the spectrum of a two-body target.

    ``grid_pair_factory(deltaH)`` builds the pair at each separation.
    When ``reference`` (one isolated body) is given, each row also carries
    ``w_max / w_max(reference)``.
    """
    ref = None
    if reference is not None:
        ref = spectrum_w(reference, use_self_energy, cap).w_max
    rows = []
    for dh in deltaH_values:
        rep = spectrum_w(grid_pair_factory(dh), use_self_energy, cap)
        gap = pairing_gap(rep.values, n_pairs)
        rows.append(SplitRow(dh, rep.w_max, gap, None if ref is None else rep.w_max / ref))
    return rows
