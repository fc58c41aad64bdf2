"""Free-space diffusion Green's function, self-energy and analytic Born bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .errors import NegativeArgumentError, SingularArgumentsError
from .medium import DEFAULT_MEDIUM, Medium

# below this f(x) is summed as a power series; the closed form cancels badly
_F_SERIES_CUTOFF = 0.1
_F_SERIES_TERMS = 14
# below this sinh(x)/x is replaced by 1 + x^2/6
_SINHC_CUTOFF = 1e-4
# regime tags of BoundVerdict, presentation only
SMALL_KA = 0.1
LARGE_KA = 10.0


def g_free(r, rp, medium: Medium = DEFAULT_MEDIUM) -> float:
    """exp(-kd |r - rp|) / (4 pi D0 |r - rp|)."""
    dist = math.dist(r, rp)
    if dist <= 1e-12 * medium.lambda_d:
        raise SingularArgumentsError(f"coincident points {tuple(r)} and {tuple(rp)}")
    return math.exp(-medium.kd * dist) / (4.0 * math.pi * medium.d0 * dist)


def g_free_matrix(points_a, points_b, medium: Medium = DEFAULT_MEDIUM) -> np.ndarray:
    """Green's function between every pair of two point sets, shape (len(a), len(b)).

    Raises SingularArgumentsError if any pair coincides.
    """
    a = np.asarray(points_a, dtype=float).reshape(-1, 3)
    b = np.asarray(points_b, dtype=float).reshape(-1, 3)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    dist = cdist(a, b)
    if np.any(dist <= 1e-12 * medium.lambda_d):
        i, j = np.argwhere(dist <= 1e-12 * medium.lambda_d)[0]
        raise SingularArgumentsError(f"coincident points {a[i]} and {b[j]}")
    out = np.exp(-medium.kd * dist)
    out /= dist
    out *= 1.0 / (4.0 * math.pi * medium.d0)
    return out


def _f_series(x):
    total = np.zeros_like(x)
    term = x * x / 2.0  # x^n / n! at n = 2
    for n in range(2, _F_SERIES_TERMS + 2):
        total += (-1) ** n * (n - 1) * term
        term = term * x / (n + 1)
    return total


def f_shape(x):
    """f(x) = 1 - (1 + x) exp(-x), for scalar or array ``x >= 0``.

    Rises from 0 at x = 0 to 1 as x -> infinity, ~x^2/2 near zero.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise NegativeArgumentError(f"f_shape needs x >= 0, got {x}")
    small = arr < _F_SERIES_CUTOFF
    with np.errstate(over="ignore", invalid="ignore"):
        closed = 1.0 - (1.0 + arr) * np.exp(-arr)
    out = np.where(small, _f_series(np.where(small, arr, 0.0)), closed)
    out = np.where(np.isinf(arr), 1.0, out)
    if np.ndim(x) == 0:
        return float(out)
    return out


def ball_integral(r: float, a: float, medium: Medium = DEFAULT_MEDIUM) -> float:
    """Integral of g_free(r_vec, r') over the ball |r'| < a, at radial position r <= a."""
    if a <= 0:
        raise ValueError(f"ball radius must be positive, got {a}")
    if r < 0 or r > a:
        raise ValueError(f"need 0 <= r <= a, got r={r}, a={a}")
    k = medium.kd
    kr, ka = k * r, k * a
    prefactor = 1.0 / (medium.d0 * k * k)
    if math.isinf(ka):
        return prefactor
    # (1 + ka) exp(-ka) sinh(kr) / kr, folded so large ka cannot overflow
    if kr < _SINHC_CUTOFF:
        decay = (1.0 + ka) * math.exp(-ka) * (1.0 + kr * kr / 6.0)
    else:
        decay = (1.0 + ka) * (math.exp(kr - ka) - math.exp(-kr - ka)) / (2.0 * kr)
    return prefactor * (1.0 - decay)


def equivalent_radius(h: float) -> float:
    """Radius of the sphere with the volume of a cube of side ``h``."""
    return (3.0 / (4.0 * math.pi)) ** (1.0 / 3.0) * h


def q_self(h: float, medium: Medium = DEFAULT_MEDIUM) -> float:
    """Voxel self-energy Q_F: g_free integrated over the equal-volume sphere."""
    if not h > 0:
        raise ValueError(f"voxel pitch must be positive, got {h}")
    x = medium.kd * equivalent_radius(h)
    return f_shape(x) / (medium.kd ** 2 * medium.d0)


@dataclass(frozen=True)
class BoundVerdict:
    a: float
    threshold: float
    satisfied: Optional[bool]
    regime: str


def born_bound(a: float, medium: Medium = DEFAULT_MEDIUM, kappa: Optional[float] = None) -> BoundVerdict:
    """Sufficient Born-convergence bound for a target inside a ball of radius ``a``.

    ``threshold`` is the largest admissible contrast delta_alpha/alpha0,
    1 / f(kd a). When ``kappa`` is given, ``satisfied`` reports
    ``kappa < threshold``.
    """
    if not a > 0:
        raise ValueError(f"enclosing radius must be positive, got {a}")
    x = medium.kd * a
    threshold = 1.0 / f_shape(x)
    if x < SMALL_KA:
        regime = "small_ka"
    elif x > LARGE_KA:
        regime = "large_ka"
    else:
        regime = "general"
    satisfied = None if kappa is None else bool(kappa < threshold)
    return BoundVerdict(a=a, threshold=threshold, satisfied=satisfied, regime=regime)
