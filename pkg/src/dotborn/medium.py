from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Medium:
    """Homogeneous background of the diffusion equation.

    Defaults are the nondimensional choice ``alpha0 = d0 = 1``, so the
    diffuse wave number is 1 and the diffuse wavelength is 2*pi. Only the
    ratio ``alpha0 / d0`` affects W, W_c and the T-matrix.
    """

    alpha0: float = 1.0
    d0: float = 1.0
    kd: float = field(init=False)
    lambda_d: float = field(init=False)

    def __post_init__(self):
        if not (self.alpha0 > 0 and math.isfinite(self.alpha0)):
            raise ValueError(f"alpha0 must be positive and finite, got {self.alpha0}")
        if not (self.d0 > 0 and math.isfinite(self.d0)):
            raise ValueError(f"d0 must be positive and finite, got {self.d0}")
        kd = math.sqrt(self.alpha0 / self.d0)
        object.__setattr__(self, "kd", kd)
        object.__setattr__(self, "lambda_d", 2.0 * math.pi / kd)

    def to_length(self, x_over_lambda: float) -> float:
        """Convert a length given in diffuse wavelengths to internal units."""
        return x_over_lambda * self.lambda_d

    def to_lambda(self, length: float) -> float:
        return length / self.lambda_d


DEFAULT_MEDIUM = Medium()
