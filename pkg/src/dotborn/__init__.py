"""Coupled-monopole forward solver and Born-series convergence analysis for
diffuse optical tomography with absorbing inhomogeneities."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CapExceededError,
    ConfigError,
    DotBornError,
    EmptyGridError,
    GeometryError,
    IllConditionedWarning,
    NegativeArgumentError,
    NoConvergenceError,
    NonCommensurateError,
    NotSymmetricError,
    PoleContrastError,
    SingularArgumentsError,
    SingularMatrixError,
)
from .forward import (  # noqa: F401
    BornReport,
    DataFunction,
    born_iterate,
    convergence_radius,
    data_function,
    tmatrix_direct,
    tmatrix_symmetric,
)
from .geometry import (  # noqa: F401
    ProbeLayout,
    VoxelGrid,
    build_box,
    build_cube,
    build_embedded,
    build_sandwich,
    build_two_cubes,
    enclosing_radius,
    validate,
)
from .green import ball_integral, born_bound, f_shape, g_free, q_self  # noqa: F401
from .medium import Medium  # noqa: F401
from .operators import (  # noqa: F401
    assemble_g0vv,
    assemble_probes,
    assemble_sigma,
    assemble_w,
    assemble_wc,
    incident_field,
    polarizabilities,
)
from .spectral import degeneracy_split, spectrum_w, spectrum_wc, wmax_sweep  # noqa: F401
