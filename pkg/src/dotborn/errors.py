"""Exception and warning types raised across the package."""


class DotBornError(Exception):
    """Base class for all package errors."""


class NonCommensurateError(DotBornError, ValueError):
    """A length is not an integer multiple of the voxel pitch."""


class PoleContrastError(DotBornError, ValueError):
    """A voxel contrast sits at (or past) the polarizability pole."""


class GeometryError(DotBornError, ValueError):
    pass


class EmptyGridError(DotBornError, ValueError):
    pass


class SingularArgumentsError(DotBornError, ValueError):
    """Green's function evaluated at coincident points."""


class NegativeArgumentError(DotBornError, ValueError):
    pass


class NotSymmetricError(DotBornError, ValueError):
    pass


class NoConvergenceError(DotBornError, RuntimeError):
    """An iterative solver hit its iteration cap.

    ``best`` carries the last estimate, if one exists.
    """

    def __init__(self, message, best=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.iterations = iterations


class SingularMatrixError(DotBornError, ArithmeticError):
    pass


class CapExceededError(DotBornError, ValueError):
    """Matrix dimension above the configured voxel cap."""


class ConfigError(DotBornError, ValueError):
    """Invalid scenario configuration.

    ``errors`` holds every problem found as ``(field_path, message)`` pairs.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.errors))


class IllConditionedWarning(UserWarning):
    pass
