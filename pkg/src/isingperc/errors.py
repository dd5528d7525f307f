class InvalidGeometryError(ValueError):
    """Empty or inconsistent lattice region, or a region outside its host."""


class UnsupportedOperationError(TypeError):
    """Operation not defined for the model mode (e.g. energies of Bernoulli fields)."""


class InvalidSpecError(ValueError):
    """Malformed event description."""


class InvalidParameterError(ValueError):
    pass


class InvalidDataError(ValueError):
    pass


class NoBracketError(RuntimeError):
    """Bisection endpoints do not straddle the target."""


class CapacityError(ValueError):
    """Region too large for exhaustive enumeration."""
