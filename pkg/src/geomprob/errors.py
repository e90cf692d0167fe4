"""Exception types shared across the package."""


class GeomProbError(Exception):
    """Base class for all package errors."""


class DimensionError(GeomProbError):
    """Dimension mismatch or an unsupported ambient dimension."""


class DegenerateBodyError(GeomProbError):
    """Body with (numerically) empty interior, e.g. rejection sampling starves."""


class DegenerateSliceError(GeomProbError):
    """Hyperplane slice with no measurable intersection."""


class NonIsotropicBodyError(GeomProbError):
    """A formula that assumes isotropic position was handed a body that is not."""


class SingularTransformError(GeomProbError):
    """Affine map with a (numerically) singular matrix."""


class InvalidBodyError(GeomProbError):
    """Construction or deserialization arguments violate a body invariant."""
