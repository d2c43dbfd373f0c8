"""Exception types shared across the package."""


class BregmanBoundsError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BregmanBoundsError):
    """An argument lies outside the domain required by the operation."""


class ConvergenceError(BregmanBoundsError):
    """An iterative or adaptive scheme failed to reach its tolerance."""


class SingularityError(ConvergenceError):
    """A quadrature refinement loop hit a non-integrable singularity."""


class UnsupportedError(BregmanBoundsError):
    """The requested variant, order or kind is not supported."""


class IncompatibleModelError(BregmanBoundsError):
    """Prior and channel (or generator) cannot be combined."""


class RegularityError(BregmanBoundsError):
    """A computation requires regularity conditions that do not hold."""
