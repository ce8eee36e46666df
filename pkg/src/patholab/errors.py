"""Exception types raised across the package."""


class PathoLabError(Exception):
    """Base class for all package errors."""


class DomainError(PathoLabError, ValueError):
    """A point or radius lies outside the region where a formula is defined."""


class ParameterError(PathoLabError, ValueError):
    """Family parameters violate a construction constraint."""


class StencilError(PathoLabError):
    """A finite-difference stencil would leave the admissible region."""


class QuadratureError(PathoLabError):
    """Nested quadrature rules disagree beyond the requested tolerance."""


class BranchContaminationError(PathoLabError):
    """A radial ODE solution picked up the singular r**-n branch."""
