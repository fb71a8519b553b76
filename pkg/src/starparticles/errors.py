"""Exception hierarchy shared across the package."""


class ParticleError(Exception):
    """Base class for all errors raised by starparticles."""


class DomainError(ParticleError, ValueError):
    """An argument lies outside the domain of the operation."""


class IntegrationError(ParticleError, ArithmeticError):
    """Quadrature produced non-finite samples or failed to converge."""


class NumericError(ParticleError, ArithmeticError):
    """A series or iterative evaluation failed to converge."""


class FitError(ParticleError, ValueError):
    """Regression input was insufficient or invalid."""


class EstimationError(ParticleError, ValueError):
    """Not enough usable variogram bins to estimate a dimension."""


class GeometryError(ParticleError, ValueError):
    """A grid or field cannot be turned into a closed mesh."""
