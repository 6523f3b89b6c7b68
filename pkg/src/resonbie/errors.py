"""Exception types shared across the library."""


class ResonbieError(Exception):
    """Base class for all library errors."""


class DomainError(ResonbieError):
    """Input outside the supported parameter region."""


class SingularityError(ResonbieError):
    """Kernel evaluated at (or too close to) its source point."""


class BranchCutError(ResonbieError):
    """Wavenumber on or too close to a modal branch cut."""


class ConfigError(ResonbieError):
    """Invalid configuration or argument combination."""


class SingularMatrixError(ResonbieError):
    """Pivot breakdown in a direct factorization."""


class ConvergenceError(ResonbieError):
    """An iterative procedure exhausted its budget."""


class ContourHitsEigenvalueError(ResonbieError):
    """The integration contour passes (numerically) through an eigenvalue.

    Perturbing the rectangle slightly is the usual remedy.
    """


class EnergyViolationError(ResonbieError):
    """Computed transmittance/reflectance violates energy conservation."""


class IncompleteRootsError(ResonbieError):
    """Root search and argument-principle count disagree after refinement."""
