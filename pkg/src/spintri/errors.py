"""Exception hierarchy shared across the package."""


class SpinTriError(Exception):
    """Base class for all spintri errors."""


class DomainError(SpinTriError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ComplexRootsError(DomainError):
    """Reduction cubic has complex roots; the instance is not a physical reduction."""


class DegenerateRootsError(DomainError):
    """Cubic roots coincide; the generic elliptic machinery does not apply."""


class CollinearError(DomainError):
    """Spin configuration has rank 1; no oriented polar decomposition."""


class EquilateralError(DomainError):
    """All couplings equal; the conservation line is undefined."""


class InconsistentConservedValues(DomainError):
    """Conserved values cannot be realized by any spin configuration."""


class NotGenericError(SpinTriError):
    """Instance falls outside the generic case; dispatch to a special solver."""

    def __init__(self, classification, message=None):
        self.classification = classification
        super().__init__(message or f"instance is not generic: {classification}")


class NoPhaseMatch(SpinTriError):
    """Initial condition could not be located on the canonical internal orbit."""


class CriticalPointSingularity(SpinTriError):
    """Angular velocity diverges: turning point coincides with a critical point."""


class NotOnBoundary(DomainError):
    """Configuration is not at an endpoint of the energy range."""


class DegenerateError(DomainError):
    """Special-case parameters degenerate; a different closed form applies."""


class RefinementRequired(SpinTriError):
    """Energy grid too coarse to resolve a jump near a critical energy."""


class AreaAmbiguity(SpinTriError):
    """Projected spin orbit is ambiguous (touches a pole); area is not well defined."""


class StepSizeUnderflow(SpinTriError):
    """Adaptive integrator step collapsed; signals a bug for this smooth system."""
