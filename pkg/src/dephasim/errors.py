"""Exception and warning types shared across the package."""


class DephasimError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(DephasimError, ValueError):
    """An input violates a documented precondition."""


class SingularParameterError(InvalidParameterError):
    """A formula is evaluated at a pole of its parameter space."""


class ConfigError(DephasimError):
    """A run configuration file is malformed or inconsistent."""


class NumericalFailureError(DephasimError):
    """The integrator or a linear solve failed to produce a usable result."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class SteadyStateAmbiguityError(NumericalFailureError):
    """The Liouvillian null space is degenerate: no unique steady state."""


class FitFailureError(DephasimError):
    """A least-squares fit did not converge to a usable parameter set."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ChiDiscrepancyWarning(UserWarning):
    """A supplied dispersive shift differs strongly from the derived value."""


class CoherenceRatioWarning(UserWarning):
    """A coherence record has T2* above the 2*T1 relaxation bound."""


class AliasingWarning(UserWarning):
    """A requested oscillation frequency exceeds the sampling Nyquist limit."""


class RegimeValidityWarning(UserWarning):
    """A check or formula is being used outside its validated regime."""
