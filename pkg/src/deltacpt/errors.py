"""Exception types raised across the package."""


class DeltaCPTError(Exception):
    """Base class for all package errors."""


class DomainError(DeltaCPTError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateSteadyStateError(DeltaCPTError):
    """The Liouvillian kernel is not one-dimensional."""


class IntegrationError(DeltaCPTError):
    """Time integration failed (step size underflow, non-finite state)."""


class EvaluationError(DeltaCPTError):
    """A user-supplied integrand returned a non-finite value."""

    def __init__(self, message, velocity=None):
        super().__init__(message)
        self.velocity = velocity


class SingularityError(DeltaCPTError, ZeroDivisionError):
    """A closed-form expression hit a vanishing denominator."""


class PropagationError(DeltaCPTError):
    """The slice-by-slice field march produced a non-finite coherence."""

    def __init__(self, message, slice_index=None):
        super().__init__(message)
        self.slice_index = slice_index


class SweepError(DeltaCPTError):
    """A sweep backend failed at one axis point."""

    def __init__(self, message, axis_value=None):
        super().__init__(message)
        self.axis_value = axis_value


class NoPeakError(DeltaCPTError):
    """No resolvable extremum in a spectrum."""


class AmbiguousPeakError(DeltaCPTError):
    """Several extrema of comparable height; candidates are listed."""

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


class ConfigError(DeltaCPTError, ValueError):
    """A run configuration could not be parsed or validated."""
