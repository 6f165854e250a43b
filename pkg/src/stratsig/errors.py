"""Exception types shared across the package."""


class StratSigError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(StratSigError):
    """Operands have incompatible ambient dimension or truncation level."""


class InvalidInput(StratSigError):
    """An argument violates a documented precondition."""


class ClosureError(StratSigError):
    """An operation would leave the polynomial-times-Gaussian function class."""


class SimulationDiverged(StratSigError):
    """The SDE state became non-finite."""

    def __init__(self, step: int):
        super().__init__(f"simulation diverged (non-finite state) at step {step}")
        self.step = step


class LambdaSearchError(StratSigError):
    """The Gaussian-center sweep exhausted its cap without reaching full rank."""


class SearchBudgetExceeded(StratSigError):
    """Word extraction hit its node budget; carries the best word found so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InconsistentRecords(StratSigError):
    """Hitting records do not interleave as records of one common path must."""


class SqueezeHypothesisError(StratSigError):
    """A hypothesis of the squeeze construction fails; names the violated clause."""

    def __init__(self, clause: str, message: str = ""):
        super().__init__(f"squeeze hypothesis violated ({clause})" + (f": {message}" if message else ""))
        self.clause = clause
