"""Exception hierarchy shared by all sdboot modules."""


class SDBError(Exception):
    """Base class for every error raised by sdboot."""


class InvalidConfigurationError(SDBError, ValueError):
    """A parameter combination violates a documented precondition."""


class EmptyEnsembleError(SDBError, ValueError):
    """An empirical distribution or average was requested over zero values."""


class EstimationError(SDBError):
    """An estimator could not produce a finite estimate for a sample."""


class DegenerateSampleError(EstimationError):
    """The weighted sample carries no usable mass (e.g. all-zero weights)."""


class SingularDesignError(EstimationError):
    """The weighted Gram/information matrix is singular or ill-conditioned."""


class SeparationError(EstimationError):
    """Logistic coefficients diverged, indicating (quasi-)separated data."""


class ConvergenceError(EstimationError):
    """Newton-Raphson did not converge; ``trace`` holds the score norms seen."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class IngestionError(SDBError, ValueError):
    """An input file could not be parsed into a dataset."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
