"""Exception types raised across the package."""


class LarPceSkError(Exception):
    """Base class for all package errors."""


class IllConditionedError(LarPceSkError, ValueError):
    """A least-squares or GLS system is rank deficient."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class DegenerateLeverageError(LarPceSkError, ValueError):
    """Some leverage h_i is numerically 1, so the LOO error is undefined."""


class UndefinedLOOError(LarPceSkError, ValueError):
    """The response has zero variance; the relative LOO error is 0/0."""


class InsufficientReplicationError(LarPceSkError, ValueError):
    """A design point has a single replication and no supplied variance."""


class NotPositiveDefiniteError(LarPceSkError, ValueError):
    """Covariance stays non-SPD even at the maximum nugget."""


class SelectionError(LarPceSkError, RuntimeError):
    """No LAR path step produced a usable LOO score."""


class OptimizationError(LarPceSkError, RuntimeError):
    """The genetic algorithm never found a feasible evaluation."""


class ConfigError(LarPceSkError, ValueError):
    """Invalid scenario configuration."""
