"""Exception types shared across the package."""


class CheapsubError(Exception):
    """Base class for package-specific errors."""


class DataError(CheapsubError):
    """Input data violates a schema or structural invariant."""


class EstimatorFailure(CheapsubError):
    """An estimator fit did not converge (e.g. separation in a logistic fit).

    Raised by estimators; the replication engine catches it, retries the
    replicate with a fresh random stream and re-raises after the retry
    budget is exhausted.
    """


class InfluenceUnavailable(CheapsubError):
    """The estimator does not provide influence values, so the
    influence-function asymptotic interval is unsupported."""


class ConfigError(CheapsubError):
    """Invalid run configuration (CLI or config file)."""
