"""Logistic regression fitted by iteratively reweighted least squares.

The fit dispatches to the compiled kernel when available (see
``cheapsub._kernels``).  Fractional responses are accepted (quasi-binomial
working likelihood), which the sequential-regression estimator relies on,
along with a fixed offset and prior weights for its targeting step.

Convergence: max |score| < 1e-8, or the relative log-likelihood change
stalls below 1e-10, within 100 iterations.  Non-convergence, separation
(diverging coefficients) and singular designs raise
:class:`~cheapsub.errors.EstimatorFailure` so the replication engine can
retry the replicate on a fresh stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..errors import DataError, EstimatorFailure
from ..numerics import expit
from .base import EstimateWithIF

MAX_ITER = 100
SCORE_TOL = 1e-8
LL_TOL = 1e-10

_STATUS_MESSAGES = {
    _kernels.MAX_ITER: "IRLS did not converge within the iteration limit",
    _kernels.SINGULAR: "singular weighted design (collinear or constant column)",
    _kernels.DIVERGED: "diverging coefficients (separated or degenerate outcome)",
}


def fit_logistic(X, y, offset=None, weights=None, max_iter=MAX_ITER,
                 score_tol=SCORE_TOL, ll_tol=LL_TOL,
                 check_separation=True) -> np.ndarray:
    """Maximum likelihood coefficients of a logit-link Bernoulli model.

    ``y`` may be fractional in [0, 1].  Returns the coefficient vector;
    raises EstimatorFailure when the fit cannot be trusted.

    ``check_separation=False`` accepts a numerically converged fit whose
    fitted probabilities saturate (the sequential-regression estimator
    wants the saturated plug-in there instead of a failure; its
    probability bounding keeps the weights finite).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise DataError("design matrix must be two-dimensional")
    n, p = X.shape
    if y.shape[0] != n:
        raise DataError(f"design has {n} rows but outcome has {y.shape[0]}")
    if n <= p:
        raise DataError(f"logistic fit requires n > p, got n={n}, p={p}")
    if not np.all(np.isfinite(X)):
        raise DataError("design matrix contains non-finite values")
    if not np.all(np.isfinite(y)) or y.min() < 0.0 or y.max() > 1.0:
        raise DataError("outcome values must be finite and lie in [0, 1]")
    offset = (np.zeros(n) if offset is None
              else np.ascontiguousarray(offset, dtype=np.float64))
    weights = (np.ones(n) if weights is None
               else np.ascontiguousarray(weights, dtype=np.float64))
    if offset.shape != (n,) or weights.shape != (n,):
        raise DataError("offset and weights must match the number of rows")
    if weights.min() < 0.0 or not np.all(np.isfinite(weights)):
        raise DataError("weights must be finite and non-negative")

    beta, status, _n_iter, max_score = _kernels.irls(
        X, y, offset, weights, max_iter=max_iter,
        score_tol=score_tol, ll_tol=ll_tol)
    if status in (_kernels.CONVERGED_SCORE, _kernels.CONVERGED_STALL):
        if check_separation and _perfectly_separated(X, y, beta, offset):
            raise EstimatorFailure(
                "perfect separation: the outcome is classified exactly and "
                "the likelihood has no finite maximizer")
        return beta
    raise EstimatorFailure(
        f"{_STATUS_MESSAGES[status]} (max |score| = {max_score:.3e})")


def _perfectly_separated(X, y, beta, offset) -> bool:
    # a binary outcome reproduced to within 1e-3 everywhere means the fit
    # saturated; the score then vanishes even though beta diverges
    if np.any((y != 0.0) & (y != 1.0)):
        return False
    mu = predict_proba(X, beta, offset)
    return bool(np.max(np.abs(y - mu)) < 1e-3)


def predict_proba(X, beta, offset=None) -> np.ndarray:
    """Fitted event probabilities expit(X @ beta + offset)."""
    eta = np.asarray(X, dtype=np.float64) @ np.asarray(beta, dtype=np.float64)
    if offset is not None:
        eta = eta + offset
    return expit(eta)


@dataclass(frozen=True)
class LogisticCoefficientEstimator:
    """One coefficient of a logistic regression as the target parameter.

    Data handle: a ``(X, y)`` tuple where X already contains any intercept
    column.  Influence values are the usual M-estimator linearization
    n * (X'WX)^{-1} x_i (y_i - mu_i), projected on the target coordinate.
    """

    coef_index: int = 1
    name: str = "logistic"

    @property
    def provides_influence(self) -> bool:
        return True

    def fit(self, data) -> EstimateWithIF:
        X, y = data
        X = np.ascontiguousarray(X, dtype=np.float64)
        beta = fit_logistic(X, y)
        if not 0 <= self.coef_index < X.shape[1]:
            raise DataError(f"coefficient index {self.coef_index} out of range "
                            f"for {X.shape[1]} columns")
        mu = predict_proba(X, beta)
        w = mu * (1.0 - mu)
        info = (X * w[:, None]).T @ X
        resid = np.asarray(y, dtype=np.float64) - mu
        try:
            phi = len(y) * np.linalg.solve(info, (X * resid[:, None]).T)
        except np.linalg.LinAlgError as exc:
            raise EstimatorFailure("singular information matrix") from exc
        return EstimateWithIF(point=float(beta[self.coef_index]),
                              influence_values=phi[self.coef_index])
