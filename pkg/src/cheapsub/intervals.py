"""Confidence interval constructors.

All intervals are symmetric about the full-data point estimate.  With B
replicate estimates r_1..r_B and spread

    S = sqrt( (1/B) * sum_b (r_b - point)^2 ),

the constructors are

* cheap subsampling:  point +- t_{B,1-a/2} * sqrt(m/(n-m)) * S,
  built from B subsamples of size m drawn without replacement;
* cheap bootstrap:    point +- t_{B,1-a/2} * S,
  built from B full-size resamples drawn with replacement;
* jackknife limit:    point +- z_{1-a/2} * sqrt( (m/(n-m)) * S^2 ),
  the B -> infinity limit of the subsampling interval, which replaces the
  t quantile by the normal one (the delete-(n-m) jackknife variance
  estimate is (m/(n-m)) * S^2);
* influence-function asymptotic: point +- z_{1-a/2} * sigma_hat / sqrt(n)
  with sigma_hat^2 the mean of the squared estimated influence values.

A replicate spread of exactly zero is legal (constant estimators) and
yields a zero-width interval carrying a machine-readable warning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfluenceUnavailable
from .numerics import _check_probability, normal_quantile, t_quantile

METHOD_CHEAP_SUBSAMPLING = "cheap-subsampling"
METHOD_CHEAP_BOOTSTRAP = "cheap-bootstrap"
METHOD_JACKKNIFE_LIMIT = "jackknife-limit"
METHOD_ASYMPTOTIC_IF = "asymptotic-if"

ALL_METHODS = (METHOD_CHEAP_SUBSAMPLING, METHOD_CHEAP_BOOTSTRAP,
               METHOD_JACKKNIFE_LIMIT, METHOD_ASYMPTOTIC_IF)

WARN_DEGENERATE_SPREAD = "degenerate-spread"

#: Column order of the one-row CSV serialization.
CSV_COLUMNS = ("method", "point", "lower", "upper", "alpha", "B", "m", "n",
               "S", "warnings")


@dataclass
class IntervalEstimate:
    """A confidence interval plus the ingredients it was built from.

    ``S`` is the replicate spread; for the asymptotic interval, which has
    no replicates, the slot holds sigma_hat.  ``k_factor`` is
    m*n/(n-m), the variance rescaling of the subsampling methods.
    """

    method: str
    point: float
    lower: float
    upper: float
    alpha: float
    B: int
    m: int | None
    n: int | None
    S: float
    replicate_estimates: tuple[float, ...] = ()
    k_factor: float | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def half_width(self) -> float:
        return 0.5 * self.width

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "point": self.point,
            "lower": self.lower,
            "upper": self.upper,
            "alpha": self.alpha,
            "B": self.B,
            "m": self.m,
            "n": self.n,
            "S": self.S,
            "k_factor": self.k_factor,
            "warnings": list(self.warnings),
            "replicate_estimates": [float(r) for r in self.replicate_estimates],
        }

    def to_csv_row(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return [fmt(getattr(self, c)) if c != "warnings" else ";".join(self.warnings)
                for c in CSV_COLUMNS]


def _validated_replicates(point, replicate_estimates):
    reps = np.asarray(replicate_estimates, dtype=np.float64).ravel()
    if reps.size == 0:
        raise ValueError("at least one replicate estimate is required")
    if not np.all(np.isfinite(reps)) or not math.isfinite(point):
        raise ValueError("point and replicate estimates must be finite")
    return reps


def _spread(point, reps) -> float:
    return float(np.sqrt(np.mean((reps - point) ** 2)))


def _symmetric(method, point, half_width, alpha, B, m, n, S, reps, k_factor):
    warnings = []
    if S == 0.0:
        warnings.append(WARN_DEGENERATE_SPREAD)
    return IntervalEstimate(
        method=method, point=float(point),
        lower=float(point - half_width), upper=float(point + half_width),
        alpha=alpha, B=B, m=m, n=n, S=S,
        replicate_estimates=tuple(float(r) for r in reps),
        k_factor=k_factor, warnings=warnings,
    )


def cheap_subsampling_ci(point, replicate_estimates, m, n,
                         alpha=0.05) -> IntervalEstimate:
    """Interval from B without-replacement subsample re-estimates of size m."""
    alpha = _check_probability(alpha, "alpha")
    if not 1 <= m < n:
        raise ValueError(f"cheap subsampling requires 1 <= m < n, got m={m}, n={n}")
    reps = _validated_replicates(point, replicate_estimates)
    B = reps.size
    S = _spread(point, reps)
    hw = t_quantile(B, 1.0 - alpha / 2.0) * math.sqrt(m / (n - m)) * S
    return _symmetric(METHOD_CHEAP_SUBSAMPLING, point, hw, alpha, B, int(m),
                      int(n), S, reps, k_factor=m * n / (n - m))


def cheap_bootstrap_ci(point, replicate_estimates, alpha=0.05,
                       n=None) -> IntervalEstimate:
    """Interval from B full-size with-replacement re-estimates."""
    alpha = _check_probability(alpha, "alpha")
    reps = _validated_replicates(point, replicate_estimates)
    B = reps.size
    S = _spread(point, reps)
    hw = t_quantile(B, 1.0 - alpha / 2.0) * S
    return _symmetric(METHOD_CHEAP_BOOTSTRAP, point, hw, alpha, B,
                      int(n) if n is not None else None,
                      int(n) if n is not None else None, S, reps, k_factor=None)


def jackknife_limit_ci(point, replicate_estimates, m, n,
                       alpha=0.05) -> IntervalEstimate:
    """Normal-quantile interval from the delete-(n-m) jackknife variance
    estimate (m/(n-m)) * S^2, the limit of the subsampling interval as the
    number of replications grows."""
    alpha = _check_probability(alpha, "alpha")
    if not 1 <= m < n:
        raise ValueError(f"jackknife limit requires 1 <= m < n, got m={m}, n={n}")
    reps = _validated_replicates(point, replicate_estimates)
    B = reps.size
    S = _spread(point, reps)
    var_jack = (m / (n - m)) * S * S
    hw = normal_quantile(1.0 - alpha / 2.0) * math.sqrt(var_jack)
    return _symmetric(METHOD_JACKKNIFE_LIMIT, point, hw, alpha, B, int(m),
                      int(n), S, reps, k_factor=m * n / (n - m))


def asymptotic_if_ci(estimate, n, alpha=0.05) -> IntervalEstimate:
    """Wald interval from the estimated influence function.

    ``estimate`` must carry per-observation influence values; their raw
    mean of squares estimates the asymptotic variance.
    """
    alpha = _check_probability(alpha, "alpha")
    if getattr(estimate, "influence_values", None) is None:
        raise InfluenceUnavailable(
            "estimator does not provide influence values; the asymptotic "
            "interval is unsupported for it")
    phi = np.asarray(estimate.influence_values, dtype=np.float64)
    if phi.size != n:
        raise ValueError(f"expected {n} influence values, got {phi.size}")
    if not np.all(np.isfinite(phi)):
        raise ValueError("influence values must be finite")
    sigma_hat = float(np.sqrt(np.mean(phi ** 2)))
    hw = normal_quantile(1.0 - alpha / 2.0) * sigma_hat / math.sqrt(n)
    return _symmetric(METHOD_ASYMPTOTIC_IF, estimate.point, hw, alpha, 0,
                      None, int(n), sigma_hat, (), k_factor=None)
