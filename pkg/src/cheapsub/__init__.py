"""Cheap subsampling confidence intervals for asymptotically linear
estimators, plus comparators and a Monte Carlo coverage harness."""

from .errors import (CheapsubError, ConfigError, DataError, EstimatorFailure,
                     InfluenceUnavailable)
from .estimators import (EstimateWithIF, LogisticCoefficientEstimator,
                         LongitudinalDataset, LongitudinalRiskEstimator,
                         MeanEstimator, fit_logistic, fit_longitudinal_risk,
                         fit_mean)
from .intervals import (ALL_METHODS, IntervalEstimate, asymptotic_if_ci,
                        cheap_bootstrap_ci, cheap_subsampling_ci,
                        jackknife_limit_ci)
from .resampling import (DEFAULT_ETA, IndexSet, ReplicationPlan,
                         ReplicationResult, SeedSpec, resample_with_replacement,
                         run_replications, subsample)
from .simstudy import (CoverageReport, ScenarioSpec, SeedExperimentResult,
                       TruthResult, generate_dgm, run_coverage_study,
                       run_seed_experiment, truth_oracle)

__version__ = "0.1.0"

__all__ = [
    "ALL_METHODS",
    "CheapsubError",
    "ConfigError",
    "CoverageReport",
    "DEFAULT_ETA",
    "DataError",
    "EstimateWithIF",
    "EstimatorFailure",
    "IndexSet",
    "InfluenceUnavailable",
    "IntervalEstimate",
    "LogisticCoefficientEstimator",
    "LongitudinalDataset",
    "LongitudinalRiskEstimator",
    "MeanEstimator",
    "ReplicationPlan",
    "ReplicationResult",
    "ScenarioSpec",
    "SeedExperimentResult",
    "SeedSpec",
    "TruthResult",
    "asymptotic_if_ci",
    "cheap_bootstrap_ci",
    "cheap_subsampling_ci",
    "fit_logistic",
    "fit_longitudinal_risk",
    "fit_mean",
    "generate_dgm",
    "jackknife_limit_ci",
    "resample_with_replacement",
    "run_coverage_study",
    "run_replications",
    "run_seed_experiment",
    "subsample",
    "truth_oracle",
    "__version__",
]
