from .base import EstimateWithIF, Estimator
from .dataset import COLUMNS, LongitudinalDataset
from .logistic import LogisticCoefficientEstimator, fit_logistic, predict_proba
from .longitudinal import (DEFAULT_TERMS, SATURATED_TERMS,
                           LongitudinalRiskEstimator, ModelTerms,
                           NuisanceModels, fit_longitudinal_risk,
                           fit_longitudinal_risk_detailed)
from .mean import MeanEstimator, fit_mean

__all__ = [
    "COLUMNS",
    "DEFAULT_TERMS",
    "SATURATED_TERMS",
    "EstimateWithIF",
    "Estimator",
    "LogisticCoefficientEstimator",
    "LongitudinalDataset",
    "LongitudinalRiskEstimator",
    "MeanEstimator",
    "ModelTerms",
    "NuisanceModels",
    "fit_logistic",
    "fit_longitudinal_risk",
    "fit_longitudinal_risk_detailed",
    "fit_mean",
    "predict_proba",
]
