"""Sample mean: the minimal asymptotically linear estimator.

Influence values are the centered observations, so the mean doubles as an
exact oracle for interval and engine tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .base import EstimateWithIF


def fit_mean(values) -> EstimateWithIF:
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size < 2:
        raise DataError(f"mean estimator needs at least 2 observations, "
                        f"got {values.size}")
    if not np.all(np.isfinite(values)):
        raise DataError("mean estimator requires finite values")
    point = float(np.mean(values))
    return EstimateWithIF(point=point, influence_values=values - point)


@dataclass(frozen=True)
class MeanEstimator:
    name: str = "mean"

    @property
    def provides_influence(self) -> bool:
        return True

    def fit(self, data) -> EstimateWithIF:
        return fit_mean(data)
