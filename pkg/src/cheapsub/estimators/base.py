"""Estimator contract used by the replication engine and the intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np


@dataclass
class EstimateWithIF:
    """A scalar point estimate, optionally with per-observation estimated
    influence-function values (required by the asymptotic interval)."""

    point: float
    influence_values: np.ndarray | None = None

    def __post_init__(self):
        self.point = float(self.point)
        if not math.isfinite(self.point):
            raise ValueError("point estimate must be finite")
        if self.influence_values is not None:
            self.influence_values = np.asarray(self.influence_values,
                                               dtype=np.float64)
            if not np.all(np.isfinite(self.influence_values)):
                raise ValueError("influence values must be finite")


@runtime_checkable
class Estimator(Protocol):
    """Anything with a deterministic ``fit(data) -> EstimateWithIF``.

    ``provides_influence`` declares whether fits carry influence values.
    Instances must be picklable so replicates can run in worker processes.
    """

    name: str

    @property
    def provides_influence(self) -> bool: ...

    def fit(self, data) -> EstimateWithIF: ...
