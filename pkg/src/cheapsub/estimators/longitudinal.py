"""Two-interval sequential-regression estimator of the absolute risk of an
event by the end of the second interval under a sustained treatment regime.

The estimate is built backwards through the intervals (iterated conditional
expectations):

1. regress Y2 on covariate history among records that are uncensored,
   event-free at interval 1 and consistent with the regime, then predict
   Qbar2 for every at-risk record; records with an interval-1 event get
   Qbar2 = 1 (the event is absorbing);
2. regress Qbar2 on baseline covariates among uncensored records with
   baseline treatment equal to the regime, then predict Qbar1 for all
   records;
3. the point estimate is the mean of the predicted Qbar1.

With ``targeting=True`` each regression is followed by a one-parameter
logistic tilt: an intercept-only logistic fit with offset logit(Qbar) and
weight = (regime-consistent and uncensored indicator) / (cumulative
treatment propensity x cumulative censoring probability).  The tilts solve
the score equations of the estimated efficient influence curve

    phi_i = sum_t H_t,i (Qbar_{t+1,i} - Qbar_t,i) + Qbar1_i - point,

which is returned in ``influence_values`` and drives both the asymptotic
interval and the empirical mean-zero property checked in the tests.
Tilting on the logit scale keeps every prediction, and hence the point
estimate, inside [0, 1].

Outcome regressions are fitted on regime-consistent subsets, where the
treatment nodes are constant, so their model terms may only reference
covariate history (W0, W1 and products like "W0:W1").  Nuisance
probabilities are clipped to ``bounds`` before any weight is formed.
A fit whose outcome is constant in its subset (e.g. no events among the
regime-consistent records of a small subsample) degenerates to that
constant rate instead of failing: the tilt has no leverage there and the
score contribution is exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EstimatorFailure
from ..numerics import expit
from .base import EstimateWithIF
from .dataset import LongitudinalDataset
from .logistic import fit_logistic, predict_proba

#: Clipping range for estimated treatment/censoring probabilities.
PROB_BOUNDS = (0.01, 0.99)

#: Numerical floor for logit offsets only (not a positivity bound).
_LOGIT_EPS = 1e-12


@dataclass(frozen=True)
class ModelTerms:
    """Design terms per nuisance model, intercept always included.

    A term is a column name or a product "X:Y".  ``q2``/``q1`` are the
    sequential outcome regressions; ``a0``/``a1`` the treatment
    propensities; ``c1``/``c2`` the censoring models.  Empty tuples give
    intercept-only models.
    """

    q2: tuple[str, ...] = ("W0", "W1")
    q1: tuple[str, ...] = ("W0",)
    a0: tuple[str, ...] = ("W0",)
    a1: tuple[str, ...] = ("W0", "A0")
    c1: tuple[str, ...] = ("W0",)
    c2: tuple[str, ...] = ("W1",)


DEFAULT_TERMS = ModelTerms()

#: Saturated-in-binary-covariates variant, used for exact agreement with
#: stratified g-formula computations on discrete data.
SATURATED_TERMS = ModelTerms(q2=("W0", "W1", "W0:W1"), a1=("W0", "A0", "W0:A0"))


def build_design(columns: dict, terms: tuple[str, ...], mask=None) -> np.ndarray:
    """Design matrix [1, terms...] over the masked records."""
    if mask is None:
        mask = slice(None)

    def column(term):
        if ":" in term:
            left, right = term.split(":", 1)
            return columns[left][mask] * columns[right][mask]
        return columns[term][mask]

    cols = [column(t) for t in terms]
    n = len(cols[0]) if cols else len(columns["W0"][mask])
    return np.column_stack([np.ones(n)] + cols)


@dataclass
class FittedLogit:
    terms: tuple[str, ...]
    beta: np.ndarray

    def predict(self, columns, mask=None) -> np.ndarray:
        return predict_proba(build_design(columns, self.terms, mask), self.beta)


@dataclass
class ConstantRate:
    """Degenerate fit: the outcome was constant in the fit subset."""

    rate: float

    def predict(self, columns, mask=None) -> np.ndarray:
        if mask is None:
            mask = slice(None)
        return np.full(len(columns["W0"][mask]), self.rate)


@dataclass
class NuisanceModels:
    """The fitted nuisance set: outcome regressions, propensities,
    censoring models and the targeting tilts (None when not fitted)."""

    q2: FittedLogit | ConstantRate
    q1: FittedLogit | ConstantRate
    a0: FittedLogit | ConstantRate | None = None
    a1: FittedLogit | ConstantRate | None = None
    c1: FittedLogit | ConstantRate | None = None
    c2: FittedLogit | ConstantRate | None = None
    eps2: float | None = None
    eps1: float | None = None


def _fit_binary(columns, terms, mask, outcome):
    y = outcome[mask]
    if y.size == 0:
        raise EstimatorFailure("empty fit subset in sequential regression")
    if np.all(y == y[0]):
        return ConstantRate(float(y[0]))
    if y.size <= len(terms) + 1:
        raise EstimatorFailure(f"fit subset too small ({y.size} records for "
                               f"{len(terms) + 1} parameters)")
    X = build_design(columns, terms, mask)
    return FittedLogit(terms, fit_logistic(X, y, check_separation=False))


def _regime_prob(p_treat, regime):
    return p_treat if regime == 1 else 1.0 - p_treat


def _logit(p):
    return np.log(p) - np.log1p(-p)


def _tilt(qbar, outcome, weight, lo=_LOGIT_EPS):
    """Fit the one-parameter fluctuation and return its coefficient."""
    offset = _logit(np.clip(qbar, lo, 1.0 - lo))
    design = np.ones((len(outcome), 1))
    eps = float(fit_logistic(design, outcome, offset=offset, weights=weight,
                             check_separation=False)[0])
    return eps


def fit_longitudinal_risk_detailed(data: LongitudinalDataset, regime: int,
                                   targeting: bool = True,
                                   terms: ModelTerms = DEFAULT_TERMS,
                                   bounds=PROB_BOUNDS):
    """Like :func:`fit_longitudinal_risk` but also returns the fitted
    :class:`NuisanceModels`."""
    if regime not in (0, 1):
        raise ValueError(f"regime must be 0 or 1, got {regime!r}")
    lo, hi = bounds
    cols = data.columns()
    n = len(data)
    a = float(regime)
    A0, C1, Y1 = cols["A0"], cols["C1"], cols["Y1"]
    A1, C2, Y2 = cols["A1"], cols["C2"], cols["Y2"]

    uncensored1 = C1 == 1.0
    at_risk = uncensored1 & (Y1 == 0.0)
    event1 = uncensored1 & (Y1 == 1.0)
    follow0 = uncensored1 & (A0 == a)
    follow1 = follow0 & at_risk & (A1 == a) & (C2 == 1.0)
    if not follow0.any():
        raise EstimatorFailure("no uncensored records with baseline treatment "
                               "equal to the regime")
    if not follow1.any():
        raise EstimatorFailure("no uncensored regime-consistent records at "
                               "risk in interval 2")

    a0_model = a1_model = c1_model = c2_model = None
    H1 = H2 = None
    if targeting:
        everything = np.ones(n, dtype=bool)
        a0_model = _fit_binary(cols, terms.a0, everything, A0)
        c1_model = _fit_binary(cols, terms.c1, everything, C1)
        a1_model = _fit_binary(cols, terms.a1, at_risk, A1)
        c2_model = _fit_binary(cols, terms.c2, at_risk, C2)

        g1 = (np.clip(_regime_prob(a0_model.predict(cols), regime), lo, hi)
              * np.clip(c1_model.predict(cols), lo, hi))
        H1 = np.zeros(n)
        H1[follow0] = 1.0 / g1[follow0]
        g2_at = (g1[at_risk]
                 * np.clip(_regime_prob(a1_model.predict(cols, at_risk), regime),
                           lo, hi)
                 * np.clip(c2_model.predict(cols, at_risk), lo, hi))
        H2 = np.zeros(n)
        H2[at_risk] = 1.0 / g2_at
        H2[~follow1] = 0.0

    # interval 2 backwards: regress, predict for everyone still at risk,
    # then tilt on the records that actually followed the regime
    q2_model = _fit_binary(cols, terms.q2, follow1, Y2)
    qbar2 = np.full(n, np.nan)
    qbar2[at_risk] = q2_model.predict(cols, at_risk)
    eps2 = None
    if targeting and not isinstance(q2_model, ConstantRate):
        eps2 = _tilt(qbar2[follow1], Y2[follow1], H2[follow1])
        qbar2[at_risk] = expit(
            _logit(np.clip(qbar2[at_risk], _LOGIT_EPS, 1.0 - _LOGIT_EPS)) + eps2)
    qbar2_full = np.where(event1, 1.0, qbar2)

    # interval 1: regress the interval-2 predictions on baseline history
    q1_model = _fit_binary(cols, terms.q1, follow0, qbar2_full)
    qbar1 = q1_model.predict(cols)
    eps1 = None
    if targeting and not isinstance(q1_model, ConstantRate):
        eps1 = _tilt(qbar1[follow0], qbar2_full[follow0], H1[follow0])
        qbar1 = expit(
            _logit(np.clip(qbar1, _LOGIT_EPS, 1.0 - _LOGIT_EPS)) + eps1)

    point = float(np.mean(qbar1))

    influence = None
    if targeting:
        influence = qbar1 - point
        influence[follow0] += H1[follow0] * (qbar2_full[follow0] - qbar1[follow0])
        influence[follow1] += H2[follow1] * (Y2[follow1] - qbar2[follow1])

    estimate = EstimateWithIF(point=point, influence_values=influence)
    models = NuisanceModels(q2=q2_model, q1=q1_model, a0=a0_model, a1=a1_model,
                            c1=c1_model, c2=c2_model, eps2=eps2, eps1=eps1)
    return estimate, models


def fit_longitudinal_risk(data: LongitudinalDataset, regime: int,
                          targeting: bool = True,
                          terms: ModelTerms = DEFAULT_TERMS,
                          bounds=PROB_BOUNDS) -> EstimateWithIF:
    """Absolute interval-2 event risk under sustained treatment ``regime``."""
    estimate, _ = fit_longitudinal_risk_detailed(data, regime, targeting,
                                                 terms, bounds)
    return estimate


@dataclass(frozen=True)
class LongitudinalRiskEstimator:
    regime: int = 1
    targeting: bool = True
    terms: ModelTerms = DEFAULT_TERMS
    name: str = "longitudinal"

    @property
    def provides_influence(self) -> bool:
        return self.targeting

    def fit(self, data) -> EstimateWithIF:
        return fit_longitudinal_risk(data, self.regime, self.targeting,
                                     self.terms)
