"""Synthetic data generator, truth oracle and the Monte Carlo coverage
harness.

The generating mechanism is a two-interval survival setting with a binary
treatment, a continuous confounder and right censoring:

    W0 ~ N(0, 1)
    A0 ~ Bern(expit(-0.2 + 0.4 W0))
    C1 ~ Bern(expit(3.5 + W0))                        1 = uncensored
    Y1 ~ Bern(expit(-1.4 + 0.1 W0 - 1.5 A0))          if C1 = 1
    W1 ~ N(0.5 W0 + 0.2 A0, 1)                        if at risk
    A1 ~ Bern(expit(-0.4 W0 + 0.8 A0))                if at risk
    C2 ~ Bern(expit(3.5 + W1)) if at risk, 0 if C1 = 0
    Y2 ~ Bern(expit(-1.4 + 0.1 W1 - 1.5 A1))          if C2 = 1 and Y1 = 0

with later variables structurally missing once a record is censored, and
the event absorbing (Y1 = 1 forces Y2 = 1).

The target parameter is the risk of an event by the end of interval 2
under sustained treatment a with no censoring:

    psi(a) = E_W0[ p1(W0) + (1 - p1(W0)) E_{W1|W0}[ p2(W1) ] ],
    p_t(w) = expit(-1.4 + 0.1 w - 1.5 a),  W1|W0 ~ N(0.5 W0 + 0.2 a, 1).

The truth oracle evaluates psi two independent ways, nested Gauss-Hermite
quadrature and brute-force simulation of intervened trajectories, and
refuses to answer when they disagree.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import CheapsubError, ConfigError
from .estimators import (LongitudinalDataset, LongitudinalRiskEstimator,
                         MeanEstimator)
from .intervals import (ALL_METHODS, METHOD_ASYMPTOTIC_IF,
                        METHOD_CHEAP_BOOTSTRAP, METHOD_CHEAP_SUBSAMPLING,
                        METHOD_JACKKNIFE_LIMIT, IntervalEstimate,
                        asymptotic_if_ci, cheap_bootstrap_ci,
                        cheap_subsampling_ci, jackknife_limit_ci)
from .numerics import expit
from .resampling import DEFAULT_ETA, ReplicationPlan, SeedSpec, run_replications

#: Stream ids reserved for dataset generation and for the with-replacement
#: replicate family, keeping them disjoint from subsample replicate streams.
DATA_STREAM = 1 << 62
BOOTSTRAP_STREAM_OFFSET = 1 << 60


# conditional probabilities of the generating mechanism

def treatment0_prob(w0):
    return expit(-0.2 + 0.4 * np.asarray(w0, dtype=np.float64))


def treatment1_prob(w0, a0):
    return expit(-0.4 * np.asarray(w0, dtype=np.float64) + 0.8 * np.asarray(a0))


def censoring_prob(w):
    return expit(3.5 + np.asarray(w, dtype=np.float64))


def event_prob(w, a):
    return expit(-1.4 + 0.1 * np.asarray(w, dtype=np.float64) - 1.5 * np.asarray(a))


def _as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed), DATA_STREAM)


def generate_dgm(n: int, seed) -> LongitudinalDataset:
    """Draw n records from the generating mechanism; deterministic given
    the seed (an integer master seed or a SeedSpec)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = _as_seed(seed).generator()

    W0 = rng.standard_normal(n)
    A0 = (rng.random(n) < treatment0_prob(W0)).astype(np.float64)
    C1 = (rng.random(n) < censoring_prob(W0)).astype(np.float64)

    uncensored1 = C1 == 1.0
    Y1 = np.full(n, np.nan)
    Y1[uncensored1] = (rng.random(n) < event_prob(W0, A0))[uncensored1]

    at_risk = uncensored1 & (Y1 == 0.0)
    W1 = np.full(n, np.nan)
    W1[at_risk] = (0.5 * W0 + 0.2 * A0 + rng.standard_normal(n))[at_risk]
    A1 = np.full(n, np.nan)
    A1[at_risk] = (rng.random(n) < treatment1_prob(W0, A0))[at_risk]

    C2 = np.full(n, np.nan)
    W1_filled = np.where(at_risk, W1, 0.0)
    C2[at_risk] = (rng.random(n) < censoring_prob(W1_filled))[at_risk]
    C2[~uncensored1] = 0.0

    Y2 = np.full(n, np.nan)
    followed2 = at_risk & (C2 == 1.0)
    A1_filled = np.where(at_risk, A1, 0.0)
    Y2[followed2] = (rng.random(n) < event_prob(W1_filled, A1_filled))[followed2]
    Y2[uncensored1 & (Y1 == 1.0)] = 1.0  # absorbing event

    return LongitudinalDataset(W0, A0, C1, Y1, W1, A1, C2, Y2).validate()


def risk_by_quadrature(regime: int, nodes: int = 96,
                       event_model=event_prob) -> float:
    """psi by nested Gauss-Hermite quadrature over (W0, W1|W0)."""
    x, w = np.polynomial.hermite.hermgauss(nodes)
    weights = w / math.sqrt(math.pi)
    a = float(regime)
    w0 = math.sqrt(2.0) * x
    p1 = event_model(w0, a)
    w1 = (0.5 * w0 + 0.2 * a)[:, None] + math.sqrt(2.0) * x[None, :]
    inner = event_model(w1, a) @ weights
    return float(np.sum(weights * (p1 + (1.0 - p1) * inner)))


def risk_by_simulation(regime: int, draws: int = 10_000_000, seed: int = 0,
                       event_model=event_prob,
                       chunk_size: int = 1_000_000) -> float:
    """psi by brute force: simulate intervened (treated, uncensored)
    trajectories and count events."""
    rng = SeedSpec(seed, DATA_STREAM + 1 + regime).generator()
    a = float(regime)
    events = 0
    remaining = draws
    while remaining > 0:
        c = min(chunk_size, remaining)
        w0 = rng.standard_normal(c)
        y1 = rng.random(c) < event_model(w0, a)
        w1 = 0.5 * w0 + 0.2 * a + rng.standard_normal(c)
        y2 = rng.random(c) < event_model(w1, a)
        events += int(np.sum(y1 | (~y1 & y2)))
        remaining -= c
    return events / draws


@dataclass(frozen=True)
class TruthResult:
    regime: int
    value: float  # canonical value (the quadrature route)
    quadrature: float
    monte_carlo: float
    mc_draws: int

    def to_json_dict(self) -> dict:
        return {"regime": self.regime, "psi_truth": self.value,
                "quadrature": self.quadrature, "monte_carlo": self.monte_carlo,
                "mc_draws": self.mc_draws}


@lru_cache(maxsize=None)
def truth_oracle(regime: int, mc_draws: int = 10_000_000,
                 seed: int = 0) -> TruthResult:
    """Cross-checked true risk under sustained treatment ``regime``.

    Hard error when quadrature and simulation disagree by more than 5e-4
    (about six simulation standard errors at the default draw count).
    """
    if regime not in (0, 1):
        raise ValueError(f"regime must be 0 or 1, got {regime!r}")
    quad = risk_by_quadrature(regime)
    mc = risk_by_simulation(regime, draws=mc_draws, seed=seed)
    if abs(quad - mc) > 5e-4:
        raise CheapsubError(
            f"truth oracle cross-check failed for regime {regime}: "
            f"quadrature {quad:.6f} vs monte carlo {mc:.6f}")
    return TruthResult(regime=regime, value=quad, quadrature=quad,
                       monte_carlo=mc, mc_draws=mc_draws)


ESTIMATOR_NAMES = ("longitudinal", "mean")


@dataclass(frozen=True)
class ScenarioSpec:
    """One cell of the simulation study."""

    n: int
    eta: float = DEFAULT_ETA
    B: int = 25
    alpha: float = 0.05
    n_sim: int = 1000
    methods: tuple[str, ...] = ALL_METHODS
    master_seed: int = 0
    estimator: str = "longitudinal"
    regime: int = 1
    targeting: bool = True
    max_retries: int = 5
    m: int | None = None  # overrides the eta rule when set

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if not 0.0 < self.eta < 1.0:
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta}")
        if self.B < 1 or self.n_sim < 1:
            raise ConfigError("B and n_sim must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        unknown = [m for m in self.methods if m not in ALL_METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; "
                              f"choose from {list(ALL_METHODS)}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.estimator not in ESTIMATOR_NAMES:
            raise ConfigError(f"unknown estimator {self.estimator!r}; "
                              f"choose from {list(ESTIMATOR_NAMES)}")
        if self.regime not in (0, 1):
            raise ConfigError(f"regime must be 0 or 1, got {self.regime}")

    @property
    def subsample_size(self) -> int:
        m = self.m if self.m is not None else int(self.eta * self.n)
        if not 1 <= m < self.n:
            raise ConfigError(f"subsample size must satisfy 1 <= m < n, "
                              f"got m={m}, n={self.n}")
        return m

    def build_estimator(self):
        if self.estimator == "mean":
            return MeanEstimator()
        return LongitudinalRiskEstimator(regime=self.regime,
                                         targeting=self.targeting)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n, "eta": self.eta, "m": self.subsample_size,
            "B": self.B, "alpha": self.alpha, "n_sim": self.n_sim,
            "methods": list(self.methods), "master_seed": self.master_seed,
            "estimator": self.estimator, "regime": self.regime,
            "targeting": self.targeting, "max_retries": self.max_retries,
        }


@dataclass
class MethodSummary:
    method: str
    coverage: float
    coverage_se: float
    mean_width: float
    relative_width_pct: float | None
    failures: int


@dataclass
class CoverageReport:
    spec: ScenarioSpec
    m: int
    psi_truth: float
    summaries: list[MethodSummary]
    raw: list[tuple] = field(default_factory=list)

    CSV_COLUMNS = ("method", "n", "eta", "m", "B", "alpha", "coverage",
                   "coverage_se", "mean_width", "relative_width_pct",
                   "failures", "seed")

    RAW_COLUMNS = ("sim", "method", "point", "lower", "upper", "covered",
                   "width", "retries")

    def to_csv_rows(self) -> list[list[str]]:
        rows = [list(self.CSV_COLUMNS)]
        for s in self.summaries:
            rows.append([
                s.method, str(self.spec.n), repr(self.spec.eta), str(self.m),
                str(self.spec.B), repr(self.spec.alpha), repr(s.coverage),
                repr(s.coverage_se), repr(s.mean_width),
                "" if s.relative_width_pct is None else repr(s.relative_width_pct),
                str(s.failures), str(self.spec.master_seed),
            ])
        return rows

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.spec.to_json_dict(),
            "psi_truth": self.psi_truth,
            "methods": [{
                "method": s.method, "coverage": s.coverage,
                "coverage_se": s.coverage_se, "mean_width": s.mean_width,
                "relative_width_pct": s.relative_width_pct,
                "failures": s.failures,
            } for s in self.summaries],
        }


def _simulate_dataset(spec: ScenarioSpec, submaster: int):
    seed = SeedSpec(submaster, DATA_STREAM)
    if spec.estimator == "mean":
        return seed.generator().standard_normal(spec.n)
    return generate_dgm(spec.n, seed)


def _one_simulation(spec: ScenarioSpec, m: int, psi: float, j: int) -> list[tuple]:
    submaster = SeedSpec(spec.master_seed).submaster(j)
    data = _simulate_dataset(spec, submaster)
    estimator = spec.build_estimator()
    full = estimator.fit(data)

    needs_subsamples = (METHOD_CHEAP_SUBSAMPLING in spec.methods
                        or METHOD_JACKKNIFE_LIMIT in spec.methods)
    rep_sub = rep_boot = None
    if needs_subsamples:
        rep_sub = run_replications(data, estimator, ReplicationPlan(
            master_seed=submaster, B=spec.B, m=m, workers=1,
            max_retries=spec.max_retries))
    if METHOD_CHEAP_BOOTSTRAP in spec.methods:
        rep_boot = run_replications(data, estimator, ReplicationPlan(
            master_seed=submaster, B=spec.B, with_replacement=True, workers=1,
            max_retries=spec.max_retries,
            stream_offset=BOOTSTRAP_STREAM_OFFSET))

    intervals: dict[str, IntervalEstimate] = {}
    retries: dict[str, int] = {}
    for method in spec.methods:
        if method == METHOD_CHEAP_SUBSAMPLING:
            ci = cheap_subsampling_ci(full.point, rep_sub.estimates, m, spec.n,
                                      spec.alpha)
            retries[method] = rep_sub.total_retries
        elif method == METHOD_JACKKNIFE_LIMIT:
            ci = jackknife_limit_ci(full.point, rep_sub.estimates, m, spec.n,
                                    spec.alpha)
            retries[method] = rep_sub.total_retries
        elif method == METHOD_CHEAP_BOOTSTRAP:
            ci = cheap_bootstrap_ci(full.point, rep_boot.estimates, spec.alpha,
                                    n=spec.n)
            retries[method] = rep_boot.total_retries
        else:
            ci = asymptotic_if_ci(full, spec.n, spec.alpha)
            retries[method] = 0
        intervals[method] = ci

    # the asymptotic width is the relative-width denominator even when the
    # asymptotic interval itself was not requested
    if METHOD_ASYMPTOTIC_IF in intervals:
        asym_width = intervals[METHOD_ASYMPTOTIC_IF].width
    elif full.influence_values is not None:
        asym_width = asymptotic_if_ci(full, spec.n, spec.alpha).width
    else:
        asym_width = math.nan

    rows = []
    for method in spec.methods:
        ci = intervals[method]
        rows.append((j, method, ci.point, ci.lower, ci.upper,
                     bool(ci.contains(psi)), ci.width, retries[method],
                     asym_width))
    return rows


def _coverage_chunk(args):
    spec, m, psi, js = args
    rows = []
    for j in js:
        rows.extend(_one_simulation(spec, m, psi, j))
    return rows


def run_coverage_study(spec: ScenarioSpec, workers: int | None = 1,
                       keep_raw: bool = False) -> CoverageReport:
    """Repeat draw -> fit -> replicate -> interval over n_sim datasets and
    aggregate coverage and widths per method.

    The report is a pure function of the spec: simulation j derives its own
    master seed, so results are identical for any worker count.
    """
    m = spec.subsample_size
    if spec.estimator == "longitudinal" and not spec.targeting \
            and METHOD_ASYMPTOTIC_IF in spec.methods:
        raise ConfigError("asymptotic-if requires influence values; enable "
                          "targeting or drop the method")
    if spec.estimator == "mean":
        psi = 0.0  # standard normal data
    else:
        psi = truth_oracle(spec.regime).value

    n_workers = os.cpu_count() or 1 if workers is None else max(1, workers)

    sims = list(range(spec.n_sim))
    if n_workers == 1 or spec.n_sim == 1:
        rows = _coverage_chunk((spec, m, psi, sims))
    else:
        n_chunks = min(spec.n_sim, n_workers * 4)
        chunks = [sims[i::n_chunks] for i in range(n_chunks)]
        args = [(spec, m, psi, c) for c in chunks if c]
        rows = []
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for chunk_rows in pool.map(_coverage_chunk, args):
                rows.extend(chunk_rows)
    rows.sort(key=lambda r: (r[0], spec.methods.index(r[1])))

    summaries = []
    for method in spec.methods:
        mrows = [r for r in rows if r[1] == method]
        covered = np.array([r[5] for r in mrows], dtype=np.float64)
        widths = np.array([r[6] for r in mrows], dtype=np.float64)
        asym_widths = np.array([r[8] for r in mrows], dtype=np.float64)
        coverage = float(np.mean(covered))
        se = float(math.sqrt(coverage * (1.0 - coverage) / len(mrows)))
        mean_width = float(np.mean(widths))
        mean_asym = float(np.mean(asym_widths))
        relative = (100.0 * mean_width / mean_asym
                    if math.isfinite(mean_asym) and mean_asym > 0 else None)
        summaries.append(MethodSummary(
            method=method, coverage=coverage, coverage_se=se,
            mean_width=mean_width, relative_width_pct=relative,
            failures=int(sum(r[7] for r in mrows))))

    report = CoverageReport(spec=spec, m=m, psi_truth=psi, summaries=summaries)
    if keep_raw:
        report.raw = [r[:8] for r in rows]
    return report


@dataclass
class SeedExperimentResult:
    """Upper/lower endpoints of repeated interval constructions on one
    fixed dataset, by subsample proportion and replication count."""

    n: int
    eta_grid: tuple[float, ...]
    B_grid: tuple[int, ...]
    n_seeds: int
    master_seed: int
    point: float
    rows: list[tuple]  # (eta, B, run, lower, upper)

    DETAIL_COLUMNS = ("eta", "B", "run", "lower", "upper")
    SUMMARY_COLUMNS = ("eta", "B", "upper_min", "upper_max", "upper_range",
                       "upper_sd")

    def cell_upper(self, eta: float, B: int) -> np.ndarray:
        return np.array([r[4] for r in self.rows if r[0] == eta and r[1] == B])

    def summary_rows(self) -> list[tuple]:
        out = []
        for eta in self.eta_grid:
            for B in self.B_grid:
                u = self.cell_upper(eta, B)
                spread = float(u.max() - u.min())
                sd = float(np.std(u, ddof=1)) if len(u) > 1 else 0.0
                out.append((eta, B, float(u.min()), float(u.max()), spread, sd))
        return out


def _seed_experiment_run(args):
    data, estimator, master_seed, run, eta_grid, B_grid, n, alpha, \
        point, max_retries = args
    b_max = max(B_grid)
    submaster = SeedSpec(master_seed).submaster(run)
    rows = []
    for eta in eta_grid:
        m = int(eta * n)
        rep = run_replications(data, estimator, ReplicationPlan(
            master_seed=submaster, B=b_max, m=m, workers=1,
            max_retries=max_retries))
        # replicate b is a pure function of its stream, so the first B
        # replicates of the longest run equal a run at that smaller B
        for B in B_grid:
            ci = cheap_subsampling_ci(point, rep.estimates[:B], m, n, alpha)
            rows.append((eta, B, run, ci.lower, ci.upper))
    return rows


def run_seed_experiment(n: int, eta_grid, B_grid, n_seeds: int,
                        master_seed: int = 0, estimator: str = "longitudinal",
                        regime: int = 1, targeting: bool = True,
                        alpha: float = 0.05, max_retries: int = 5,
                        workers: int | None = 1) -> SeedExperimentResult:
    """Repeat the full subsampling interval construction ``n_seeds`` times
    per (eta, B) cell on one fixed dataset, to expose the spread of the
    endpoints caused by the finite number of random replicates."""
    if n_seeds < 1:
        raise ConfigError(f"n_seeds must be >= 1, got {n_seeds}")
    eta_grid = tuple(float(e) for e in eta_grid)
    B_grid = tuple(int(b) for b in B_grid)
    if not eta_grid or not B_grid:
        raise ConfigError("eta_grid and B_grid must be non-empty")
    for eta in eta_grid:
        if not 0.0 < eta < 1.0 or not 1 <= int(eta * n) < n:
            raise ConfigError(f"eta={eta} gives an invalid subsample size "
                              f"for n={n}")

    if estimator == "mean":
        est = MeanEstimator()
        data = SeedSpec(master_seed, DATA_STREAM).generator().standard_normal(n)
    elif estimator == "longitudinal":
        est = LongitudinalRiskEstimator(regime=regime, targeting=targeting)
        data = generate_dgm(n, SeedSpec(master_seed, DATA_STREAM))
    else:
        raise ConfigError(f"unknown estimator {estimator!r}")
    point = est.fit(data).point

    args = [(data, est, master_seed, run, eta_grid, B_grid, n, alpha, point,
             max_retries) for run in range(n_seeds)]
    n_workers = os.cpu_count() or 1 if workers is None else max(1, workers)
    rows = []
    if n_workers == 1 or n_seeds == 1:
        for a in args:
            rows.extend(_seed_experiment_run(a))
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for chunk in pool.map(_seed_experiment_run, args):
                rows.extend(chunk)
    rows.sort(key=lambda r: (eta_grid.index(r[0]), B_grid.index(r[1]), r[2]))
    return SeedExperimentResult(n=n, eta_grid=eta_grid, B_grid=B_grid,
                                n_seeds=n_seeds, master_seed=master_seed,
                                point=point, rows=rows)
