import itertools

import numpy as np
import pytest

from cheapsub.errors import EstimatorFailure
from cheapsub.estimators import EstimateWithIF, MeanEstimator
from cheapsub.resampling import (IndexSet, ReplicationPlan, SeedSpec,
                                 resample_with_replacement, run_replications,
                                 subsample)


class FailsWhenValuePresent:
    """Estimator that fails whenever a marked value is in the replicate,
    making failures a deterministic function of the draw."""

    name = "flaky"
    provides_influence = False

    def __init__(self, poison):
        self.poison = poison

    def fit(self, data):
        if np.any(data == self.poison):
            raise EstimatorFailure("poisoned subsample")
        return EstimateWithIF(point=float(np.mean(data)))


class AlwaysFails:
    name = "broken"
    provides_influence = False

    def fit(self, data):
        raise EstimatorFailure("cannot fit anything")


class TestSeedSpec:
    def test_same_key_same_stream(self):
        a = SeedSpec(123, 5).generator().random(8)
        b = SeedSpec(123, 5).generator().random(8)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = SeedSpec(123, 5).generator().random(8)
        b = SeedSpec(123, 6).generator().random(8)
        assert not np.array_equal(a, b)

    def test_submaster_is_deterministic(self):
        assert SeedSpec(9).submaster(3) == SeedSpec(9).submaster(3)
        assert SeedSpec(9).submaster(3) != SeedSpec(9).submaster(4)


class TestSubsample:
    def test_deterministic(self):
        a = subsample(50, 20, SeedSpec(1, 2))
        b = subsample(50, 20, SeedSpec(1, 2))
        np.testing.assert_array_equal(a.indices, b.indices)

    @pytest.mark.parametrize("n,m", [(10, 10), (10, 11), (10, 0), (1, 1)])
    def test_rejects_bad_sizes(self, n, m):
        with pytest.raises(ValueError):
            subsample(n, m, SeedSpec(0))

    def test_two_outcomes_balanced(self):
        # n=2, m=1: each index should be drawn about half the time
        hits = 0
        n_seeds = 100_000
        for s in range(n_seeds):
            hits += subsample(2, 1, SeedSpec(42, s)).indices[0]
        assert hits / n_seeds == pytest.approx(0.5, abs=0.01)

    def test_inclusion_frequency_is_m_over_n(self):
        # exact inclusion probability of each index is m/n by symmetry
        counts = np.zeros(5)
        n_seeds = 100_000
        for s in range(n_seeds):
            counts[subsample(5, 3, SeedSpec(7, s)).indices] += 1
        np.testing.assert_allclose(counts / n_seeds, 3 / 5, atol=0.01)

    def test_no_duplicates_random_sizes(self):
        rng = np.random.default_rng(0)
        for s in range(2000):
            n = int(rng.integers(2, 300))
            m = int(rng.integers(1, n))
            idx = subsample(n, m, SeedSpec(3, s)).indices
            assert len(set(idx.tolist())) == m

    def test_cv_folds_disjoint_but_resample_folds_overlap(self):
        overlaps = 0
        for s in range(200):
            sub = subsample(40, 20, SeedSpec(11, s)).indices
            fold_a, fold_b = set(sub[:10].tolist()), set(sub[10:].tolist())
            assert not fold_a & fold_b
            boot = resample_with_replacement(20, 20, SeedSpec(11, s)).indices
            if set(boot[:10].tolist()) & set(boot[10:].tolist()):
                overlaps += 1
        assert overlaps > 100  # ties across folds are the norm, not the exception


class TestResampleWithReplacement:
    def test_single_atom(self):
        idx = resample_with_replacement(1, 3, SeedSpec(0)).indices
        np.testing.assert_array_equal(idx, [0, 0, 0])

    def test_rejects_zero_draws(self):
        with pytest.raises(ValueError):
            resample_with_replacement(5, 0, SeedSpec(0))

    def test_duplicate_probability_two_draws(self):
        dups = sum(
            len(set(resample_with_replacement(2, 2, SeedSpec(5, s)).indices.tolist())) == 1
            for s in range(100_000))
        assert dups / 100_000 == pytest.approx(0.5, abs=0.01)

    def test_all_distinct_probability(self):
        # P(all distinct) for n=k=5 is 5!/5^5 = 0.0384
        n_draws = 30_000
        distinct = sum(
            len(set(resample_with_replacement(5, 5, SeedSpec(9, s)).indices.tolist())) == 5
            for s in range(n_draws))
        assert distinct / n_draws == pytest.approx(0.0384, abs=0.005)


class TestIndexSet:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            IndexSet(indices=np.array([0, 5]), n=5, m=2, with_replacement=False)

    def test_rejects_duplicates_without_replacement(self):
        with pytest.raises(ValueError):
            IndexSet(indices=np.array([1, 1]), n=5, m=2, with_replacement=False)

    def test_allows_duplicates_with_replacement(self):
        s = IndexSet(indices=np.array([1, 1, 4]), n=5, m=3, with_replacement=True)
        assert s.m == 3


class TestReplicationPlan:
    @pytest.mark.parametrize("eta,n,expected", [
        (0.8, 8652, 6921),
        (0.632, 2000, 1264),
        (0.632, 500, 316),
        (0.9, 2000, 1800),
    ])
    def test_proportion_rule(self, eta, n, expected):
        assert ReplicationPlan(master_seed=0, B=1, eta=eta).resolve_size(n) == expected

    def test_default_eta(self):
        assert ReplicationPlan(master_seed=0, B=1).resolve_size(1000) == 632

    def test_explicit_m_wins(self):
        plan = ReplicationPlan(master_seed=0, B=1, m=10, eta=0.9)
        assert plan.resolve_size(100) == 10

    def test_invalid(self):
        with pytest.raises(ValueError):
            ReplicationPlan(master_seed=0, B=0)
        with pytest.raises(ValueError):
            ReplicationPlan(master_seed=0, B=1, eta=1.0)
        with pytest.raises(ValueError):
            ReplicationPlan(master_seed=0, B=1, m=12).resolve_size(12)


def _finite_population_variance(values, m):
    """Exact conditional variance of a size-m without-replacement subsample
    mean, given the data: (sigma_fp^2 / m) * (n - m) / (n - 1)."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    sigma_fp2 = np.mean((values - values.mean()) ** 2)
    return sigma_fp2 / m * (n - m) / (n - 1)


class TestRunReplications:
    def test_single_replicate_reproducible(self):
        data = np.array([1.0, 2.0, 3.0, 4.0])
        plan = ReplicationPlan(master_seed=77, B=1, m=2)
        r1 = run_replications(data, MeanEstimator(), plan)
        r2 = run_replications(data, MeanEstimator(), plan)
        assert r1.estimates.tobytes() == r2.estimates.tobytes()
        idx = subsample(4, 2, SeedSpec(77, 0)).indices
        assert r1.estimates[0] == pytest.approx(np.mean(data[idx]), abs=0)

    @pytest.mark.parametrize("workers", [4, 16])
    def test_worker_count_invariance(self, workers):
        data = SeedSpec(5).generator().standard_normal(60)
        serial = run_replications(data, MeanEstimator(), ReplicationPlan(
            master_seed=3, B=30, m=20, workers=1))
        parallel = run_replications(data, MeanEstimator(), ReplicationPlan(
            master_seed=3, B=30, m=20, workers=workers))
        assert serial.estimates.tobytes() == parallel.estimates.tobytes()
        assert serial.retries == parallel.retries

    def test_enumeration_matches_variance_formula(self):
        # brute force over all C(10,5) subsets validates the formula the
        # empirical check below relies on
        values = SeedSpec(21).generator().standard_normal(10)
        full = values.mean()
        sq = [(values[list(c)].mean() - full) ** 2
              for c in itertools.combinations(range(10), 5)]
        assert np.mean(sq) == pytest.approx(
            _finite_population_variance(values, 5), rel=1e-12)

    def test_replicate_mean_variance(self):
        data = SeedSpec(13).generator().standard_normal(100)
        plan = ReplicationPlan(master_seed=4, B=1000, m=50)
        result = run_replications(data, MeanEstimator(), plan)
        empirical = np.var(result.estimates - data.mean())
        expected = _finite_population_variance(data, 50)
        assert empirical == pytest.approx(expected, rel=0.10)

    def test_retries_reported_and_deterministic(self):
        data = np.arange(8.0)
        plan = ReplicationPlan(master_seed=6, B=40, m=2, max_retries=20)
        est = FailsWhenValuePresent(poison=0.0)
        r1 = run_replications(data, est, plan)
        r2 = run_replications(data, est, plan)
        assert r1.total_retries > 0
        assert r1.retries == r2.retries
        assert np.all(r1.estimates > 0)  # every kept fit avoided the poison

    def test_hard_failure_after_retry_budget(self):
        data = np.arange(10.0)
        plan = ReplicationPlan(master_seed=1, B=3, m=5, max_retries=2)
        with pytest.raises(EstimatorFailure, match="after 3 attempts"):
            run_replications(data, AlwaysFails(), plan)

    def test_stream_offset_gives_independent_family(self):
        data = SeedSpec(8).generator().standard_normal(40)
        base = run_replications(data, MeanEstimator(), ReplicationPlan(
            master_seed=2, B=10, m=20))
        shifted = run_replications(data, MeanEstimator(), ReplicationPlan(
            master_seed=2, B=10, m=20, stream_offset=1 << 60))
        assert not np.array_equal(base.estimates, shifted.estimates)
