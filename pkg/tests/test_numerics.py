import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cheapsub.numerics import (expit, log_gamma, normal_cdf, normal_quantile,
                               reg_inc_beta, t_cdf, t_quantile)

# Frozen oracle values.  The t quantiles were obtained by numerically
# integrating the t density (adaptive quadrature + root bracketing), the
# expit values by direct evaluation of 1/(1+exp(-x)).
T_QUANTILE_975 = {
    1: 12.70620473617479,
    2: 4.302652729749475,
    5: 2.570581835636328,
    25: 2.0595385527533345,
    100: 1.9839715185237778,
    500: 1.9647198374692407,
}
NORMAL_QUANTILE_975 = 1.9599639845400536


class TestExpit:
    def test_symmetry_point(self):
        assert expit(0.0) == 0.5

    @pytest.mark.parametrize("x,expected", [
        (-0.2, 0.450166),
        (3.5, 0.970688),
    ])
    def test_direct_values(self, x, expected):
        assert expit(x) == pytest.approx(expected, abs=1e-6)

    def test_saturation(self):
        assert expit(40.0) == 1.0
        assert expit(-40.0) == 0.0
        assert expit(700.0) == 1.0  # no overflow
        assert expit(-700.0) == 0.0

    def test_array_matches_scalar(self):
        xs = np.array([-50.0, -3.0, 0.0, 0.7, 36.5])
        np.testing.assert_allclose(expit(xs), [expit(x) for x in xs], rtol=0,
                                   atol=0)

    @given(st.floats(min_value=-30.0, max_value=30.0))
    def test_complement_identity(self, x):
        assert abs(expit(x) + expit(-x) - 1.0) <= 1e-15

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            expit(float("nan"))


class TestLogGamma:
    def test_half(self):
        assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-15)

    def test_factorial(self):
        assert log_gamma(6.0) == pytest.approx(math.log(120.0), rel=1e-14)

    @pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
    def test_domain(self, x):
        with pytest.raises(ValueError):
            log_gamma(x)


class TestRegIncBeta:
    def test_uniform_case(self):
        assert reg_inc_beta(1.0, 1.0, 0.3) == pytest.approx(0.3, rel=1e-14)

    def test_endpoints(self):
        assert reg_inc_beta(2.5, 0.5, 0.0) == 0.0
        assert reg_inc_beta(2.5, 0.5, 1.0) == 1.0

    def test_symmetry(self):
        # I_x(a,b) = 1 - I_{1-x}(b,a)
        for a, b, x in [(2.0, 3.0, 0.25), (0.5, 0.5, 0.7), (4.5, 1.5, 0.9)]:
            assert reg_inc_beta(a, b, x) == pytest.approx(
                1.0 - reg_inc_beta(b, a, 1.0 - x), abs=1e-14)

    def test_monotone_in_x(self):
        xs = np.linspace(0.01, 0.99, 41)
        vals = [reg_inc_beta(2.5, 0.5, x) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("a,b,x", [(0.0, 1.0, 0.5), (1.0, -1.0, 0.5),
                                       (1.0, 1.0, -0.1), (1.0, 1.0, 1.1)])
    def test_domain(self, a, b, x):
        with pytest.raises(ValueError):
            reg_inc_beta(a, b, x)


class TestNormal:
    def test_cdf_center(self):
        assert normal_cdf(0.0) == 0.5

    def test_quantile_symmetry(self):
        assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-15)

    def test_quantile_frozen(self):
        assert normal_quantile(0.975) == pytest.approx(NORMAL_QUANTILE_975,
                                                       abs=1e-9)
        assert normal_quantile(0.025) == pytest.approx(-NORMAL_QUANTILE_975,
                                                       abs=1e-9)

    def test_roundtrip(self):
        for p in (1e-6, 0.01, 0.3, 0.5, 0.9, 0.999, 1 - 1e-9):
            assert abs(normal_cdf(normal_quantile(p)) - p) < 1e-10

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.3, float("nan")])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            normal_quantile(p)


class TestTDistribution:
    def test_cdf_center(self):
        assert t_cdf(5, 0.0) == 0.5

    def test_cdf_inverse_of_frozen_quantile(self):
        assert t_cdf(5, T_QUANTILE_975[5]) == pytest.approx(0.975, abs=1e-10)

    def test_quantile_symmetry(self):
        for df in (1, 7, 100):
            assert t_quantile(df, 0.5) == 0.0
            assert t_quantile(df, 0.1) == pytest.approx(-t_quantile(df, 0.9),
                                                        abs=1e-12)

    @pytest.mark.parametrize("df,expected", sorted(T_QUANTILE_975.items()))
    def test_quantile_frozen(self, df, expected):
        assert t_quantile(df, 0.975) == pytest.approx(expected, abs=5e-6)

    def test_df1_heavy_tail(self):
        # analytic df=1 quantile: tan(pi*(p - 1/2))
        for p in (0.6, 0.9, 0.99, 0.999, 0.999999):
            assert t_quantile(1, p) == pytest.approx(
                math.tan(math.pi * (p - 0.5)), rel=1e-9)

    def test_roundtrip_grid(self):
        ps = np.concatenate([[0.001], np.linspace(0.05, 0.95, 19), [0.999]])
        for df in range(1, 201):
            for p in ps:
                q = t_quantile(df, float(p))
                assert abs(t_cdf(df, q) - p) < 1e-9

    def test_monotone_in_p(self):
        ps = np.linspace(0.01, 0.99, 33)
        qs = [t_quantile(3, float(p)) for p in ps]
        assert all(b > a for a, b in zip(qs, qs[1:]))

    def test_monotone_in_df_upper_tail(self):
        qs = [t_quantile(df, 0.975) for df in range(1, 201)]
        assert all(b < a for a, b in zip(qs, qs[1:]))

    def test_normal_limit(self):
        # the gap to the normal quantile shrinks like ~2.4/df: 0.0119 at
        # df=200, inside 0.01 from df~240 on
        gaps = [abs(t_quantile(df, 0.975) - NORMAL_QUANTILE_975)
                for df in (200, 250, 500, 1000)]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[0] < 0.012
        assert all(g < 0.01 for g in gaps[1:])

    @pytest.mark.parametrize("df", [0, -3, 1.5])
    def test_df_domain(self, df):
        with pytest.raises(ValueError):
            t_quantile(df, 0.9)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 2.0])
    def test_p_domain(self, p):
        with pytest.raises(ValueError):
            t_quantile(5, p)

    @settings(max_examples=60, deadline=None)
    @given(df=st.integers(min_value=1, max_value=300),
           p=st.floats(min_value=1e-4, max_value=1 - 1e-4))
    def test_roundtrip_property(self, df, p):
        assert abs(t_cdf(df, t_quantile(df, p)) - p) < 1e-9
