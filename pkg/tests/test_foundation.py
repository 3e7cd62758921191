import math
import random
from concurrent.futures import ThreadPoolExecutor

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import _oracles as oracle
from noninf.foundation import (
    BinomialArm,
    DifferenceConstraint,
    NoninfSpec,
    TwoArmData,
    binom_pmf_rows,
    critical_value,
    joint_log_pmf,
    log_factorials,
    norm_cdf,
    norm_ppf,
    restricted_mle,
    restricted_mle_array,
    restricted_mle_scalar,
    score_statistic,
    score_z_array,
)


@st.composite
def tables(draw, max_n=60):
    nt = draw(st.integers(1, max_n))
    nc = draw(st.integers(1, max_n))
    return draw(st.integers(0, nt)), nt, draw(st.integers(0, nc)), nc


deltas = st.floats(-0.95, 0.95, allow_nan=False)


class TestTypes:
    def test_arm_validation(self):
        with pytest.raises(ValueError, match="successes"):
            BinomialArm(6, 5)
        with pytest.raises(ValueError, match="trials"):
            BinomialArm(0, 0)
        with pytest.raises(ValueError):
            BinomialArm(-1, 5)
        with pytest.raises(ValueError, match="integers"):
            BinomialArm(1.5, 5)

    def test_two_arm_accessors(self):
        d = TwoArmData.from_counts(3, 10, 6, 12)
        assert d.shape == (10, 12)
        assert d.observed == (3, 6)
        assert d.difference == pytest.approx(0.3 - 0.5)
        assert d.swap().observed == (6, 3)

    def test_spec(self):
        s = NoninfSpec(0.1, 0.95)
        assert s.alpha == pytest.approx(0.05)
        assert s.one_sided_alpha == pytest.approx(0.025)
        assert s.z_crit == pytest.approx(1.959964, abs=1e-6)
        for bad in ((0.0, 0.95), (1.0, 0.95), (0.1, 1.0), (0.1, 0.0)):
            with pytest.raises(ValueError):
                NoninfSpec(*bad)

    def test_constraint_domain(self):
        assert DifferenceConstraint(-0.1).domain == (0.0, 0.9)
        assert DifferenceConstraint(0.3).domain == (0.3, 1.0)
        for bad in (-1.0, 1.0, 1.5):
            with pytest.raises(ValueError):
                DifferenceConstraint(bad)


class TestJointPmf:
    def test_failures_only(self):
        assert joint_log_pmf(0, 0, (2, 2), 0.0, 0.1) == pytest.approx(math.log(0.81), abs=1e-15)

    def test_against_direct_product(self):
        direct = oracle.pmf(3, 5, 0.6, 2, 4, 0.5)
        assert math.exp(joint_log_pmf(3, 2, (5, 4), 0.6, 0.5)) == pytest.approx(direct, rel=1e-13)

    def test_boundary_probabilities(self):
        assert joint_log_pmf(0, 4, (3, 4), 0.0, 1.0) == 0.0
        assert joint_log_pmf(1, 4, (3, 4), 0.0, 1.0) == -math.inf

    @pytest.mark.parametrize("args", [(-1, 0, (2, 2), 0.5, 0.5), (3, 0, (2, 2), 0.5, 0.5),
                                      (0, 0, (2, 2), 1.5, 0.5), (0, 0, (2, 2), 0.5, -0.1)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            joint_log_pmf(*args)

    @settings(max_examples=60, deadline=None)
    @given(nt=st.integers(1, 200), nc=st.integers(1, 200),
           p=st.floats(0, 1), q=st.floats(0, 1))
    def test_normalization(self, nt, nc, p, q):
        total = binom_pmf_rows(nt, p).sum() * binom_pmf_rows(nc, q).sum()
        assert abs(total - 1.0) <= 1e-12

    @pytest.mark.parametrize("n", [799, 800, 801, 2000, 5000])
    def test_normalization_large_n(self, n):
        rows = binom_pmf_rows(n, np.linspace(0, 1, 201))
        assert np.max(np.abs(rows.sum(axis=1) - 1.0)) <= 1e-12

    def test_normalization_by_joint_log_pmf(self):
        nt, nc, p, q = 7, 9, 0.37, 0.81
        s = math.fsum(math.exp(joint_log_pmf(i, j, (nt, nc), p, q))
                      for i in range(nt + 1) for j in range(nc + 1))
        assert abs(s - 1.0) <= 1e-12

    @pytest.mark.parametrize("i,j,n,p,q", [(2500, 2400, 5000, 0.5, 0.48), (10, 4990, 5000, 0.003, 0.998),
                                           (4000, 1000, 5000, 0.79, 0.21)])
    def test_relative_accuracy_large_n(self, i, j, n, p, q):
        mpmath.mp.dps = 40
        exact = (mpmath.binomial(n, i) * mpmath.mpf(p) ** i * (1 - mpmath.mpf(p)) ** (n - i)
                 * mpmath.binomial(n, j) * mpmath.mpf(q) ** j * (1 - mpmath.mpf(q)) ** (n - j))
        got = math.exp(joint_log_pmf(i, j, (n, n), p, q))
        assert abs(got / float(exact) - 1) <= 1e-12

    def test_log_factorial_table_is_shared_and_thread_safe(self):
        with ThreadPoolExecutor(8) as pool:
            tables = list(pool.map(log_factorials, [50, 3000, 10, 1500, 4000, 7, 2000, 100]))
        ref = log_factorials(4000)
        for t in tables:
            np.testing.assert_array_equal(t, ref[: t.size])
        with pytest.raises(ValueError):
            ref[3] = 0.0


class TestRestrictedMle:
    def test_unconstrained_solution_satisfies_constraint(self):
        m = restricted_mle(TwoArmData.from_counts(4, 10, 5, 10), -0.1)
        assert m.p_test == pytest.approx(0.4, abs=1e-12)
        assert m.p_control == pytest.approx(0.5, abs=1e-12)

    def test_pooled_at_zero(self):
        m = restricted_mle(TwoArmData.from_counts(5, 10, 7, 10), 0.0)
        assert m.p_test == pytest.approx(0.6, abs=1e-12)
        assert m.p_control == pytest.approx(0.6, abs=1e-12)

    def test_pooled_exhaustive(self):
        # every table with N_T + N_C <= 50
        worst = 0.0
        for nt in range(1, 50):
            for nc in range(1, 51 - nt):
                xt, xc = np.meshgrid(np.arange(nt + 1), np.arange(nc + 1), indexing="ij")
                p = restricted_mle_array(xt, nt, xc, nc, 0.0)
                worst = max(worst, float(np.max(np.abs(p - (xt + xc) / (nt + nc)))))
        assert worst <= 1e-12

    def test_table4_example_against_oracles(self):
        xt, nt, xc, nc = 264, 328, 268, 317
        p = restricted_mle_scalar(xt, nt, xc, nc, -0.10)
        assert p == pytest.approx(oracle.mle_cubic(xt, nt, xc, nc, -0.10), abs=1e-12)
        g = oracle.mle_golden(xt, nt, xc, nc, -0.10)
        assert abs(p - g) <= 1e-7
        assert oracle.loglik(p, xt, nt, xc, nc, -0.1) >= oracle.loglik(g, xt, nt, xc, nc, -0.1) - 1e-12

    @settings(max_examples=300, deadline=None)
    @given(t=tables(), delta=deltas)
    def test_matches_independent_oracle(self, t, delta):
        assert restricted_mle_scalar(*t, delta) == pytest.approx(oracle.mle(*t, delta), abs=1e-11)

    @settings(max_examples=300, deadline=None)
    @given(t=tables(), delta=deltas)
    def test_constraint_and_local_optimality(self, t, delta):
        m = restricted_mle(TwoArmData.from_counts(*t), delta)
        lo, hi = m.domain
        assert lo <= m.p_test <= hi
        assert abs((m.p_test - m.p_control) - delta) <= 1e-15
        ll = oracle.loglik(m.p_test, *t, delta)
        for step in (-1e-6, 1e-6):
            other = min(max(m.p_test + step, lo), hi)
            assert ll >= oracle.loglik(other, *t, delta) - 1e-12

    @settings(max_examples=100, deadline=None)
    @given(t=tables(), delta=deltas)
    def test_scalar_and_vector_agree(self, t, delta):
        assert restricted_mle_scalar(*t, delta) == float(restricted_mle_array(*t, delta))

    def test_boundary_maximizers_are_exact(self):
        # both arms pull the same way, so P_T sits on an edge of its domain
        assert restricted_mle_scalar(0, 10, 0, 10, -0.2) == 0.0
        assert restricted_mle_scalar(10, 10, 10, 10, 0.3) == 1.0


class TestScoreStatistic:
    def test_zero_numerator(self):
        r = score_statistic(TwoArmData.from_counts(4, 10, 5, 10), -0.1)
        assert r.z == 0.0 and r.numerator == pytest.approx(0.0, abs=1e-15)

    def test_table4_pvalue(self):
        z = score_statistic(TwoArmData.from_counts(264, 328, 268, 317), -0.10).z
        assert abs((1 - norm_cdf(z)) - 0.0238) <= 0.00005

    def test_small_case_by_hand(self):
        r = score_statistic(TwoArmData.from_counts(2, 2, 0, 2), -0.5)
        assert math.isfinite(r.z)
        assert r.z == pytest.approx(oracle.score_z(2, 2, 0, 2, -0.5), abs=1e-12)

    def test_degenerate_variance(self):
        z, _ = score_z_array(np.array([1, 0, 0]), 2, np.array([0, 1, 0]), 2, 0.0,
                             p_test=np.array([0.0, 0.0, 0.0]))
        assert z[0] == math.inf and z[1] == -math.inf and z[2] == 0.0
        assert score_statistic(TwoArmData.from_counts(0, 5, 0, 5), 0.0).z == 0.0

    def test_bias_correction_scales_z(self):
        d = TwoArmData.from_counts(30, 50, 35, 60)
        plain = score_statistic(d, -0.1).z
        corrected = score_statistic(d, -0.1, bias_correction=True).z
        assert corrected == pytest.approx(plain * math.sqrt(109 / 110), rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(t=tables(), delta=deltas)
    def test_arm_swap_antisymmetry(self, t, delta):
        d = TwoArmData.from_counts(*t)
        a = score_statistic(d, delta).z
        b = score_statistic(d.swap(), -delta).z
        if math.isinf(a):
            assert b == -a
        else:
            assert abs(a + b) <= 1e-10 * max(1.0, abs(a))

    def test_random_inputs_against_transcription(self):
        rng = random.Random(7)
        for _ in range(1000):
            nt, nc = rng.randint(1, 400), rng.randint(1, 400)
            xt, xc = rng.randint(0, nt), rng.randint(0, nc)
            margin = rng.choice((0.05, 0.1, 0.15, 0.2, rng.uniform(0.01, 0.5)))
            got = score_statistic(TwoArmData.from_counts(xt, nt, xc, nc), -margin).z
            want = oracle.score_z(xt, nt, xc, nc, -margin)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


class TestNormal:
    def test_cdf_symmetry(self):
        assert norm_cdf(0.0) == 0.5

    def test_quantile(self):
        assert norm_ppf(0.975) == pytest.approx(1.959964, abs=1e-5)
        mpmath.mp.dps = 30
        exact = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf("0.975") - 1))
        assert abs(norm_ppf(0.975) - exact) <= 1e-12
        assert critical_value(0.05) == norm_ppf(0.975)

    @pytest.mark.parametrize("p", [0.01, 0.025, 0.5, 0.975])
    def test_round_trip(self, p):
        assert abs(norm_cdf(norm_ppf(p)) - p) <= 1e-9

    @pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.2])
    def test_domain(self, q):
        with pytest.raises(ValueError):
            norm_ppf(q)

    def test_cdf_accuracy(self):
        mpmath.mp.dps = 30
        for x in np.linspace(-8, 8, 161):
            exact = float(mpmath.ncdf(mpmath.mpf(float(x))))
            assert abs(float(norm_cdf(x)) - exact) <= 1e-14
