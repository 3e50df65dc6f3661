import numpy as np
import pytest
import scipy.special
import scipy.stats

from knowdag.errors import DegenerateSampleError, ParameterError
from knowdag.stats import (
    betainc_reg,
    one_sample_t,
    student_t_cdf,
    summarize,
    two_sample_t,
)


class TestIncompleteBeta:
    def test_matches_scipy(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(3000):
            a = rng.uniform(0.05, 80)
            b = rng.uniform(0.05, 80)
            x = rng.random()
            worst = max(worst, abs(betainc_reg(a, b, x) - scipy.special.betainc(a, b, x)))
        assert worst < 1e-12

    def test_endpoints(self):
        assert betainc_reg(2.0, 3.0, 0.0) == 0.0
        assert betainc_reg(2.0, 3.0, 1.0) == 1.0

    def test_domain_errors(self):
        with pytest.raises(ParameterError):
            betainc_reg(-1.0, 1.0, 0.5)
        with pytest.raises(ParameterError):
            betainc_reg(1.0, 1.0, 1.5)


class TestStudentT:
    def test_cdf_at_zero_is_half(self):
        for df in range(1, 201):
            assert abs(student_t_cdf(0.0, df) - 0.5) < 1e-12

    def test_cdf_matches_scipy(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            t = rng.normal(scale=3)
            df = rng.uniform(1, 150)
            assert student_t_cdf(t, df) == pytest.approx(
                scipy.stats.t.cdf(t, df), abs=1e-12
            )


class TestOneSample:
    def test_symmetric_sample(self):
        r = one_sample_t([-1.0, 0.0, 1.0])
        assert r.mean == 0.0 and r.t_stat == 0.0 and r.p_value == 1.0
        assert not r.significant

    def test_zero_variance_rejected(self):
        with pytest.raises(DegenerateSampleError):
            one_sample_t([1.0, 1.0, 1.0])

    def test_too_small_rejected(self):
        with pytest.raises(ParameterError):
            one_sample_t([1.0])

    def test_matches_scipy(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            x = rng.normal(loc=rng.normal(), size=int(rng.integers(2, 60)))
            r = one_sample_t(x)
            t, p = scipy.stats.ttest_1samp(x, 0.0)
            assert r.t_stat == pytest.approx(t, abs=1e-10)
            assert r.p_value == pytest.approx(p, abs=1e-12)
            assert r.stderr == pytest.approx(x.std(ddof=1) / np.sqrt(x.size))
            assert r.significant == (r.p_value < 0.05)

    def test_antisymmetric_under_negation(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0.4, 1.0, size=25)
        assert one_sample_t(-x).t_stat == pytest.approx(-one_sample_t(x).t_stat)

    def test_calibration(self):
        # mean-zero normal batches should reject at about the nominal rate
        rng = np.random.default_rng(4)
        batches = rng.normal(size=(10_000, 30))
        rejections = sum(one_sample_t(batch).significant for batch in batches)
        assert abs(rejections / 10_000 - 0.05) < 0.01


class TestWelch:
    def test_identical_groups(self):
        a = [0.5, 1.5, -0.5, 2.0]
        r = two_sample_t(a, a)
        assert r.t_stat == 0.0 and r.p_value == 1.0

    def test_equal_means(self):
        r = two_sample_t([0.0, 0.0, 1.0, 1.0], [0.0, 1.0, 0.0, 1.0])
        assert r.t_stat == 0.0 and r.p_value == 1.0

    def test_frozen_high_precision_oracle(self):
        # reference values computed with 50-digit arithmetic
        a = [0.62, -1.4, 2.31, 0.05, -0.77, 1.9, 0.33, -0.21]
        b = [1.05, 2.2, -0.4, 0.8, 1.33]
        r = two_sample_t(a, b)
        assert r.t_stat == pytest.approx(-1.0492525431853265973, abs=1e-12)
        assert r.df == pytest.approx(10.450649428044258921, abs=1e-12)
        assert r.p_value == pytest.approx(0.31772086740539396435, abs=1e-12)

    def test_matches_scipy(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            a = rng.normal(size=int(rng.integers(2, 40)))
            b = rng.normal(loc=0.5, scale=2.0, size=int(rng.integers(2, 40)))
            r = two_sample_t(a, b)
            t, p = scipy.stats.ttest_ind(a, b, equal_var=False)
            assert r.t_stat == pytest.approx(t, abs=1e-10)
            assert r.p_value == pytest.approx(p, abs=1e-12)

    def test_antisymmetric_under_swap(self):
        rng = np.random.default_rng(6)
        a = rng.normal(size=12)
        b = rng.normal(1.0, size=9)
        assert two_sample_t(b, a).t_stat == pytest.approx(-two_sample_t(a, b).t_stat)

    def test_both_degenerate_rejected(self):
        with pytest.raises(DegenerateSampleError):
            two_sample_t([1.0, 1.0], [2.0, 2.0])

    def test_one_degenerate_allowed(self):
        r = two_sample_t([1.0, 1.0, 1.0], [0.0, 2.0, 4.0])
        assert np.isfinite(r.t_stat) and 0.0 <= r.p_value <= 1.0


def test_summarize():
    mean, se = summarize([1.0, 2.0, 3.0])
    assert mean == 2.0
    assert se == pytest.approx(1.0 / np.sqrt(3))
    assert summarize([4.0]) == (4.0, 0.0)
    with pytest.raises(ParameterError):
        summarize([])
