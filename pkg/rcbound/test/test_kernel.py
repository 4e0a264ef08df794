import math

import mpmath
from mpmath import mp
import numpy as np
import pytest

from rcbound.bounds.kernel import (
    SWITCHOVER,
    TieMass,
    continuous_kernel,
    correct_prob_kernel,
    direct_sum_kernel,
    log_correct_prob,
    log_error_prob,
)
from rcbound.errors import DomainError, InvariantViolation, SizeExceeded
from rcbound.models import EnsembleSize
from rcbound.numerics.logdomain import LN2, NEG_INF
from rcbound.validate import log_discrepancy
from test_data import get_anchors, mp_kernel


def random_ties(rng, count):
    total = rng.random(count)
    share = rng.random(count)
    return [TieMass.from_probs(t * s, t * (1 - s)) for t, s in zip(total, share)]


class TestTieMass:

    def test_from_probs(self):
        t = TieMass.from_probs(0.25, 0.5)
        assert t.w == pytest.approx(0.25)
        assert t.z == pytest.approx(0.5)

    def test_zero_components(self):
        t = TieMass.from_probs(0.0, 1.0)
        assert t.log_w == NEG_INF

    def test_rounding_slack(self):
        TieMass(math.log(0.5), math.log1p(-0.5 + 1e-13))

    def test_exceeds_one(self):
        with pytest.raises(InvariantViolation):
            TieMass.from_probs(0.6, 0.5)

    def test_nan(self):
        with pytest.raises(InvariantViolation):
            TieMass(math.nan, 0.0)

    def test_negative(self):
        with pytest.raises(DomainError):
            TieMass.from_probs(-0.1, 0.5)


class TestCorrectProbKernel:

    @pytest.mark.parametrize("anchor", get_anchors()["kernel"])
    def test_anchors(self, anchor):
        t = TieMass.from_probs(anchor["w"], anchor["z"])
        value = correct_prob_kernel(t, EnsembleSize.from_size(anchor["M"]))
        assert math.exp(value) == pytest.approx(anchor["correct"], rel=1e-14)

    @pytest.mark.parametrize("M", [1, 2, 1000, 2**80])
    def test_all_ties(self, M):
        value = correct_prob_kernel(TieMass.from_probs(1.0, 0.0), EnsembleSize.from_size(M))
        assert value == pytest.approx(-math.log(M), rel=1e-14, abs=1e-15)

    def test_single_codeword(self):
        rng = np.random.default_rng(4)
        for t in random_ties(rng, 20):
            assert correct_prob_kernel(t, EnsembleSize(0.0)) == 0.0

    def test_extreme_ensemble(self):
        with mp.workprec(512):
            expected = mpmath.log(mp_kernel(mpmath.mpf(1e-30), mpmath.mpf("0.5"), mpmath.mpf(2) ** 100))
        value = correct_prob_kernel(TieMass.from_probs(1e-30, 0.5), EnsembleSize(100.0))
        assert math.isfinite(value)
        assert abs(value - float(expected)) <= 1e-9 * abs(float(expected))

    def test_matches_direct_sum(self):
        rng = np.random.default_rng(5)
        ties = random_ties(rng, 200)
        sizes = np.round(2.0 ** rng.uniform(0, 12, size=200)).astype(int)
        for t, M in zip(ties, sizes):
            closed = correct_prob_kernel(t, EnsembleSize.from_size(int(M)))
            assert log_discrepancy(closed, direct_sum_kernel(t, int(M))) <= 1e-10, (t, M)

    @pytest.mark.slow
    def test_matches_direct_sum_large(self):
        rng = np.random.default_rng(6)
        ties = random_ties(rng, 10_000)
        sizes = np.round(2.0 ** rng.uniform(0, 20, size=10_000)).astype(int)
        for t, M in zip(ties, sizes):
            closed = correct_prob_kernel(t, EnsembleSize.from_size(int(M)))
            assert log_discrepancy(closed, direct_sum_kernel(t, int(M))) <= 1e-10, (t, M)

    def test_thousand_codewords(self):
        rng = np.random.default_rng(7)
        for t in random_ties(rng, 50):
            closed = correct_prob_kernel(t, EnsembleSize.from_size(1000))
            assert log_discrepancy(closed, direct_sum_kernel(t, 1000)) <= 1e-10

    def test_nonincreasing_in_size(self):
        log2_sizes = np.linspace(0, 40, 81)
        for w, z in [(0.1, 0.8), (0.3, 0.3), (1e-6, 0.99), (0.5, 0.0)]:
            values = [correct_prob_kernel(TieMass.from_probs(w, z), EnsembleSize(k)) for k in log2_sizes]
            assert np.all(np.diff(values) <= 1e-15)

    @pytest.mark.parametrize("M", [2, 16, 1000])
    def test_tie_free_limit(self, M):
        m = EnsembleSize.from_size(M)
        value = correct_prob_kernel(TieMass.from_probs(1e-12, 0.5), m)
        assert abs(value - continuous_kernel(math.log(0.5), m)) <= 1e-8

    def test_switchover(self):
        m = EnsembleSize(10.0)
        log_z = math.log(0.5)
        # M w just below SWITCHOVER (w + z)
        log_w = math.log(SWITCHOVER * 0.5 / 1024) - 0.01
        assert log_correct_prob(log_w, log_z, m) == pytest.approx(continuous_kernel(log_z, m), rel=1e-14)

    def test_range(self):
        rng = np.random.default_rng(8)
        log_w = np.log(rng.random(500) * 0.5)
        log_z = np.log(rng.random(500) * 0.5)
        for log2_M in (0.5, 3.0, 30.0, 300.0):
            out = log_correct_prob(log_w, log_z, EnsembleSize(log2_M))
            assert np.all(out <= 0)
            assert not np.any(np.isnan(out))

    def test_exceeds_one(self):
        with pytest.raises(InvariantViolation):
            log_correct_prob(math.log(0.6), math.log(0.5), EnsembleSize(3.0))

    def test_explicit_head_mass(self):
        log_w = np.log([0.1, 0.2, 0.4])
        log_z = np.log([0.8, 0.3, 0.1])
        log_head = np.log([0.1, 0.5, 0.5])
        m = EnsembleSize(5.0)
        np.testing.assert_allclose(
            log_correct_prob(log_w, log_z, m, log_head), log_correct_prob(log_w, log_z, m), rtol=1e-13
        )

    @pytest.mark.parametrize("k,shift", [(1075, 0.0), (1100, 0.0), (1500, -3.0), (4000, 2.5)])
    def test_ties_below_double_range(self, k, shift):
        # w = 2^-k, z = 1 - w and M w = 2^shift: M w stays moderate while w underflows
        m = EnsembleSize(k + shift)
        value = log_correct_prob(-k * LN2, 0.0, m, log_head=NEG_INF)
        with mp.workprec(8192):
            w = mpmath.mpf(2) ** (-k)
            expected = mpmath.log(mp_kernel(w, 1 - w, mpmath.mpf(2) ** mpmath.mpf(k + shift)))
        assert value == pytest.approx(float(expected), rel=1e-12)

    def test_tie_mass_beyond_double_range(self):
        # w + z rounds to one, so the head mass is taken as zero
        value = correct_prob_kernel(TieMass(-1100 * LN2, 0.0), EnsembleSize(1100.0))
        assert value == pytest.approx(math.log(-math.expm1(-1.0)), rel=1e-12)

    def test_head_mass_below_double_range(self):
        # s = 1 - 2^-1200 and M = 2^1200: s^M = e^-1 although s rounds to one
        m = EnsembleSize(1200.0)
        value = log_correct_prob(math.log(0.25), math.log(0.75), m, log_head=-1200 * LN2)
        with mp.workprec(4096):
            s = 1 - mpmath.mpf(2) ** -1200
            expected = mpmath.log(mp_kernel(mpmath.mpf("0.25"), s - mpmath.mpf("0.25"), mpmath.mpf(2) ** 1200))
        assert value == pytest.approx(float(expected), rel=1e-12)


class TestErrorProb:

    def test_complement(self):
        rng = np.random.default_rng(9)
        ties = random_ties(rng, 300)
        log_w = np.array([t.log_w for t in ties])
        log_z = np.array([t.log_z for t in ties])
        for log2_M in (1.0, 4.5, 20.0, 200.0):
            m = EnsembleSize(log2_M)
            total = np.exp(log_error_prob(log_w, log_z, m)) + np.exp(log_correct_prob(log_w, log_z, m))
            np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_single_codeword(self):
        assert log_error_prob(math.log(0.3), math.log(0.3), EnsembleSize(0.0)) == NEG_INF

    def test_no_competition(self):
        # w = 0 and z = 1: the transmitted codeword always wins
        assert log_error_prob(NEG_INF, 0.0, EnsembleSize(50.0)) == NEG_INF

    @pytest.mark.parametrize("k,log2_M", [(60, 10.0), (500, 150.0), (40, 39.5), (30, 0.5)])
    def test_tiny_error(self, k, log2_M):
        # w = 2^-k, z = 1 - w: error probability far below rounding of one
        log_w = -k * LN2
        value = log_error_prob(log_w, math.log1p(-(2.0**-k)), EnsembleSize(log2_M), log_head=NEG_INF)
        with mp.workprec(2048):
            w = mpmath.mpf(2) ** (-k)
            expected = mpmath.log(1 - mp_kernel(w, 1 - w, mpmath.mpf(2) ** mpmath.mpf(log2_M)))
        assert value == pytest.approx(float(expected), rel=1e-10)

    @pytest.mark.parametrize("k", [1075, 1500, 4000])
    def test_ties_below_double_range(self, k):
        m = EnsembleSize(float(k))
        value = log_error_prob(-k * LN2, 0.0, m, log_head=NEG_INF)
        with mp.workprec(8192):
            w = mpmath.mpf(2) ** (-k)
            expected = mpmath.log(1 - mp_kernel(w, 1 - w, mpmath.mpf(2) ** k))
        assert value == pytest.approx(float(expected), rel=1e-12)
        correct = log_correct_prob(-k * LN2, 0.0, m, log_head=NEG_INF)
        assert math.exp(value) + math.exp(correct) == pytest.approx(1.0, abs=1e-14)

    def test_moderate_error(self):
        m = EnsembleSize(8.0)
        value = log_error_prob(math.log(0.25), math.log(0.5), m)
        with mp.workprec(256):
            expected = mpmath.log(1 - mp_kernel(mpmath.mpf("0.25"), mpmath.mpf("0.5"), 256))
        assert value == pytest.approx(float(expected), rel=1e-12)


class TestContinuousKernel:

    @pytest.mark.parametrize("log2_M", [0.0, 1.0, 64.0])
    def test_certain_win(self, log2_M):
        assert continuous_kernel(0.0, EnsembleSize(log2_M)) == 0.0

    def test_single_codeword(self):
        assert continuous_kernel(math.log(0.2), EnsembleSize(0.0)) == 0.0
        assert continuous_kernel(NEG_INF, EnsembleSize(0.0)) == 0.0

    def test_extreme_ensemble(self):
        log_z = math.log1p(-1e-15)
        with mp.workprec(256):
            expected = (mpmath.mpf(2) ** 60 - 1) * mpmath.log(1 - mpmath.mpf(1e-15))
        value = continuous_kernel(log_z, EnsembleSize(60.0))
        assert value == pytest.approx(float(expected), rel=1e-12)
        assert value == pytest.approx(-1152.9, abs=0.1)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            continuous_kernel(0.1, EnsembleSize(2.0))


class TestDirectSumKernel:

    def test_single_codeword(self):
        assert direct_sum_kernel(TieMass.from_probs(0.3, 0.3), 1) == 0.0

    def test_hand_expansion(self):
        assert math.exp(direct_sum_kernel(TieMass.from_probs(0.25, 0.5), 2)) == pytest.approx(0.625, rel=1e-14)

    def test_exact_rational(self):
        # w = 1/4, z = 1/2, M = 5 in exact arithmetic
        w, z = mpmath.mpf(1) / 4, mpmath.mpf(1) / 2
        expected = sum(mpmath.binomial(4, l) * w**l * z ** (4 - l) / (1 + l) for l in range(5))
        value = direct_sum_kernel(TieMass.from_probs(0.25, 0.5), 5)
        assert math.exp(value) == pytest.approx(float(expected), rel=1e-13)

    def test_guard(self):
        with pytest.raises(SizeExceeded):
            direct_sum_kernel(TieMass.from_probs(0.3, 0.3), 2**20 + 1)

    @pytest.mark.parametrize("M", [0, 2.5, -3])
    def test_bad_size(self, M):
        with pytest.raises(DomainError):
            direct_sum_kernel(TieMass.from_probs(0.3, 0.3), M)
