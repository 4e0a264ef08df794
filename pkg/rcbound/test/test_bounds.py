import math

import mpmath
from mpmath import mp
import numpy as np
import pytest

from rcbound.bounds import (
    awgn_rc_exact,
    awgn_rc_lower,
    awgn_rc_series,
    awgn_rc_upper,
    bec_rc,
    bsc_rc,
    evaluate,
)
from rcbound.bounds.channels import exact_bracket, lower_bracket, series_bracket, upper_bracket
from rcbound.bounds.kernel import log_error_prob
from rcbound.errors import DepthExceeded, DomainError
from rcbound.models import BoundRequest, ChannelSpec, EnsembleSize, Method
from rcbound.numerics.logdomain import LN2, NEG_INF, log1mexp
from rcbound.numerics.quadrature import QuadratureConfig
from rcbound.oracle import rc_direct_bec, rc_direct_bsc
from rcbound.validate import log_discrepancy
from test_data import get_anchors, mp_bec_rc, mp_bsc_rc

# looser than the defaults so the double integrals stay quick
FAST = QuadratureConfig(rel_tol=1e-6, abs_tol=1e-12, tail_mass=1e-10)


def closed_form(channel, delta, n, M):
    bound = bsc_rc if channel == "bsc" else bec_rc
    return bound(delta, n, EnsembleSize.from_size(M))


class TestDiscreteAnchors:

    @pytest.mark.parametrize("anchor", get_anchors()["rc"])
    def test_anchor(self, anchor):
        result = closed_form(anchor["channel"], anchor["param"], anchor["n"], anchor["M"])
        assert result.epsilon == pytest.approx(anchor["epsilon"], abs=1e-12)
        assert result.err_est == 0.0
        assert not result.flagged

    @pytest.mark.parametrize("bound", [bsc_rc, bec_rc])
    def test_single_codeword(self, bound):
        result = bound(0.2, 9, EnsembleSize(0.0))
        assert result.log_epsilon == NEG_INF
        assert result.epsilon == 0.0

    @pytest.mark.parametrize("n,log2_M", [(1, 1.0), (6, 3.5), (40, 20.0), (200, 300.0)])
    def test_full_erasure(self, n, log2_M):
        # the decoder guesses among all M codewords
        result = bec_rc(1.0, n, EnsembleSize(log2_M))
        assert result.log_epsilon == pytest.approx(float(log1mexp(-log2_M * math.log(2))), rel=1e-12)

    def test_bec_hand_terms(self):
        # 0.21875 + 0.375 + 0.125 for zero, one and two erasures
        result = bec_rc(0.5, 2, EnsembleSize(1.0))
        assert result.epsilon == pytest.approx(0.28125, abs=1e-12)
        assert result.diagnostics["terms"] == 3


class TestDiscreteOracles:

    def test_bsc_direct_sum(self):
        expected = rc_direct_bsc(0.11, 10, 16)
        result = bsc_rc(0.11, 10, EnsembleSize.from_size(16))
        assert log_discrepancy(result.log_epsilon, expected) <= 1e-10

    @pytest.mark.parametrize("delta", [0.05, 0.3, 0.5])
    @pytest.mark.parametrize("n", [1, 5, 12])
    def test_direct_sum_grid(self, delta, n):
        for M in (1, 2, 3, 7, 64):
            m = EnsembleSize.from_size(M)
            assert log_discrepancy(bsc_rc(delta, n, m).log_epsilon, rc_direct_bsc(delta, n, M)) <= 1e-10
            assert log_discrepancy(bec_rc(delta, n, m).log_epsilon, rc_direct_bec(delta, n, M)) <= 1e-10

    def test_bec_extreme_size(self):
        # far beyond double range for M, far below rounding of one for epsilon
        result = bec_rc(0.5, 500, EnsembleSize(150.0))
        expected = mp_bec_rc(0.5, 500, 2**150)
        assert 0 < result.epsilon < 1
        assert result.epsilon == pytest.approx(float(expected), rel=1e-8)

    def test_bsc_extreme_size(self):
        result = bsc_rc(0.11, 500, EnsembleSize(150.0))
        expected = mp_bsc_rc(0.11, 500, 2**150)
        assert 0 < result.epsilon < 1
        assert result.epsilon == pytest.approx(float(expected), rel=1e-8)

    def test_bsc_noncomputable_size(self):
        # M = 2^1200 overflows a double; epsilon must still be a probability
        result = bsc_rc(0.11, 3000, EnsembleSize(1200.0))
        assert 0 < result.epsilon < 1
        assert result.diagnostics["deficit"] <= 1e-9

    def test_bec_ties_below_double_range(self):
        # 2^-2400 ties against M = 2^1150 codewords
        result = bec_rc(0.5, 2400, EnsembleSize(1150.0))
        expected = mp_bec_rc(0.5, 2400, 2**1150)
        assert result.epsilon == pytest.approx(float(expected), rel=1e-8)
        assert result.diagnostics["deficit"] <= 1e-9

    def test_bsc_head_mass_below_double_range(self):
        result = bsc_rc(0.11, 3000, EnsembleSize(1500.0))
        expected = mp_bsc_rc(0.11, 3000, 2**1500)
        assert result.epsilon == pytest.approx(float(expected), rel=1e-8)
        assert result.diagnostics["deficit"] <= 1e-9

    def test_nondecreasing_in_size(self):
        for bound in (bsc_rc, bec_rc):
            values = [bound(0.2, 64, EnsembleSize(k)).log_epsilon for k in np.linspace(0.5, 64, 60)]
            assert np.all(np.diff(values) >= -1e-12)

    @pytest.mark.parametrize("bound,top", [(bsc_rc, 0.5), (bec_rc, 1.0)])
    @pytest.mark.parametrize("n,log2_M", [(16, 4.0), (64, 20.0), (300, 120.0)])
    def test_nondecreasing_in_noise(self, bound, top, n, log2_M):
        m = EnsembleSize(log2_M)
        values = [bound(delta, n, m).log_epsilon for delta in np.linspace(0.0, top, 21)]
        assert np.all(np.diff(values) >= -1e-9)

    @pytest.mark.parametrize("n,log2_M", [(10, 3.0), (20, 10.0), (64, 40.0), (1200, 1190.0)])
    def test_bec_without_erasures(self, n, log2_M):
        # only the all-surviving term is left: a competitor ties with probability 2^-n
        m = EnsembleSize(log2_M)
        result = bec_rc(0.0, n, m)
        single = log_error_prob(-n * LN2, math.log1p(-(2.0**-n)), m, log_head=NEG_INF)
        assert result.log_epsilon == pytest.approx(float(single), rel=1e-12)
        with mp.workprec(4096):
            w = mpmath.mpf(2) ** -n
            M = mpmath.mpf(2) ** mpmath.mpf(log2_M)
            expected = 1 - (1 - (1 - w) ** M) / (w * M)
        assert result.epsilon == pytest.approx(float(expected), rel=1e-10)

    @pytest.mark.parametrize("bound,delta", [(bsc_rc, 0.6), (bsc_rc, -0.1), (bec_rc, 1.1)])
    def test_bad_channel(self, bound, delta):
        with pytest.raises(DomainError):
            bound(delta, 4, EnsembleSize(1.0))

    @pytest.mark.parametrize("n", [0, -3, 2.5])
    def test_bad_blocklength(self, n):
        with pytest.raises(DomainError):
            bsc_rc(0.1, n, EnsembleSize(1.0))


class TestBrackets:

    @pytest.fixture()
    def cdf_grid(self):
        log_cdf = np.linspace(-60, -1e-9, 400)
        log_sf = log1mexp(log_cdf)
        return log_cdf, log_sf

    @pytest.mark.parametrize("log2_M", [1.0, 4.0, 30.0, 400.0])
    def test_sandwich_pointwise(self, cdf_grid, log2_M):
        m = EnsembleSize(log2_M)
        exact = exact_bracket(m)(*cdf_grid)
        assert np.all(lower_bracket(m)(*cdf_grid) <= exact * (1 + 1e-12))
        assert np.all(exact <= upper_bracket(m)(*cdf_grid) * (1 + 1e-12))

    def test_series_increasing_to_exact(self, cdf_grid):
        m = EnsembleSize(6.0)
        values = [series_bracket(m, k)(*cdf_grid) for k in (1, 2, 4, 8, 40)]
        for lo, hi in zip(values, values[1:]):
            assert np.all(lo <= hi * (1 + 1e-12))
        np.testing.assert_allclose(values[-1], exact_bracket(m)(*cdf_grid), rtol=1e-10)

    def test_series_order_one_is_lower(self, cdf_grid):
        m = EnsembleSize(6.0)
        np.testing.assert_allclose(series_bracket(m, 1)(*cdf_grid), lower_bracket(m)(*cdf_grid), rtol=1e-13)

    def test_single_codeword(self, cdf_grid):
        m = EnsembleSize(0.0)
        for bracket in (exact_bracket(m), upper_bracket(m), lower_bracket(m), series_bracket(m, 3)):
            assert np.all(bracket(*cdf_grid) == 0.0)

    def test_upper_saturates(self):
        m = EnsembleSize(4.0)
        log_cdf = np.log(np.array([1 / 15, 0.2, 0.9]))
        np.testing.assert_allclose(upper_bracket(m)(log_cdf, log1mexp(log_cdf)), 1.0, rtol=1e-14)

    def test_certain_confusion_limit(self):
        # F -> 1 sends every bracket to one
        m = EnsembleSize(3.0)
        log_cdf = np.array([0.0])
        log_sf = np.array([NEG_INF])
        for bracket in (exact_bracket(m), lower_bracket(m), series_bracket(m, 4), upper_bracket(m)):
            np.testing.assert_allclose(bracket(log_cdf, log_sf), 1.0, rtol=1e-12)

    def test_small_cdf_accuracy(self):
        # (M-1) F far below one: exact bracket ~ (M-1) F
        m = EnsembleSize(200.0)
        log_cdf = np.array([-200 * math.log(2) - 50.0])
        value = exact_bracket(m)(log_cdf, log1mexp(log_cdf))
        assert value[0] == pytest.approx(math.exp(-50.0), rel=1e-12)


@pytest.fixture(scope="module")
def sandwich():
    m = EnsembleSize.from_size(16)
    return (
        awgn_rc_lower(1.0, 8, m, FAST),
        awgn_rc_exact(1.0, 8, m, FAST),
        awgn_rc_upper(1.0, 8, m, FAST),
    )


def sandwich_grid():
    for n in (8, 32, 128):
        for gamma in (0.5, 1.0, 2.0):
            for log2_M in sorted({2, n // 4, n // 2}):
                yield n, gamma, float(log2_M)


class TestGaussian:

    def test_sandwich(self, sandwich):
        lower, exact, upper = sandwich
        slack = lower.err_est + exact.err_est + upper.err_est
        assert lower.epsilon <= exact.epsilon + slack
        assert exact.epsilon <= upper.epsilon + slack
        assert 0 < lower.epsilon < upper.epsilon < 1

    def test_diagnostics(self, sandwich):
        exact = sandwich[1]
        assert exact.method is Method.RC_EXACT
        assert exact.diagnostics["cells"] > 0
        assert exact.diagnostics["evaluations"] > exact.diagnostics["cells"]
        lo, hi = exact.diagnostics["outer_range"]
        assert 0 < lo < 8 < hi
        assert exact.err_est >= 4 * FAST.tail_mass
        assert not exact.flagged

    @pytest.mark.parametrize("bound", [awgn_rc_exact, awgn_rc_upper, awgn_rc_lower, awgn_rc_series])
    def test_single_codeword(self, bound):
        result = bound(1.0, 8, EnsembleSize(0.0), FAST)
        assert result.epsilon == 0.0
        assert result.err_est == 0.0

    def test_series_between_lower_and_exact(self, sandwich):
        lower, exact, _ = sandwich
        series = awgn_rc_series(1.0, 8, EnsembleSize.from_size(16), FAST, order=3)
        slack = lower.err_est + exact.err_est + series.err_est
        assert lower.epsilon - slack <= series.epsilon <= exact.epsilon + slack
        assert series.diagnostics["order"] == 3
        assert series.method is Method.GAUSS_SERIES

    @pytest.mark.parametrize("order", [0, 1.5])
    def test_series_bad_order(self, order):
        with pytest.raises(DomainError):
            awgn_rc_series(1.0, 8, EnsembleSize(2.0), FAST, order=order)

    @pytest.mark.parametrize("gamma", [0.0, -1.0, math.inf])
    def test_bad_snr(self, gamma):
        with pytest.raises(DomainError):
            awgn_rc_exact(gamma, 8, EnsembleSize(2.0), FAST)

    def test_higher_snr_helps(self):
        m = EnsembleSize(4.0)
        assert awgn_rc_exact(2.0, 8, m, FAST).epsilon < awgn_rc_exact(0.5, 8, m, FAST).epsilon

    def test_nonincreasing_in_snr(self):
        m = EnsembleSize(4.0)
        results = [awgn_rc_exact(gamma, 8, m, FAST) for gamma in (0.25, 0.5, 1.0, 2.0, 4.0)]
        for a, b in zip(results, results[1:]):
            assert b.epsilon <= a.epsilon + a.err_est + b.err_est

    @pytest.mark.slow
    @pytest.mark.parametrize("n,gamma,log2_M", list(sandwich_grid()))
    def test_sandwich_grid(self, n, gamma, log2_M):
        m = EnsembleSize(log2_M)
        lower = awgn_rc_lower(gamma, n, m, FAST)
        exact = awgn_rc_exact(gamma, n, m, FAST)
        upper = awgn_rc_upper(gamma, n, m, FAST)
        slack = lower.err_est + exact.err_est + upper.err_est
        assert 0 <= lower.epsilon <= exact.epsilon + slack
        assert exact.epsilon <= upper.epsilon + slack
        assert upper.epsilon <= 1
        assert not (lower.flagged or exact.flagged or upper.flagged)

    @pytest.mark.slow
    def test_truncation_invariance(self):
        m = EnsembleSize(4.0)
        base = QuadratureConfig(rel_tol=1e-8, tail_mass=1e-12)
        halved = QuadratureConfig(rel_tol=1e-8, tail_mass=5e-13)
        a = awgn_rc_exact(1.0, 8, m, base)
        b = awgn_rc_exact(1.0, 8, m, halved)
        assert abs(a.epsilon - b.epsilon) <= 2 * 1e-8 * a.epsilon + a.err_est + b.err_est

    @pytest.mark.slow
    def test_large_ensemble(self):
        m = EnsembleSize(20.0)
        lower = awgn_rc_lower(1.0, 100, m)
        upper = awgn_rc_upper(1.0, 100, m)
        exact = awgn_rc_exact(1.0, 100, m)
        slack = lower.err_est + exact.err_est + upper.err_est
        assert lower.epsilon - slack <= exact.epsilon <= upper.epsilon + slack


class TestEvaluate:

    @pytest.mark.parametrize("anchor", get_anchors()["rc"])
    def test_discrete(self, anchor):
        channel = ChannelSpec(anchor["channel"], anchor["param"])
        request = BoundRequest(channel, anchor["n"], EnsembleSize.from_size(anchor["M"]))
        assert evaluate(request).epsilon == pytest.approx(anchor["epsilon"], abs=1e-12)

    def test_baseline_dispatch(self):
        request = BoundRequest(ChannelSpec.bec(0.5), 2, EnsembleSize(1.0), Method.BEC_RCU)
        result = evaluate(request)
        assert result.method is Method.BEC_RCU
        assert result.epsilon == pytest.approx(0.5625, abs=1e-12)

    @pytest.mark.parametrize("channel,method", [
        (ChannelSpec.bsc(0.1), Method.BEC_RCU),
        (ChannelSpec.bsc(0.1), Method.GAUSS_UPPER),
        (ChannelSpec.awgn(1.0), Method.BEC_CONVERSE),
        (ChannelSpec.bec(0.1), Method.GAUSS_SERIES),
    ])
    def test_unsupported(self, channel, method):
        with pytest.raises(DomainError):
            BoundRequest(channel, 4, EnsembleSize(1.0), method)

    def test_bad_order(self):
        with pytest.raises(DomainError):
            BoundRequest(ChannelSpec.awgn(1.0), 4, EnsembleSize(1.0), Method.GAUSS_SERIES, order=0)

    def test_depth_exceeded_flag(self, caplog):
        cfg = QuadratureConfig(rel_tol=1e-14, abs_tol=1e-300, max_depth=1, tail_mass=1e-10)
        request = BoundRequest(ChannelSpec.awgn(1.0), 4, EnsembleSize(2.0), Method.GAUSS_UPPER, cfg=cfg)
        result = evaluate(request)
        assert "depth-exceeded" in result.flags
        assert result.flagged
        assert "flagged" in caplog.text

    def test_depth_exceeded_strict(self):
        cfg = QuadratureConfig(rel_tol=1e-14, abs_tol=1e-300, max_depth=1, tail_mass=1e-10)
        request = BoundRequest(ChannelSpec.awgn(1.0), 4, EnsembleSize(2.0), Method.GAUSS_UPPER, cfg=cfg)
        with pytest.raises(DepthExceeded):
            evaluate(request, strict=True)
