"""Random-coding error probabilities for the BSC, BEC and AWGN channels

The discrete channels are finite sums over the number of flipped or erased
symbols; each term weights the correct-decision kernel by the probability of
that count. The Gaussian channel is a double integral over the gamma
distributed noise energy and the noncentral chi-squared received energy.
"""

from __future__ import annotations

from typing import Callable
import logging
import math

import numpy as np
from scipy import special

from rcbound.bounds.kernel import log_correct_prob, log_error_prob
from rcbound.errors import DomainError, InvariantViolation
from rcbound.models import BoundResult, ChannelSpec, EnsembleSize, Method, check_blocklength
from rcbound.numerics.logdomain import (
    LN2,
    NEG_INF,
    log1mexp,
    log_binomial,
    log_binomial_pmf,
    log_binomial_tails,
    log_sum,
)
from rcbound.numerics.quadrature import QuadratureConfig, integrate_2d_iterated
from rcbound.numerics.special import (
    GammaParams,
    NoncentralChi2Params,
    gamma_log_pdf,
    gamma_quantile,
    ncx2_log_cdf_sf,
    ncx2_log_pdf,
    ncx2_tail_quantiles,
)

logger = logging.getLogger(__name__)

# slack on sums of probabilities that must not exceed one
PROBABILITY_GUARD = 1e-9

Bracket = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _log_tails_and_heads(n: int) -> tuple[np.ndarray, np.ndarray]:
    """log P[J >= i] and log P[J < i] for J ~ Binomial(n, 1/2) and i = 0..n+1

    The head sum is read off the tail table by the symmetry C(n, j) = C(n, n - j),
    so both stay accurate when the other rounds to one. Near one the tail is
    taken as log(1 - P[J < i]).
    """
    tails = log_binomial_tails(n) - n * LN2
    heads = tails[::-1]
    near_one = heads < -LN2
    return np.where(near_one, log1mexp(np.minimum(heads, 0.0)), tails), heads


def _discrete_result(log_pmf, log_w, log_z, log_head, m: EnsembleSize, n: int) -> BoundResult:
    """Sum the per-count error terms, checking the success terms against one"""
    log_success = log_sum(log_pmf + log_correct_prob(log_w, log_z, m, log_head))
    log_epsilon = log_sum(log_pmf + log_error_prob(log_w, log_z, m, log_head))
    if max(log_success, log_epsilon) > math.log1p(PROBABILITY_GUARD):
        raise InvariantViolation(
            "Probabilities exceed one: success {!r}, error {!r}".format(
                math.exp(log_success), math.exp(log_epsilon)
            )
        )
    # the two sums must be complementary up to rounding
    deficit = abs(math.exp(log_success) + math.exp(log_epsilon) - 1.0)
    if deficit > PROBABILITY_GUARD:
        raise InvariantViolation(
            "Success and error sums miss one by {:.3g}".format(deficit)
        )
    return BoundResult(
        min(log_epsilon, 0.0), 0.0, Method.RC_EXACT, {"terms": n + 1, "deficit": deficit}
    )


def bsc_rc(delta: float, n: int, m: EnsembleSize) -> BoundResult:
    """Exact ensemble error probability on the BSC

    i flips leave the transmitted codeword at distance i; a random competitor
    ties with probability C(n, i) 2^-n and loses with probability
    sum_{j>i} C(n, j) 2^-n.
    """
    ChannelSpec.bsc(delta)
    check_blocklength(n)
    if m.log2_M == 0:
        return BoundResult(NEG_INF, 0.0, Method.RC_EXACT, {"terms": 0})

    flips = np.arange(n + 1)
    tails, heads = _log_tails_and_heads(n)
    log_w = log_binomial(n, flips) - n * LN2
    logger.debug("bsc_rc: n={} log2_M={} summing {} terms".format(n, m.log2_M, n + 1))
    return _discrete_result(
        log_binomial_pmf(n, flips, delta), log_w, tails[1:], heads[:-1], m, n
    )


def bec_rc(delta: float, n: int, m: EnsembleSize) -> BoundResult:
    """Exact ensemble error probability on the BEC

    With i erasures a competitor agrees on the n - i surviving symbols with
    probability 2^-(n-i) and otherwise is strictly farther away.
    """
    ChannelSpec.bec(delta)
    check_blocklength(n)
    if m.log2_M == 0:
        return BoundResult(NEG_INF, 0.0, Method.RC_EXACT, {"terms": 0})

    erasures = np.arange(n + 1)
    log_w = -(n - erasures) * LN2
    log_z = log1mexp(log_w)
    logger.debug("bec_rc: n={} log2_M={} summing {} terms".format(n, m.log2_M, n + 1))
    # a competitor either agrees with every surviving symbol or loses
    return _discrete_result(
        log_binomial_pmf(n, erasures, delta), log_w, log_z, np.full(n + 1, NEG_INF), m, n
    )


def _log_neg_log_sf(log_cdf: np.ndarray, log_sf: np.ndarray) -> np.ndarray:
    """log a with a = -log(1 - F); falls back to log F once log_sf rounds to zero"""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(-log_sf)
    return np.where(log_sf == 0.0, log_cdf, out)


def exact_bracket(m: EnsembleSize) -> Bracket:
    """1 - (1 - F)^(M-1)"""

    def bracket(log_cdf, log_sf):
        t = m.log_m_minus_one + _log_neg_log_sf(log_cdf, log_sf)
        return -np.expm1(-np.exp(t))

    return bracket


def upper_bracket(m: EnsembleSize) -> Bracket:
    """min(1, (M-1) F)"""

    def bracket(log_cdf, log_sf):
        return np.exp(np.minimum(0.0, m.log_m_minus_one + log_cdf))

    return bracket


def lower_bracket(m: EnsembleSize) -> Bracket:
    """1 - 1 / (1 + (M-1) a)"""

    def bracket(log_cdf, log_sf):
        return special.expit(m.log_m_minus_one + _log_neg_log_sf(log_cdf, log_sf))

    return bracket


def series_bracket(m: EnsembleSize, order: int) -> Bracket:
    """1 - 1 / sum_{k<=order} ((M-1) a)^k / k!"""
    orders = np.arange(1, order + 1)

    def bracket(log_cdf, log_sf):
        t = m.log_m_minus_one + _log_neg_log_sf(log_cdf, log_sf)
        k = orders.reshape((-1,) + (1,) * np.ndim(t))
        log_factorials = special.gammaln(k + 1.0)
        with np.errstate(invalid="ignore"):
            log_terms = np.where(np.isneginf(t), NEG_INF, k * t - log_factorials)
        # the k = 0 term is exactly one
        log_partial = np.logaddexp(0.0, log_sum(log_terms, axis=0))
        return -np.expm1(-log_partial)

    return bracket


def _awgn_integral(
    gamma: float,
    n: int,
    m: EnsembleSize,
    cfg: QuadratureConfig | None,
    method: Method,
    bracket: Bracket,
    strict: bool,
    diagnostics: dict | None = None,
) -> BoundResult:
    ChannelSpec.awgn(gamma)
    check_blocklength(n)
    cfg = QuadratureConfig.from_env() if cfg is None else cfg
    diagnostics = dict(diagnostics or {})
    if m.log2_M == 0:
        diagnostics.update(cells=0, evaluations=0)
        return BoundResult(NEG_INF, 0.0, method, diagnostics)

    noise = GammaParams(0.5 * n, 2.0 / gamma)
    outer_bounds = (
        gamma_quantile(cfg.tail_mass, noise),
        gamma_quantile(1.0 - cfg.tail_mass, noise),
    )

    def inner_bounds(xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return ncx2_tail_quantiles(cfg.tail_mass, NoncentralChi2Params(n, xs))

    def integrand(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        # x holds one outer node per row, y the inner nodes of that row
        log_density = gamma_log_pdf(x, noise) + ncx2_log_pdf(y, NoncentralChi2Params(n, x))
        log_cdf, log_sf = ncx2_log_cdf_sf(x, NoncentralChi2Params(n, y))
        return np.exp(log_density) * bracket(np.asarray(log_cdf), np.asarray(log_sf))

    result = integrate_2d_iterated(integrand, outer_bounds, inner_bounds, cfg, strict=strict)
    diagnostics.update(
        cells=result.cells,
        evaluations=result.evaluations,
        outer_range=list(outer_bounds),
    )
    flags = []
    if not result.converged:
        flags.append("depth-exceeded")
    logger.debug(
        "{}: n={} gamma={} log2_M={} value={!r} err={:.3g} cells={}".format(
            method, n, gamma, m.log2_M, result.value, result.err_est, result.cells
        )
    )
    epsilon = min(max(result.value, 0.0), 1.0)
    log_epsilon = math.log(epsilon) if epsilon > 0 else NEG_INF
    # both the outer and every inner range drop 2 * tail_mass of probability
    err_est = result.err_est + 4.0 * cfg.tail_mass
    return BoundResult(log_epsilon, err_est, method, diagnostics, flags)


def awgn_rc_exact(
    gamma: float,
    n: int,
    m: EnsembleSize,
    cfg: QuadratureConfig | None = None,
    strict: bool = False,
) -> BoundResult:
    return _awgn_integral(gamma, n, m, cfg, Method.RC_EXACT, exact_bracket(m), strict)


def awgn_rc_upper(
    gamma: float,
    n: int,
    m: EnsembleSize,
    cfg: QuadratureConfig | None = None,
    strict: bool = False,
) -> BoundResult:
    return _awgn_integral(gamma, n, m, cfg, Method.GAUSS_UPPER, upper_bracket(m), strict)


def awgn_rc_lower(
    gamma: float,
    n: int,
    m: EnsembleSize,
    cfg: QuadratureConfig | None = None,
    strict: bool = False,
) -> BoundResult:
    return _awgn_integral(gamma, n, m, cfg, Method.GAUSS_LOWER, lower_bracket(m), strict)


def awgn_rc_series(
    gamma: float,
    n: int,
    m: EnsembleSize,
    cfg: QuadratureConfig | None = None,
    order: int = 4,
    strict: bool = False,
) -> BoundResult:
    """Lower bound from truncating the exponential series at ``order`` terms

    Order 1 is ``awgn_rc_lower``; higher orders increase towards the exact
    integral.
    """
    if int(order) != order or order < 1:
        raise DomainError("Series order must be a positive integer, got {}".format(order))
    return _awgn_integral(
        gamma,
        n,
        m,
        cfg,
        Method.GAUSS_SERIES,
        series_bracket(m, int(order)),
        strict,
        {"order": int(order)},
    )
