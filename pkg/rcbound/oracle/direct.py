"""Exponential-time reference values for the discrete channels

These expand the correct-decision probability as the explicit sum over the
number of tied competitors instead of the closed form, so agreement with
``bsc_rc``/``bec_rc`` checks the algebra that collapses the sum.
"""

from __future__ import annotations

import math

import numpy as np

from rcbound.bounds.kernel import TieMass, direct_sum_kernel
from rcbound.errors import InvariantViolation, SizeExceeded
from rcbound.models import ChannelSpec, check_blocklength
from rcbound.numerics.logdomain import (
    LN2,
    NEG_INF,
    LogReal,
    log1mexp,
    log_binomial,
    log_binomial_pmf,
    log_binomial_tails,
    log_sum,
)

MAX_N = 20
MAX_M = 256


def _check_sizes(n: int, M: int):
    check_blocklength(n)
    if n > MAX_N or not 1 <= M <= MAX_M or int(M) != M:
        raise SizeExceeded(
            "Direct sums need n <= {} and integer 1 <= M <= {}, got n={} M={}".format(
                MAX_N, MAX_M, n, M
            )
        )


def _log_error(log_weights: np.ndarray, tie_masses: list[TieMass], M: int) -> LogReal:
    if M == 1:
        return NEG_INF
    log_success = log_sum(
        [w + direct_sum_kernel(t, M) for w, t in zip(log_weights, tie_masses)]
    )
    if log_success > 1e-9:
        raise InvariantViolation(
            "Direct-sum success probability {} exceeds one".format(math.exp(log_success))
        )
    return float(log1mexp(min(log_success, 0.0)))


def rc_direct_bsc(delta: float, n: int, M: int) -> LogReal:
    """log epsilon on the BSC from the per-flip-count direct sums"""
    ChannelSpec.bsc(delta)
    _check_sizes(n, M)
    flips = np.arange(n + 1)
    tails = log_binomial_tails(n)
    ties = [
        TieMass(float(log_binomial(n, i)) - n * LN2, float(tails[i + 1]) - n * LN2)
        for i in flips
    ]
    return _log_error(log_binomial_pmf(n, flips, delta), ties, int(M))


def rc_direct_bec(delta: float, n: int, M: int) -> LogReal:
    """log epsilon on the BEC from the per-erasure-count direct sums"""
    ChannelSpec.bec(delta)
    _check_sizes(n, M)
    erasures = np.arange(n + 1)
    ties = []
    for k in erasures:
        log_w = -(n - int(k)) * LN2
        ties.append(TieMass(log_w, float(log1mexp(log_w))))
    return _log_error(log_binomial_pmf(n, erasures, delta), ties, int(M))
