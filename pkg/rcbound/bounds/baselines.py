"""Comparison bounds for the BEC: RCU and DT achievability, and the converse

Each is a sum over the erasure count i weighted by Binomial(n, delta); the
per-count factors depend only on how many of the M codewords can agree with
the n - i unerased symbols.
"""

from __future__ import annotations

import logging

import numpy as np

from rcbound.models import BoundResult, ChannelSpec, EnsembleSize, Method, check_blocklength
from rcbound.numerics.logdomain import LN2, NEG_INF, log1mexp, log_binomial_pmf, log_sum

logger = logging.getLogger(__name__)


def _erasure_weights(delta: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(log P[i erasures], (n - i) ln 2) for i = 0..n"""
    ChannelSpec.bec(delta)
    check_blocklength(n)
    erasures = np.arange(n + 1)
    return log_binomial_pmf(n, erasures, delta), (n - erasures) * LN2


def _sum(log_terms: np.ndarray, method: Method, n: int) -> BoundResult:
    log_epsilon = min(log_sum(log_terms), 0.0)
    return BoundResult(log_epsilon, 0.0, method, {"terms": n + 1})


def bec_rcu(delta: float, n: int, m: EnsembleSize) -> BoundResult:
    """sum_i P[i] min{1, (M-1) 2^-(n-i)}"""
    log_pmf, surviving = _erasure_weights(delta, n)
    if m.log2_M == 0:
        return BoundResult(NEG_INF, 0.0, Method.BEC_RCU, {"terms": 0})
    log_terms = log_pmf + np.minimum(0.0, m.log_m_minus_one - surviving)
    return _sum(log_terms, Method.BEC_RCU, n)


def bec_dt(delta: float, n: int, m: EnsembleSize) -> BoundResult:
    """sum_i P[i] min{1, ((M-1)/2) 2^-(n-i)}"""
    log_pmf, surviving = _erasure_weights(delta, n)
    if m.log2_M == 0:
        return BoundResult(NEG_INF, 0.0, Method.BEC_DT, {"terms": 0})
    log_terms = log_pmf + np.minimum(0.0, m.log_m_minus_one - LN2 - surviving)
    return _sum(log_terms, Method.BEC_DT, n)


def bec_converse(delta: float, n: int, m: EnsembleSize) -> BoundResult:
    """sum_i P[i] max{0, 1 - 2^(n-i) / M}, a lower bound for every code"""
    log_pmf, surviving = _erasure_weights(delta, n)
    gap = surviving - m.log_m
    # counts with 2^(n-i) >= M can be decoded without error
    active = gap < 0
    log_terms = np.full(n + 1, NEG_INF)
    log_terms[active] = log_pmf[active] + log1mexp(gap[active])
    logger.debug(
        "bec_converse: n={} log2_M={} active terms {}".format(n, m.log2_M, int(active.sum()))
    )
    return _sum(log_terms, Method.BEC_CONVERSE, n)
