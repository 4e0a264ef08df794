"""Arithmetic on nonnegative reals carried as natural logarithms

A ``LogReal`` is a plain float (or an array of them) holding ``log(p)``;
``-inf`` is the exact zero. All functions accept scalars or numpy arrays and
broadcast; 0-d results come back as numpy scalars.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from rcbound.errors import DomainError

LogReal = float

NEG_INF = -math.inf
LN2 = math.log(2.0)

# log units; slightly negative differences within this are clamped to zero
LOG_SUB_TOL = 1e-12

MAX_BINOMIAL_N = 10**7


def to_log(p: ArrayLike):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(np.isnan(p)):
        raise DomainError("Cannot take the log of negative probability {}".format(p))
    with np.errstate(divide="ignore"):
        return np.log(p)[()]


def from_log(a: ArrayLike):
    return np.exp(np.asarray(a, dtype=float))[()]


def log_add(a: ArrayLike, b: ArrayLike):
    """log(e^a + e^b); ``-inf`` is an absorbing identity"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    hi = np.maximum(a, b)
    lo = np.minimum(a, b)
    with np.errstate(invalid="ignore"):
        out = hi + np.log1p(np.exp(lo - hi))
    out = np.where(lo == NEG_INF, hi, out)
    return out[()]


def log_sub(a: ArrayLike, b: ArrayLike, tol: float = LOG_SUB_TOL):
    """log(e^a - e^b) for a >= b

    Differences with b above a by no more than ``tol`` are returned as exact
    zero; anything beyond raises ``DomainError``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b - a > tol):
        raise DomainError(
            "log_sub requires a >= b, got a={} b={}".format(a.tolist(), b.tolist())
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = np.minimum(b - a, 0.0)
        out = a + np.log(-np.expm1(diff))
    out = np.where(b == NEG_INF, a, out)
    out = np.where(b >= a, NEG_INF, out)
    return out[()]


def log1mexp(a: ArrayLike):
    """log(1 - e^a) for a <= 0, split at a = -log 2"""
    a = np.asarray(a, dtype=float)
    if np.any(a > 0):
        raise DomainError("log1mexp requires a <= 0, got {}".format(a.tolist()))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > -LN2, np.log(-np.expm1(a)), np.log1p(-np.exp(a)))
    return out[()]


def log_sum(values: ArrayLike, axis=None):
    """log of the sum of e^v; ``-inf`` for empty or all-zero input"""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return NEG_INF
    peak = np.max(values, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = special.logsumexp(values - safe, axis=axis, keepdims=True) + safe
    out = np.where(peak == NEG_INF, NEG_INF, out)
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def _check_binomial(n, k) -> tuple[np.ndarray, np.ndarray]:
    n = np.asarray(n)
    k = np.asarray(k)
    if np.any(n < 0) or np.any(n > MAX_BINOMIAL_N):
        raise DomainError("Binomial n out of range: {}".format(n.tolist()))
    if np.any(k < 0) or np.any(k > n):
        raise DomainError("Binomial k out of range for n={}: {}".format(n.tolist(), k.tolist()))
    return n.astype(float), k.astype(float)


def log_binomial(n: ArrayLike, k: ArrayLike):
    """log C(n, k) via the log-beta function"""
    n, k = _check_binomial(n, k)
    # betaln keeps full relative accuracy where a gammaln difference cancels
    out = -np.log1p(n) - special.betaln(n - k + 1.0, k + 1.0)
    out = np.where((k == 0) | (k == n), 0.0, out)
    return out[()]


def log_binomial_pmf(n: int, i: ArrayLike, p: float):
    """log C(n, i) p^i (1-p)^(n-i), with 0 log 0 = 0"""
    if not 0.0 <= p <= 1.0:
        raise DomainError("Probability out of range: {}".format(p))
    i = np.asarray(i)
    with np.errstate(divide="ignore"):
        out = log_binomial(n, i) + special.xlogy(i, p) + special.xlog1py(n - i, -p)
    return np.asarray(out)[()]


def log_binomial_tails(n: int) -> np.ndarray:
    """Table of log sum_{j>=i} C(n, j) for i = 0..n+1 in one pass"""
    log_terms = log_binomial(n, np.arange(n + 1))
    tails = np.empty(n + 2)
    tails[n + 1] = NEG_INF
    # accumulate from j = n downward so the smaller terms go in first
    tails[: n + 1] = np.logaddexp.accumulate(np.atleast_1d(log_terms)[::-1])[::-1]
    return tails


def log_binomial_tail(n: int, i: int) -> LogReal:
    if not 0 <= i <= n + 1:
        raise DomainError("Tail index {} out of range for n={}".format(i, n))
    if i == n + 1:
        return NEG_INF
    return log_sum(log_binomial(n, np.arange(i, n + 1)))
