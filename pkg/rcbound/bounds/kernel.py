"""Channel-independent probability-of-correct-decision kernels

Given the tie mass w and exceed mass z of one competing codeword, the
probability that a minimum distance decoder with uniform tie-breaking picks
the transmitted codeword among M is ((w + z)^M - z^M) / (w M), reducing to
z^(M-1) when ties have probability zero.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from numpy.typing import ArrayLike

from rcbound.errors import DomainError, InvariantViolation, SizeExceeded
from rcbound.models import EnsembleSize
from rcbound.numerics.logdomain import (
    LN2,
    NEG_INF,
    LogReal,
    log1mexp,
    log_add,
    log_binomial,
    log_sum,
    to_log,
)

TIE_TOL = 1e-12
# Continuous limit once M w <= SWITCHOVER (w + z)
SWITCHOVER = 1e-14
DIRECT_SUM_MAX_M = 1 << 20
# (M-1) r and r below this use the alternating series for 1 - g
TIE_SERIES_MAX = 0.1
TIE_SERIES_TERMS = 40


@dataclass(frozen=True)
class TieMass:
    """log of the tie mass w and the exceed mass z"""

    log_w: LogReal
    log_z: LogReal

    def __post_init__(self):
        if math.isnan(self.log_w) or math.isnan(self.log_z):
            raise InvariantViolation("Tie mass has NaN components")
        total = log_add(self.log_w, self.log_z)
        if total > math.log1p(TIE_TOL):
            raise InvariantViolation(
                "Tie mass w + z = {} exceeds one".format(math.exp(total))
            )

    @classmethod
    def from_probs(cls, w: float, z: float) -> TieMass:
        return cls(float(to_log(w)), float(to_log(z)))

    @property
    def w(self) -> float:
        return math.exp(self.log_w)

    @property
    def z(self) -> float:
        return math.exp(self.log_z)


def _masses(log_w: ArrayLike, log_z: ArrayLike, log_head: ArrayLike | None):
    """Broadcast (log w, log z, log s, log(1 - s)) for s = w + z and check s <= 1

    Callers that know 1 - s exactly pass ``log_head``; rebuilding it from w
    and z loses every digit of 1 - s below the rounding of one, and M log s
    multiplies that loss by M.
    """
    log_w, log_z = np.broadcast_arrays(
        np.asarray(log_w, dtype=float), np.asarray(log_z, dtype=float)
    )
    if log_head is None:
        log_s = log_add(log_w, log_z)
        if np.any(log_s > math.log1p(TIE_TOL)):
            raise InvariantViolation("Tie masses with w + z > 1 + {}".format(TIE_TOL))
        log_head = log1mexp(np.minimum(log_s, 0.0))
    log_head = np.broadcast_to(np.asarray(log_head, dtype=float), log_w.shape)
    if np.any(np.isnan(log_head)):
        raise InvariantViolation("Head mass 1 - w - z is NaN")
    log_head = np.minimum(log_head, 0.0)
    return log_w, log_z, log1mexp(log_head), log_head


def _log_neg_log1mexp(log_head: np.ndarray) -> np.ndarray:
    """log(-log(1 - e^h)), so that M log s = -exp(log M + this) for s = 1 - e^h"""
    h = np.exp(log_head)
    with np.errstate(divide="ignore", invalid="ignore"):
        # -log1p(-h) / h tends to one as h underflows
        safe = np.where(h > 0, h, 1.0)
        factor = np.where(h > 0, -np.log1p(-safe) / safe, 1.0)
        near_one = log_head + np.log(factor)
        far = np.log(-np.log1p(-np.minimum(h, 1.0)))
    return np.where(log_head < -LN2, near_one, far)


def _log_log1p_exp(x: np.ndarray) -> np.ndarray:
    """log(log1p(e^x)), so that M log(1 + w / z) = exp(log M + this) for x = log(w / z)"""
    q = np.exp(np.minimum(x, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(q > 0, q, 1.0)
        factor = np.where(q > 0, np.log1p(safe) / safe, 1.0)
        low = x + np.log(factor)
        high = np.log(np.logaddexp(0.0, x))
    return np.where(x <= 0, low, high)


def _log_ratio(log_w: np.ndarray, log_z: np.ndarray) -> np.ndarray:
    """log(log(s / z)) = log(log1p(w / z)); ``-inf`` when there are no ties"""
    with np.errstate(invalid="ignore"):
        out = _log_log1p_exp(log_w - log_z)
    return np.where(log_w == NEG_INF, NEG_INF, out)


def log_correct_prob(
    log_w: ArrayLike, log_z: ArrayLike, m: EnsembleSize, log_head: ArrayLike | None = None
):
    """Array form of ``correct_prob_kernel``

    Every power is taken as M log s = -exp(log M + log(-log s)), so the
    kernel keeps its value when 1 - s or w / z is far below the rounding of
    one and M is far above the largest double.
    """
    log_w, log_z, log_s, log_head = _masses(log_w, log_z, log_head)
    if m.log2_M == 0:
        return np.zeros(log_w.shape)[()]

    log_neg_log_s = _log_neg_log1mexp(log_head)
    log_ratio = _log_ratio(log_w, log_z)
    with np.errstate(over="ignore", invalid="ignore"):
        general = (
            -np.exp(m.log_m + log_neg_log_s)
            + log1mexp(-np.exp(m.log_m + log_ratio))
            - log_w
            - m.log_m
        )
        # z^(M-1) with log z = log s - log(s / z)
        continuous = -np.exp(m.log_m_minus_one + np.logaddexp(log_neg_log_s, log_ratio))
    tie_free = (log_w == NEG_INF) | (log_w + m.log_m <= math.log(SWITCHOVER) + log_s)
    out = np.where(tie_free, continuous, general)
    return np.minimum(np.where(np.isnan(out), NEG_INF, out), 0.0)[()]


def _log_tie_loss_series(a: np.ndarray, r: np.ndarray) -> np.ndarray:
    """log sum_{k>=1} (-1)^(k+1) C(M-1, k) r^k / (k + 1) with a = (M-1) r small"""
    term = 0.5 * a
    total = term.copy()
    for k in range(1, TIE_SERIES_TERMS):
        term = -term * (a - k * r) / (k + 2)
        total = total + term
    with np.errstate(divide="ignore"):
        return np.log(total)


def log_error_prob(
    log_w: ArrayLike, log_z: ArrayLike, m: EnsembleSize, log_head: ArrayLike | None = None
):
    """log(1 - kernel), accurate when the kernel is within rounding of one

    With s = w + z and r = w / s the complement splits into two nonnegative
    parts, 1 - s^(M-1) and s^(M-1) (1 - g) where g = (1 - (1-r)^M) / (r M),
    so no cancellation happens between them.
    """
    log_w, log_z, log_s, log_head = _masses(log_w, log_z, log_head)
    if m.log2_M == 0:
        return np.full(log_w.shape, NEG_INF)[()]

    log_ratio = _log_ratio(log_w, log_z)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        decay = -np.exp(m.log_m_minus_one + _log_neg_log1mexp(log_head))
        log_mass_loss = log1mexp(decay)
        log_r = np.minimum(log_w - log_s, 0.0)
        r = np.exp(log_r)
        a = np.exp(m.log_m_minus_one + log_r)
        series = _log_tie_loss_series(a, r)
        log_g = log1mexp(-np.exp(m.log_m + log_ratio)) - log_r - m.log_m
        direct = log1mexp(np.clip(np.nan_to_num(log_g, nan=0.0), None, 0.0))
    use_series = (a <= TIE_SERIES_MAX) & (r <= TIE_SERIES_MAX)
    log_tie_loss = np.where(use_series, series, direct)
    log_tie_loss = np.where(log_w == NEG_INF, NEG_INF, log_tie_loss)
    out = log_add(log_mass_loss, np.where(decay == NEG_INF, NEG_INF, decay + log_tie_loss))
    return np.minimum(out, 0.0)[()]


def correct_prob_kernel(t: TieMass, m: EnsembleSize) -> LogReal:
    """log(((w + z)^M - z^M) / (w M))"""
    return float(log_correct_prob(t.log_w, t.log_z, m))


def continuous_kernel(log_z: ArrayLike, m: EnsembleSize):
    """log z^(M-1), the tie-free limit"""
    log_z = np.asarray(log_z, dtype=float)
    if np.any(log_z > TIE_TOL):
        raise DomainError("z must lie in [0, 1], got log z = {}".format(log_z.tolist()))
    return m.minus_one_times(np.minimum(log_z, 0.0))


def direct_sum_kernel(t: TieMass, M: int) -> LogReal:
    """log sum_l C(M-1, l) w^l z^(M-1-l) / (1 + l), the exponential-time form"""
    if int(M) != M or M < 1:
        raise DomainError("M must be a positive integer, got {}".format(M))
    if M > DIRECT_SUM_MAX_M:
        raise SizeExceeded(
            "Direct sum limited to M <= {}, got {}".format(DIRECT_SUM_MAX_M, M)
        )
    M = int(M)
    if M == 1:
        return 0.0
    ell = np.arange(M)
    with np.errstate(invalid="ignore"):
        w_part = np.where(ell > 0, ell * t.log_w, 0.0)
        z_part = np.where(M - 1 - ell > 0, (M - 1 - ell) * t.log_z, 0.0)
    terms = log_binomial(M - 1, ell) - np.log1p(ell) + w_part + z_part
    return min(log_sum(terms), 0.0)
