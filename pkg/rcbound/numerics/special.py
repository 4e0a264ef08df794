"""Log-domain gamma and noncentral chi-squared distributions

The noncentral chi-squared routines evaluate the Poisson mixture of central
components directly in log space, so both tails stay accurate in relative
terms far below the smallest normal double.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union
import logging
import math

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize, special, stats

from rcbound.errors import ConvergenceError, DomainError
from rcbound.numerics.logdomain import LN2, NEG_INF, log1mexp, log_sum

logger = logging.getLogger(__name__)

# Below this the library incomplete gamma is recomputed in log space
UNDERFLOW = 1e-290
SERIES_EPS = 1e-17
SERIES_MAX_ITER = 100_000
CF_MAX_ITER = 10_000
CF_FPMIN = 1e-300
# a few ulps; |delta - 1| cannot settle below one
CF_EPS = 1e-15

MIXTURE_CUTOFF = 60.0
MIXTURE_TAIL_REL = 1e-25
MIXTURE_INITIAL_WIDTH = 8
MIXTURE_MAX_WIDTH = 1 << 17

QUANTILE_MAX_ITER = 200
QUANTILE_RTOL = 1e-13

Real = Union[float, np.ndarray]


@dataclass(frozen=True)
class GammaParams:
    """Gamma distribution with shape kappa and scale theta"""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise DomainError("Gamma shape must be positive, got {}".format(self.shape))
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError("Gamma scale must be positive, got {}".format(self.scale))

    @property
    def mean(self) -> float:
        return self.shape * self.scale


@dataclass(frozen=True)
class NoncentralChi2Params:
    """Noncentral chi-squared with integer dof; noncentrality may be an array"""

    dof: int
    noncentrality: Real = 0.0

    def __post_init__(self):
        if int(self.dof) != self.dof or self.dof < 1:
            raise DomainError("dof must be a positive integer, got {}".format(self.dof))
        lam = np.asarray(self.noncentrality, dtype=float)
        if np.any(~np.isfinite(lam)) or np.any(lam < 0):
            raise DomainError(
                "Noncentrality must be finite and nonnegative, got {}".format(lam.tolist())
            )


def _check_positive(x: ArrayLike, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("{} requires x > 0, got {}".format(name, x.tolist()))
    return x


# Regularized incomplete gamma


def _log_gammainc_series(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    term = np.ones_like(a)
    total = np.ones_like(a)
    for k in range(1, SERIES_MAX_ITER):
        term = term * x / (a + k)
        total += term
        if np.all(term < SERIES_EPS * total):
            break
    else:
        raise ConvergenceError("Incomplete gamma series did not converge")
    with np.errstate(divide="ignore"):
        return a * np.log(x) - x - special.gammaln(a + 1.0) + np.log(total)


def _log_gammaincc_cf(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    # modified Lentz evaluation of the continued fraction
    b = x + 1.0 - a
    c = np.full_like(a, 1.0 / CF_FPMIN)
    d = 1.0 / np.where(np.abs(b) < CF_FPMIN, CF_FPMIN, b)
    h = d.copy()
    for i in range(1, CF_MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < CF_FPMIN, CF_FPMIN, d)
        c = b + an / c
        c = np.where(np.abs(c) < CF_FPMIN, CF_FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= CF_EPS):
            break
    else:
        raise ConvergenceError("Incomplete gamma continued fraction did not converge")
    return a * np.log(x) - x - special.gammaln(a) + np.log(h)


def log_gammainc(a: ArrayLike, x: ArrayLike):
    """log P(a, x), the regularized lower incomplete gamma"""
    a, x = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    value = special.gammainc(a, x)
    with np.errstate(divide="ignore"):
        out = np.log(value)
    low = (value < UNDERFLOW) & (x > 0)
    if np.any(low):
        out = np.array(out)
        out[low] = _log_gammainc_series(a[low], x[low])
    return out[()]


def log_gammaincc(a: ArrayLike, x: ArrayLike):
    """log Q(a, x) = log(1 - P(a, x))"""
    a, x = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    value = special.gammaincc(a, x)
    with np.errstate(divide="ignore"):
        out = np.log(value)
    low = value < UNDERFLOW
    if np.any(low):
        out = np.array(out)
        upper = low & (x >= a + 1.0)
        lower = low & ~upper
        if np.any(upper):
            out[upper] = _log_gammaincc_cf(a[upper], x[upper])
        if np.any(lower):
            # Q underflowing left of the mode only happens through P rounding to 1
            out[lower] = log1mexp(np.minimum(log_gammainc(a[lower], x[lower]), 0.0))
    return out[()]


# Gamma distribution


def gamma_log_pdf(x: ArrayLike, p: GammaParams):
    x = _check_positive(x, "gamma_log_pdf")
    out = (
        special.xlogy(p.shape - 1.0, x)
        - x / p.scale
        - special.gammaln(p.shape)
        - p.shape * math.log(p.scale)
    )
    return np.asarray(out)[()]


def gamma_log_cdf(x: ArrayLike, p: GammaParams):
    x = _check_positive(x, "gamma_log_cdf")
    return log_gammainc(p.shape, x / p.scale)


def gamma_log_sf(x: ArrayLike, p: GammaParams):
    x = _check_positive(x, "gamma_log_sf")
    return log_gammaincc(p.shape, x / p.scale)


def _invert_cdf(
    log_cdf: Callable[[float], float],
    log_sf: Callable[[float], float],
    q: float,
    guess: float,
) -> float:
    """Bracketed Brent search on the log of whichever tail is smaller"""
    if not 0.0 < q < 1.0:
        raise DomainError("Quantile level must lie in (0, 1), got {}".format(q))
    if q <= 0.5:
        target = math.log(q)

        def objective(x):
            return float(log_cdf(x)) - target

    else:
        target = math.log1p(-q)

        def objective(x):
            return target - float(log_sf(x))

    lo = hi = guess
    for _ in range(QUANTILE_MAX_ITER * 5):
        if objective(lo) <= 0:
            break
        lo /= 2.0
    else:
        raise ConvergenceError("Could not bracket quantile {} from below".format(q))
    for _ in range(QUANTILE_MAX_ITER * 5):
        if objective(hi) >= 0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("Could not bracket quantile {} from above".format(q))
    if lo == hi:
        return lo

    sol = optimize.root_scalar(
        objective,
        bracket=(lo, hi),
        method="brentq",
        xtol=1e-300,
        rtol=QUANTILE_RTOL,
        maxiter=QUANTILE_MAX_ITER,
    )
    if not sol.converged:
        raise ConvergenceError(
            "Quantile search for q={} stopped after {} iterations: {}".format(
                q, sol.iterations, sol.flag
            )
        )
    return sol.root


def gamma_quantile(q: float, p: GammaParams) -> float:
    return _invert_cdf(
        lambda x: gamma_log_cdf(x, p),
        lambda x: gamma_log_sf(x, p),
        q,
        guess=p.mean,
    )


# Noncentral chi-squared as a Poisson mixture of central components


def _log_poisson(j: np.ndarray, mean: np.ndarray) -> np.ndarray:
    return special.xlogy(j, mean) - mean - special.gammaln(j + 1.0)


def _edge_open(edge: np.ndarray, inner: np.ndarray, peak: np.ndarray, total: np.ndarray):
    """Whether the mass beyond a window edge may still matter

    The discarded tail is bounded geometrically by edge * r / (1 - r) with r
    the ratio of the edge term to its inner neighbour.
    """
    with np.errstate(invalid="ignore", divide="ignore"):
        log_ratio = edge - inner
        near_peak = edge > peak - MIXTURE_CUTOFF
        growing = log_ratio >= 0
        safe_ratio = np.where(growing | np.isnan(log_ratio), -1.0, log_ratio)
        tail = edge + safe_ratio - log1mexp(safe_ratio)
        too_heavy = tail > total + math.log(MIXTURE_TAIL_REL)
    live = edge > NEG_INF
    return live & (near_peak | growing | too_heavy)


def _initial_width(mean: np.ndarray) -> int:
    """Half-width covering MIXTURE_CUTOFF nats of the widest Poisson row"""
    spread = math.sqrt(2.0 * MIXTURE_CUTOFF * float(np.max(mean, initial=0.0)))
    return max(MIXTURE_INITIAL_WIDTH, int(math.ceil(spread)) + MIXTURE_INITIAL_WIDTH)


def _log_poisson_mixture(
    log_components: Callable[[np.ndarray], tuple[np.ndarray, ...]],
    mean: np.ndarray,
) -> list[np.ndarray]:
    """log sum_j Pois(j; mean) c(j) for every component, per row of ``mean``

    The window starts around the Poisson mode wide enough for the Poisson
    weights alone and doubles until both edges of every row and component are
    certified negligible. Rows sharing a noncentrality share their weights.
    """
    distinct, owner = np.unique(mean, return_inverse=True)
    owner = owner.ravel()
    mode = np.floor(mean)[:, None]
    width = _initial_width(mean)
    while True:
        offsets = np.arange(-width, width + 1, dtype=float)
        j = mode + offsets
        valid = j >= 0
        j = np.where(valid, j, 0.0)
        j_distinct = np.maximum(np.floor(distinct)[:, None] + offsets, 0.0)
        log_w = _log_poisson(j_distinct, distinct[:, None])[owner]
        has_left = mode[:, 0] - width > 0
        sums = []
        open_edge = np.zeros(mean.shape, dtype=bool)
        for log_c in log_components(j):
            terms = np.where(valid, log_w + log_c, NEG_INF)
            total = log_sum(terms, axis=1)
            peak = terms.max(axis=1)
            open_edge |= _edge_open(terms[:, -1], terms[:, -2], peak, total)
            open_edge |= has_left & _edge_open(terms[:, 0], terms[:, 1], peak, total)
            sums.append(total)
        if not np.any(open_edge):
            logger.debug("Poisson mixture settled at {} terms per row".format(2 * width + 1))
            return sums
        if width >= MIXTURE_MAX_WIDTH:
            raise ConvergenceError(
                "Poisson mixture did not settle within {} terms".format(2 * width + 1)
            )
        width *= 2


def _broadcast_ncx2(x: ArrayLike, p: NoncentralChi2Params, name: str):
    x = _check_positive(x, name)
    x, lam = np.broadcast_arrays(x, np.asarray(p.noncentrality, dtype=float))
    return x.shape, x.ravel(), lam.ravel()


def ncx2_log_pdf(y: ArrayLike, p: NoncentralChi2Params):
    shape, y, lam = _broadcast_ncx2(y, p, "ncx2_log_pdf")
    log_y = np.log(y)[:, None]

    def components(j):
        a = 0.5 * p.dof + j
        return ((a - 1.0) * log_y - 0.5 * y[:, None] - special.gammaln(a) - a * LN2,)

    (out,) = _log_poisson_mixture(components, 0.5 * lam)
    return out.reshape(shape)[()]


def ncx2_log_cdf_sf(x: ArrayLike, p: NoncentralChi2Params):
    """(log F, log(1 - F)) with each tail taken from the side where it is small"""
    shape, x, lam = _broadcast_ncx2(x, p, "ncx2_log_cdf_sf")
    half_x = 0.5 * x[:, None]

    def components(j):
        a = 0.5 * p.dof + j
        return log_gammainc(a, half_x), log_gammaincc(a, half_x)

    lower, upper = _log_poisson_mixture(components, 0.5 * lam)
    lower = np.minimum(lower, 0.0)
    upper = np.minimum(upper, 0.0)
    log_cdf = np.where(upper < -LN2, log1mexp(upper), lower)
    log_sf = np.where(lower < -LN2, log1mexp(lower), upper)
    return log_cdf.reshape(shape)[()], log_sf.reshape(shape)[()]


def ncx2_log_cdf(x: ArrayLike, p: NoncentralChi2Params):
    return ncx2_log_cdf_sf(x, p)[0]


def ncx2_log_sf(x: ArrayLike, p: NoncentralChi2Params):
    return ncx2_log_cdf_sf(x, p)[1]


def ncx2_quantile(q: float, p: NoncentralChi2Params) -> float:
    if np.ndim(p.noncentrality) != 0:
        raise DomainError("ncx2_quantile takes a scalar noncentrality")
    return _invert_cdf(
        lambda x: ncx2_log_cdf(x, p),
        lambda x: ncx2_log_sf(x, p),
        q,
        guess=p.dof + float(p.noncentrality),
    )


def ncx2_tail_quantiles(tail: float, p: NoncentralChi2Params) -> tuple[Real, Real]:
    """(q(tail), q(1 - tail)) for every noncentrality in ``p`` at once

    Library quantiles first; entries they cannot place inside (0, inf) fall
    back to the log-domain search.
    """
    if not 0.0 < tail < 0.5:
        raise DomainError("Tail mass must lie in (0, 0.5), got {}".format(tail))
    lam = np.asarray(p.noncentrality, dtype=float)
    with np.errstate(all="ignore"):
        lo = np.array(stats.ncx2.ppf(tail, p.dof, lam), dtype=float, ndmin=1)
        hi = np.array(stats.ncx2.isf(tail, p.dof, lam), dtype=float, ndmin=1)
    bad = ~((lo > 0) & (hi > lo) & np.isfinite(hi))
    for k in np.flatnonzero(bad):
        single = NoncentralChi2Params(p.dof, float(np.ravel(lam)[k]))
        lo[k] = ncx2_quantile(tail, single)
        hi[k] = ncx2_quantile(1.0 - tail, single)
    if bad.any():
        logger.debug("ncx2_tail_quantiles: {} of {} searched in log space".format(bad.sum(), bad.size))
    return lo.reshape(lam.shape)[()], hi.reshape(lam.shape)[()]
