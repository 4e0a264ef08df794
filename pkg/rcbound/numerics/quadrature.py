"""Adaptive Gauss-Kronrod quadrature

Integrands are vectorized: they receive a numpy array of nodes and return an
array of values (optionally paired with an array of per-node error bounds,
which iterated integration uses to carry inner errors outward).
Batched integrands also receive the index of the integral each row of nodes
belongs to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable
import heapq
import logging
import math

import numpy as np
from numpy.typing import ArrayLike

from rcbound import config
from rcbound.errors import DepthExceeded, DomainError

logger = logging.getLogger(__name__)

# 15-point Kronrod extension of the 7-point Gauss rule
KRONROD_NODES = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
KRONROD_WEIGHTS = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
GAUSS_WEIGHTS = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

_NODES = np.concatenate([-KRONROD_NODES[:-1], KRONROD_NODES[::-1]])
_K_WEIGHTS = np.concatenate([KRONROD_WEIGHTS[:-1], KRONROD_WEIGHTS[::-1]])
_G_WEIGHTS = np.zeros(15)
_G_WEIGHTS[[1, 3, 5]] = GAUSS_WEIGHTS[:3]
_G_WEIGHTS[[13, 11, 9]] = GAUSS_WEIGHTS[:3]
_G_WEIGHTS[7] = GAUSS_WEIGHTS[3]

EPMACH = np.finfo(float).eps
UFLOW = np.finfo(float).tiny
MAX_INTERVALS = 4000


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-15
    max_depth: int = 40
    tail_mass: float = 1e-12

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive, got {}".format(self.rel_tol))
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive, got {}".format(self.abs_tol))
        if self.max_depth < 1:
            raise DomainError("max_depth must be positive, got {}".format(self.max_depth))
        if not 0 < self.tail_mass < 1e-6:
            raise DomainError(
                "tail_mass must lie in (0, 1e-6), got {}".format(self.tail_mass)
            )

    @classmethod
    def from_env(cls, **overrides) -> QuadratureConfig:
        """Defaults from ``RCBOUND_*`` variables, then explicit overrides"""
        kwargs = {
            "rel_tol": config.REL_TOL,
            "abs_tol": config.ABS_TOL,
            "max_depth": config.MAX_DEPTH,
            "tail_mass": config.TAIL_MASS,
        }
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)

    def tightened(self, factor: float = 10.0) -> QuadratureConfig:
        return QuadratureConfig(
            rel_tol=self.rel_tol / factor,
            abs_tol=self.abs_tol / factor,
            max_depth=self.max_depth,
            tail_mass=self.tail_mass,
        )


@dataclass
class QuadratureResult:
    value: float
    err_est: float
    converged: bool = True
    intervals: int = 0
    evaluations: int = 0
    cells: int = 0

    def __iter__(self):
        # unpacks as (value, err_est)
        return iter((self.value, self.err_est))


@dataclass(order=True)
class _Interval:
    neg_err: float
    left: float = field(compare=False)
    right: float = field(compare=False)
    depth: int = field(compare=False)
    value: float = field(compare=False)
    err: float = field(compare=False)
    carried_err: float = field(compare=False)


def _gauss_kronrod(values: np.ndarray, half: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integral and error estimate for each row of 15 node values"""
    result_k = values @ _K_WEIGHTS
    result_g = values @ _G_WEIGHTS
    mean = 0.5 * result_k
    half = np.abs(half)
    resabs = (np.abs(values) @ _K_WEIGHTS) * half
    resasc = (np.abs(values - mean[:, None]) @ _K_WEIGHTS) * half

    # QUADPACK scaling of the Gauss/Kronrod difference
    err = np.abs(result_k - result_g) * half
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0.0) & (err != 0.0), scaled, err)
    err = np.where(resabs > UFLOW / (50.0 * EPMACH), np.maximum(50.0 * EPMACH * resabs, err), err)
    return result_k * half, err


def _kronrod_rows(
    out, left: np.ndarray, right: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(integral, error estimate, carried inner error) per panel from the node values"""
    half = 0.5 * (right - left)
    if isinstance(out, tuple):
        values, inner_err = (np.asarray(x, dtype=float) for x in out)
        carried = np.abs(half) * (np.abs(inner_err) @ _K_WEIGHTS)
    else:
        values, carried = np.asarray(out, dtype=float), np.zeros(len(left))
    if values.shape != (len(left), 15) or not np.all(np.isfinite(values)):
        raise DomainError(
            "Integrand must return 15 finite values per panel on [{}, {}]".format(
                left.min(), right.max()
            )
        )
    value, err = _gauss_kronrod(values, half)
    return value, err, carried


def _nodes(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    return (0.5 * (left + right))[:, None] + (0.5 * (right - left))[:, None] * _NODES


def _panel(f, left, right, depth) -> _Interval:
    left, right = np.array([left]), np.array([right])
    value, err, carried = _kronrod_rows(_single(f(_nodes(left, right)[0])), left, right)
    return _Interval(-(err[0] + carried[0]), left[0], right[0], depth, value[0], err[0], carried[0])


def _single(out):
    if isinstance(out, tuple):
        return tuple(np.asarray(x, dtype=float)[None] for x in out)
    return np.asarray(out, dtype=float)[None]


class _Panels:
    """The panels of one globally adaptive integral"""

    def __init__(self, first: _Interval):
        self.heap = [first]
        self.parked: list[_Interval] = []
        self.evaluations = 15
        self.converged = True

    def total(self) -> tuple[float, float]:
        intervals = self.heap + self.parked
        return (
            math.fsum(x.value for x in intervals),
            math.fsum(x.err + x.carried_err for x in intervals),
        )

    def next_split(self, cfg: QuadratureConfig) -> _Interval | None:
        """The worst panel that may still be bisected; None once done"""
        while True:
            value, err = self.total()
            if err <= cfg.rel_tol * abs(value) + cfg.abs_tol:
                return None
            if not self.heap or len(self.heap) + len(self.parked) >= MAX_INTERVALS:
                self.converged = False
                return None
            worst = heapq.heappop(self.heap)
            if worst.depth < cfg.max_depth:
                return worst
            self.parked.append(worst)

    def push(self, interval: _Interval):
        heapq.heappush(self.heap, interval)
        self.evaluations += 15

    def result(self, a: float, b: float, strict: bool) -> QuadratureResult:
        intervals = sorted(self.heap + self.parked, key=lambda x: x.left)
        result = QuadratureResult(
            value=math.fsum(x.value for x in intervals),
            err_est=math.fsum(x.err + x.carried_err for x in intervals),
            converged=self.converged,
            intervals=len(intervals),
            evaluations=self.evaluations,
            cells=len(intervals),
        )
        if not self.converged:
            message = "Quadrature on [{}, {}] stopped with error {:.3g} above tolerance".format(
                a, b, result.err_est
            )
            if strict:
                raise DepthExceeded(message)
            logger.warning(message)
        return result


def _check_bounds(a, b):
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))) or not np.all(a < b):
        raise DomainError("Integration bounds must be finite with a < b, got [{}, {}]".format(a, b))


def integrate_1d(
    f: Callable,
    a: float,
    b: float,
    cfg: QuadratureConfig | None = None,
    strict: bool = False,
) -> QuadratureResult:
    """Globally adaptive integral of ``f`` over [a, b]

    The panel with the largest error is bisected until the summed error is
    within ``rel_tol * |value| + abs_tol``. When only panels at ``max_depth``
    remain over budget the best estimate comes back with ``converged=False``
    (``strict`` raises ``DepthExceeded`` instead).
    """
    cfg = QuadratureConfig.from_env() if cfg is None else cfg
    _check_bounds(a, b)

    panels = _Panels(_panel(f, a, b, 0))
    while (worst := panels.next_split(cfg)) is not None:
        mid = 0.5 * (worst.left + worst.right)
        for left, right in ((worst.left, mid), (mid, worst.right)):
            panels.push(_panel(f, left, right, worst.depth + 1))
    return panels.result(a, b, strict)


def integrate_1d_batch(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    a: ArrayLike,
    b: ArrayLike,
    cfg: QuadratureConfig | None = None,
    strict: bool = False,
) -> list[QuadratureResult]:
    """Independent adaptive integrals over [a[k], b[k]], run side by side

    ``f(rows, nodes)`` gets the integral index of every panel and a
    (panels, 15) node array, and returns values of the same shape. Each round
    bisects the worst panel of every unfinished integral in one call, so an
    expensive integrand is evaluated on hundreds of nodes at a time.
    """
    cfg = QuadratureConfig.from_env() if cfg is None else cfg
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    a, b = a.ravel(), b.ravel()
    _check_bounds(a, b)

    rows = np.arange(len(a))
    value, err, carried = _kronrod_rows(f(rows, _nodes(a, b)), a, b)
    sets = [
        _Panels(_Interval(-(err[k] + carried[k]), a[k], b[k], 0, value[k], err[k], carried[k]))
        for k in rows
    ]
    pending = list(rows)
    while pending:
        splits = [(k, worst) for k in pending if (worst := sets[k].next_split(cfg)) is not None]
        if not splits:
            break
        owners = np.repeat([k for k, _ in splits], 2)
        depth = np.repeat([worst.depth + 1 for _, worst in splits], 2)
        mids = [0.5 * (worst.left + worst.right) for _, worst in splits]
        left = np.ravel([(worst.left, mid) for (_, worst), mid in zip(splits, mids)])
        right = np.ravel([(mid, worst.right) for (_, worst), mid in zip(splits, mids)])
        value, err, carried = _kronrod_rows(f(owners, _nodes(left, right)), left, right)
        for i, k in enumerate(owners):
            sets[k].push(
                _Interval(
                    -(err[i] + carried[i]), left[i], right[i], depth[i], value[i], err[i], carried[i]
                )
            )
        pending = [k for k, _ in splits]
    return [s.result(a[k], b[k], strict) for k, s in enumerate(sets)]


def integrate_2d_iterated(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    outer_bounds: tuple[float, float],
    inner_bounds_of: Callable[[np.ndarray], tuple[ArrayLike, ArrayLike]],
    cfg: QuadratureConfig | None = None,
    strict: bool = False,
) -> QuadratureResult:
    """Iterated integral of f(x, y) dy dx

    ``f`` is called with a column of outer nodes and a matching
    (nodes, 15) array of inner nodes; ``inner_bounds_of`` maps an array of
    outer nodes to arrays of inner limits. The inner integrals of one outer
    panel run together at ten times the outer tolerance, and their error
    estimates are integrated alongside the values and added to the outer
    error.
    """
    cfg = QuadratureConfig.from_env() if cfg is None else cfg
    inner_cfg = cfg.tightened(10.0)
    stats = {"cells": 0, "evaluations": 0, "converged": True}

    def outer(xs: np.ndarray):
        lo, hi = (np.broadcast_to(np.asarray(v, dtype=float), xs.shape) for v in inner_bounds_of(xs))
        inner = integrate_1d_batch(
            lambda rows, ys: f(xs[rows][:, None], ys), lo, hi, inner_cfg, strict=strict
        )
        stats["cells"] += sum(r.intervals for r in inner)
        stats["evaluations"] += sum(r.evaluations for r in inner)
        stats["converged"] = stats["converged"] and all(r.converged for r in inner)
        return np.array([r.value for r in inner]), np.array([r.err_est for r in inner])

    result = integrate_1d(outer, outer_bounds[0], outer_bounds[1], cfg, strict=strict)
    result.cells += stats["cells"]
    result.evaluations += stats["evaluations"]
    result.converged = result.converged and stats["converged"]
    return result
