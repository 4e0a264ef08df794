"""Maximal rates at a target error probability

Each bound is nondecreasing in M, so the largest feasible log2(M) is found by
bisection over log2(M) between 0 (always feasible) and ``n * max_rate``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
import math

from rcbound import config
from rcbound.bounds import evaluate
from rcbound.errors import DomainError, MonotonicityViolation, NoFeasibleRate
from rcbound.models import (
    BoundRequest,
    BoundResult,
    ChannelSpec,
    EnsembleSize,
    Method,
    check_blocklength,
)
from rcbound.numerics.quadrature import QuadratureConfig

logger = logging.getLogger(__name__)

# relative slack on top of err_est when comparing bisection samples
MONOTONE_REL_SLACK = 1e-9


@dataclass(frozen=True)
class SweepSpec:
    channel: ChannelSpec
    n_grid: tuple[int, ...]
    epsilon_target: float
    methods: tuple[Method, ...] = (Method.RC_EXACT,)
    rate_tol: float | None = None
    order: int = 4
    integer_m: bool = False
    cfg: QuadratureConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        if self.rate_tol is None:
            object.__setattr__(self, "rate_tol", config.RATE_TOL)
        if not 0.0 < self.epsilon_target < 1.0:
            raise DomainError(
                "Target error probability must lie in (0, 1), got {}".format(self.epsilon_target)
            )
        if not self.n_grid:
            raise DomainError("The blocklength grid is empty")
        for n in self.n_grid:
            check_blocklength(n)
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise DomainError("The blocklength grid must be strictly increasing")
        if not self.methods:
            raise DomainError("No methods selected")
        for method in self.methods:
            if not method.supports(self.channel.kind):
                raise DomainError(
                    "Method '{}' is not defined for channel '{}'".format(
                        method, self.channel.kind
                    )
                )
        if not self.rate_tol > 0:
            raise DomainError("rate_tol must be positive, got {}".format(self.rate_tol))

    def cells(self) -> list[tuple[int, Method]]:
        return [(n, method) for n in self.n_grid for method in self.methods]


@dataclass
class RateCurveRow:
    channel: ChannelSpec
    n: int
    epsilon_target: float
    method: Method
    rate: float
    log2_M: float
    achieved_epsilon: float
    err_est: float
    diagnostics: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return len(self.flags) > 0


class _Search:
    """Bound evaluations at one (channel, n, method), remembering every sample"""

    def __init__(self, channel, n, method, order, cfg, strict):
        self.channel = channel
        self.n = n
        self.method = method
        self.order = order
        self.cfg = cfg
        self.strict = strict
        self.samples: list[tuple[float, BoundResult]] = []

    def __call__(self, log2_M: float) -> BoundResult:
        request = BoundRequest(
            self.channel, self.n, EnsembleSize(log2_M), self.method, self.order, self.cfg
        )
        result = evaluate(request, strict=self.strict)
        self.samples.append((log2_M, result))
        logger.debug(
            "{} n={} {}: log2_M={!r} epsilon={!r}".format(
                self.channel, self.n, self.method, log2_M, result.epsilon
            )
        )
        return result

    def monotone(self) -> bool:
        ordered = sorted(self.samples, key=lambda s: s[0])
        for (_, a), (_, b) in zip(ordered, ordered[1:]):
            slack = a.err_est + b.err_est + MONOTONE_REL_SLACK * a.epsilon
            if b.epsilon < a.epsilon - slack:
                return False
        return True


def _integer_log2(log2_M: float) -> float:
    """log2 of the largest integer M <= 2^log2_M"""
    if log2_M > 52:
        return log2_M
    return math.log2(math.floor(2.0**log2_M + 1e-9))


def max_rate(
    channel: ChannelSpec,
    n: int,
    epsilon_target: float,
    method: Method = Method.RC_EXACT,
    rate_tol: float | None = None,
    order: int = 4,
    integer_m: bool = False,
    cfg: QuadratureConfig | None = None,
    strict: bool = False,
) -> RateCurveRow:
    """Largest rate log2(M)/n whose bound stays at or below ``epsilon_target``

    For the converse the answer is an upper bound on the rate of any code.
    """
    check_blocklength(n)
    rate_tol = config.RATE_TOL if rate_tol is None else rate_tol
    if not 0.0 < epsilon_target < 1.0:
        raise DomainError("Target error probability must lie in (0, 1), got {}".format(epsilon_target))
    search = _Search(channel, n, Method(method), order, cfg, strict)
    flags: list[str] = []

    def row(log2_M: float, result: BoundResult, diagnostics: dict) -> RateCurveRow:
        return RateCurveRow(
            channel=channel,
            n=n,
            epsilon_target=epsilon_target,
            method=search.method,
            rate=log2_M / n,
            log2_M=log2_M,
            achieved_epsilon=result.epsilon,
            err_est=result.err_est,
            diagnostics=diagnostics,
            flags=sorted(set(flags + result.flags)),
        )

    smallest = search(1.0)
    if smallest.epsilon > epsilon_target:
        message = "{} n={} {}: even M=2 gives epsilon {!r} above {}".format(
            channel, n, search.method, smallest.epsilon, epsilon_target
        )
        if strict:
            raise NoFeasibleRate(message)
        logger.warning(message)
        flags.append("no-feasible-rate")
        zero = search(0.0)
        return row(0.0, zero, {"witness_log2_M": 1.0, "witness_epsilon": smallest.epsilon})

    hi = n * channel.max_rate
    top = search(hi)
    if top.epsilon <= epsilon_target:
        logger.warning("{} n={} {}: rate cap {} reached".format(channel, n, search.method, channel.max_rate))
        flags.append("cap-reached")
        return row(hi, top, {"witness_log2_M": None, "witness_epsilon": None})

    lo, lo_result, hi_result = 1.0, smallest, top
    while hi - lo > n * rate_tol:
        mid = 0.5 * (lo + hi)
        result = search(mid)
        if result.epsilon <= epsilon_target:
            lo, lo_result = mid, result
        else:
            hi, hi_result = mid, result

    if not search.monotone():
        message = "{} n={} {}: bound samples are not monotone in M".format(
            channel, n, search.method
        )
        if strict:
            raise MonotonicityViolation(message)
        logger.warning(message)
        flags.append("non-monotone")

    diagnostics = {
        "witness_log2_M": hi,
        "witness_epsilon": hi_result.epsilon,
        "evaluations": len(search.samples),
    }
    if integer_m:
        rounded = _integer_log2(lo)
        if rounded != lo:
            lo, lo_result = rounded, search(rounded)
    logger.info(
        "{} n={} {}: rate {!r} at epsilon {!r}".format(
            channel, n, search.method, lo / n, lo_result.epsilon
        )
    )
    return row(lo, lo_result, diagnostics)


def _failed_row(spec: SweepSpec, n: int, method: Method, err: Exception) -> RateCurveRow:
    message = "{} raised: {}".format(type(err).__name__, err)
    logger.warning("{} n={} {}: {}".format(spec.channel, n, method, message))
    return RateCurveRow(
        channel=spec.channel,
        n=n,
        epsilon_target=spec.epsilon_target,
        method=method,
        rate=0.0,
        log2_M=0.0,
        achieved_epsilon=math.nan,
        err_est=math.nan,
        diagnostics={"error": message},
        flags=["failed"],
    )


def _sweep_cell(args: tuple[SweepSpec, int, Method, bool]) -> RateCurveRow:
    spec, n, method, strict = args
    try:
        return max_rate(
            spec.channel,
            n,
            spec.epsilon_target,
            method,
            spec.rate_tol,
            spec.order,
            spec.integer_m,
            spec.cfg,
            strict,
        )
    except Exception as err:
        return _failed_row(spec, n, method, err)


def sweep(spec: SweepSpec, jobs: int | None = None, strict: bool = False) -> list[RateCurveRow]:
    """One row per (n, method), in grid order whatever the number of jobs"""
    jobs = config.JOBS if jobs is None else jobs
    if jobs < 1:
        raise DomainError("jobs must be positive, got {}".format(jobs))
    cells = [(spec, n, method, strict) for n, method in spec.cells()]
    if jobs == 1 or len(cells) == 1:
        return [_sweep_cell(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=min(jobs, len(cells))) as executor:
        return list(executor.map(_sweep_cell, cells))
