"""Cross-checks between the closed forms, the direct sums and simulation

Every check yields a ``Check`` record with the measured discrepancy and the
tolerance it is held to; a suite passes when all of its checks do.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math

import numpy as np

from rcbound.bounds import (
    TieMass,
    awgn_rc_exact,
    awgn_rc_lower,
    awgn_rc_upper,
    bec_rc,
    bsc_rc,
    correct_prob_kernel,
    direct_sum_kernel,
)
from rcbound.errors import DomainError
from rcbound.models import ChannelKind, ChannelSpec, EnsembleSize
from rcbound.numerics.logdomain import NEG_INF
from rcbound.oracle import SimConfig, mc_integral_awgn, rc_direct_bec, rc_direct_bsc, simulate_ensemble

logger = logging.getLogger(__name__)

SUITES = ("kernel", "bsc", "bec", "awgn", "all")

KERNEL_SAMPLES = 10_000
KERNEL_TOL = 1e-10
KERNEL_MAX_LOG2_M = 20
CLOSED_FORM_TOL = 1e-10
SIGMA_TOL = 4.0
INTEGRAL_SIGMA_TOL = 3.0

GRID_N = range(1, 13)
GRID_M = [2**k for k in range(9)]
GRID_DELTA = {
    ChannelKind.BSC: (0.05, 0.1, 0.25, 0.5),
    ChannelKind.BEC: (0.05, 0.1, 0.25, 0.5, 0.9),
}

_DISCRETE_CONFIGS = [(1, 2), (4, 4), (8, 16), (12, 32), (16, 16), (16, 64)]
_GAUSSIAN_CONFIGS = [(2, 4), (4, 8), (8, 16), (8, 64)]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    discrepancy: float
    tolerance: float
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.tolerance

    def as_row(self) -> dict:
        return {
            "suite": self.suite,
            "check": self.name,
            "seed": self.seed,
            "discrepancy": self.discrepancy,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def log_discrepancy(a: float, b: float) -> float:
    """Relative gap between two log-domain values

    This is |e^(a-b) - 1| while the logs are O(1); for large |b| it is the
    relative gap of the logs themselves, the best rounding allows there.
    """
    if a == NEG_INF and b == NEG_INF:
        return 0.0
    if a == NEG_INF or b == NEG_INF:
        return math.inf
    if abs(b) <= 1.0:
        return abs(math.expm1(a - b))
    return abs(a - b) / abs(b)


def simulation_battery() -> list[tuple[ChannelSpec, int, int]]:
    """Fifty (channel, n, M) points with n <= 16 and M <= 64"""
    battery = []
    channels = [ChannelSpec.bsc(d) for d in (0.05, 0.11, 0.2)]
    channels += [ChannelSpec.bec(d) for d in (0.1, 0.3, 0.5)]
    for channel in channels:
        battery += [(channel, n, M) for n, M in _DISCRETE_CONFIGS]
    for gamma in (0.5, 1.0, 2.0):
        battery += [(ChannelSpec.awgn(gamma), n, M) for n, M in _GAUSSIAN_CONFIGS]
    battery += [(ChannelSpec.awgn(1.0), 16, 16), (ChannelSpec.awgn(1.0), 16, 64)]
    return battery


def closed_form(channel: ChannelSpec, n: int, M: int):
    m = EnsembleSize.from_size(M)
    if channel.kind is ChannelKind.BSC:
        return bsc_rc(channel.param, n, m)
    if channel.kind is ChannelKind.BEC:
        return bec_rc(channel.param, n, m)
    return awgn_rc_exact(channel.param, n, m)


def kernel_checks(samples: int = KERNEL_SAMPLES, seed: int = 0) -> list[Check]:
    """Closed-form kernel against the explicit sum over tied competitors"""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    worst = 0.0
    worst_case = None
    for _ in range(samples):
        total = rng.random()
        share = rng.random()
        tie = TieMass.from_probs(total * share, total * (1.0 - share))
        M = int(round(2.0 ** rng.uniform(0.0, KERNEL_MAX_LOG2_M)))
        closed = correct_prob_kernel(tie, EnsembleSize.from_size(M))
        direct = direct_sum_kernel(tie, M)
        gap = log_discrepancy(closed, direct)
        if gap > worst:
            worst, worst_case = gap, (tie.w, tie.z, M)
    logger.info("kernel identity: worst discrepancy {:.3g} at (w, z, M) = {}".format(worst, worst_case))
    return [
        Check("kernel", "closed form vs direct sum ({} triples)".format(samples), worst, KERNEL_TOL, seed)
    ]


def _grid_checks(kind: ChannelKind) -> list[Check]:
    closed, direct = (bsc_rc, rc_direct_bsc) if kind is ChannelKind.BSC else (bec_rc, rc_direct_bec)
    checks = []
    for delta in GRID_DELTA[kind]:
        for n in GRID_N:
            gap = 0.0
            for M in GRID_M:
                a = closed(delta, n, EnsembleSize.from_size(M)).log_epsilon
                gap = max(gap, log_discrepancy(a, direct(delta, n, M)))
            checks.append(
                Check(str(kind), "closed form vs direct sum delta={} n={}".format(delta, n), gap, CLOSED_FORM_TOL)
            )
    return checks


def _simulation_check(suite: str, channel: ChannelSpec, n: int, M: int, cfg: SimConfig) -> Check:
    expected = closed_form(channel, n, M).epsilon
    sim = simulate_ensemble(channel, n, M, cfg)
    sigma = math.sqrt(expected * (1.0 - expected) / cfg.trials)
    gap = abs(sim.epsilon_hat - expected)
    discrepancy = gap / sigma if sigma > 0 else (0.0 if gap == 0 else math.inf)
    logger.info(
        "{} n={} M={}: simulated {!r} vs {!r} ({:.2f} sigma)".format(
            channel, n, M, sim.epsilon_hat, expected, discrepancy
        )
    )
    return Check(
        suite, "simulation {} n={} M={} (sigmas)".format(channel, n, M), discrepancy, SIGMA_TOL, cfg.rng_seed
    )


def discrete_checks(kind: ChannelKind, trials: int | None = None, seed: int = 0) -> list[Check]:
    checks = _grid_checks(kind)
    if trials:
        cfg = SimConfig(trials, seed)
        for channel, n, M in simulation_battery():
            if channel.kind is kind:
                checks.append(_simulation_check(str(kind), channel, n, M, cfg))
    return checks


def awgn_checks(trials: int | None = None, seed: int = 0) -> list[Check]:
    checks = []
    for n in (8, 16):
        for gamma in (0.5, 1.0):
            for log2_M in (2.0, n / 2):
                m = EnsembleSize(log2_M)
                exact = awgn_rc_exact(gamma, n, m)
                lower = awgn_rc_lower(gamma, n, m)
                upper = awgn_rc_upper(gamma, n, m)
                slack = exact.err_est + lower.err_est + upper.err_est
                excess = max(lower.epsilon - exact.epsilon, exact.epsilon - upper.epsilon, 0.0)
                checks.append(
                    Check(
                        "awgn",
                        "sandwich n={} gamma={} log2_M={}".format(n, gamma, log2_M),
                        excess,
                        slack,
                    )
                )
    if trials:
        m = EnsembleSize.from_size(16)
        exact = awgn_rc_exact(1.0, 8, m)
        estimate, stderr = mc_integral_awgn(1.0, 8, m, max(trials, 1000), seed)
        gap = abs(estimate - exact.epsilon)
        checks.append(
            Check(
                "awgn",
                "sampled integral n=8 gamma=1.0 M=16 (sigmas)",
                gap / stderr if stderr > 0 else math.inf,
                INTEGRAL_SIGMA_TOL,
                seed,
            )
        )
        cfg = SimConfig(trials, seed)
        for channel, n, M in simulation_battery():
            if channel.kind is ChannelKind.AWGN:
                checks.append(_simulation_check("awgn", channel, n, M, cfg))
    return checks


def run_suite(suite: str, trials: int | None = None, seed: int = 0) -> list[Check]:
    if suite not in SUITES:
        raise DomainError("Unknown suite '{}'".format(suite))
    checks = []
    if suite in ("kernel", "all"):
        checks += kernel_checks(seed=seed)
    if suite in ("bsc", "all"):
        checks += discrete_checks(ChannelKind.BSC, trials, seed)
    if suite in ("bec", "all"):
        checks += discrete_checks(ChannelKind.BEC, trials, seed)
    if suite in ("awgn", "all"):
        checks += awgn_checks(trials, seed)
    failed = [c for c in checks if not c.passed]
    for check in failed:
        logger.warning("{} check failed: {} ({:.3g} > {:.3g})".format(
            check.suite, check.name, check.discrepancy, check.tolerance
        ))
    return checks
