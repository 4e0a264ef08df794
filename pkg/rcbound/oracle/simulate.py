"""Monte Carlo estimates from actual random codebooks

Every trial draws a fresh codebook, sends codeword 0, and decodes by minimum
distance with ties broken uniformly among the minimizers. Random numbers come
from numpy's counter-based Philox generator; shard streams are derived with
``SeedSequence.spawn`` so results depend only on the seed and shard count.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math

import numpy as np

from rcbound.bounds.channels import exact_bracket
from rcbound.errors import DomainError, SizeExceeded
from rcbound.models import ChannelKind, ChannelSpec, EnsembleSize, check_blocklength
from rcbound.numerics.special import NoncentralChi2Params, ncx2_log_cdf_sf

logger = logging.getLogger(__name__)

MAX_N = 24
MAX_M = 4096
MIN_INTEGRAL_SAMPLES = 1000
# samples per vectorized mixture evaluation
INTEGRAL_CHUNK = 1 << 12
# symbols held in memory per batch of trials
BATCH_SYMBOLS = 1 << 22


@dataclass(frozen=True)
class SimConfig:
    trials: int
    rng_seed: int = 0
    shards: int = 1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError("trials must be a positive integer, got {}".format(self.trials))
        if not 0 <= self.rng_seed < 2**64:
            raise DomainError("rng_seed must be a 64-bit unsigned integer, got {}".format(self.rng_seed))
        if int(self.shards) != self.shards or self.shards < 1:
            raise DomainError("shards must be a positive integer, got {}".format(self.shards))

    @property
    def tie_breaking(self) -> str:
        return "uniform"

    def shard_trials(self) -> list[int]:
        base, extra = divmod(self.trials, self.shards)
        return [base + (1 if k < extra else 0) for k in range(self.shards)]


@dataclass(frozen=True)
class SimResult:
    errors_observed: int
    trials: int

    @property
    def epsilon_hat(self) -> float:
        return self.errors_observed / self.trials

    @property
    def stderr(self) -> float:
        p = self.epsilon_hat
        return math.sqrt(p * (1.0 - p) / self.trials)


def _generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _distances(
    channel: ChannelSpec, n: int, M: int, batch: int, rng: np.random.Generator
) -> np.ndarray:
    """(batch, M) distances from the channel output to every codeword"""
    if channel.kind is ChannelKind.AWGN:
        codebook = rng.standard_normal((batch, M, n))
        noise = rng.standard_normal((batch, n)) / math.sqrt(channel.param)
        received = codebook[:, 0, :] + noise
        return np.sum((codebook - received[:, None, :]) ** 2, axis=2)

    codebook = rng.integers(0, 2, size=(batch, M, n), dtype=np.int8)
    hits = rng.random((batch, n)) < channel.param
    if channel.kind is ChannelKind.BSC:
        received = codebook[:, 0, :] ^ hits.astype(np.int8)
        return np.sum(codebook != received[:, None, :], axis=2)
    # erased symbols count against every codeword alike, so only survivors matter
    mismatch = (codebook != codebook[:, :1, :]) & ~hits[:, None, :]
    return np.sum(mismatch, axis=2)


def _decode_errors(distances: np.ndarray, rng: np.random.Generator) -> int:
    minimizers = distances == distances.min(axis=1, keepdims=True)
    ties = minimizers.sum(axis=1)
    pick = rng.integers(0, ties)
    correct = minimizers[:, 0] & (pick == 0)
    return int(distances.shape[0] - correct.sum())


def _run_shard(
    channel: ChannelSpec, n: int, M: int, trials: int, rng: np.random.Generator
) -> int:
    batch = max(1, BATCH_SYMBOLS // (M * n))
    errors = 0
    done = 0
    while done < trials:
        size = min(batch, trials - done)
        errors += _decode_errors(_distances(channel, n, M, size, rng), rng)
        done += size
    return errors


def simulate_ensemble(channel: ChannelSpec, n: int, M: int, cfg: SimConfig) -> SimResult:
    check_blocklength(n)
    if n > MAX_N or int(M) != M or not 1 <= M <= MAX_M:
        raise SizeExceeded(
            "Simulation limited to n <= {} and integer 1 <= M <= {}, got n={} M={}".format(
                MAX_N, MAX_M, n, M
            )
        )
    M = int(M)
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.shards)
    errors = 0
    for seed, trials in zip(seeds, cfg.shard_trials()):
        if trials:
            errors += _run_shard(channel, n, M, trials, _generator(seed))
    result = SimResult(errors, cfg.trials)
    logger.debug(
        "simulate_ensemble {} n={} M={}: {} errors in {} trials".format(
            channel, n, M, errors, cfg.trials
        )
    )
    return result


def mc_integral_awgn(
    gamma: float, n: int, m: EnsembleSize, samples: int, seed: int = 0
) -> tuple[float, float]:
    """(estimate, stderr) of the Gaussian-channel integral by sampling its densities"""
    ChannelSpec.awgn(gamma)
    check_blocklength(n)
    if int(samples) != samples or samples < MIN_INTEGRAL_SAMPLES:
        raise DomainError(
            "mc_integral_awgn needs at least {} samples, got {}".format(
                MIN_INTEGRAL_SAMPLES, samples
            )
        )
    if m.log2_M == 0:
        return 0.0, 0.0
    rng = _generator(np.random.SeedSequence(seed))
    noise_energy = rng.gamma(0.5 * n, 2.0 / gamma, size=int(samples))
    received_energy = rng.noncentral_chisquare(n, noise_energy)
    bracket = exact_bracket(m)
    values = np.empty(int(samples))
    for start in range(0, int(samples), INTEGRAL_CHUNK):
        chunk = slice(start, start + INTEGRAL_CHUNK)
        log_cdf, log_sf = ncx2_log_cdf_sf(
            noise_energy[chunk], NoncentralChi2Params(n, received_energy[chunk])
        )
        values[chunk] = bracket(np.asarray(log_cdf), np.asarray(log_sf))
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(samples))
