#!/usr/bin/env python3

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np
from numpy.typing import ArrayLike

from rcbound.errors import DomainError
from rcbound.numerics.logdomain import LN2, NEG_INF
from rcbound.numerics.quadrature import QuadratureConfig

# Beyond this M - 1 and M agree to within rounding
EXACT_MINUS_ONE_LOG2 = 60.0


def check_blocklength(n: int):
    if int(n) != n or n < 1:
        raise DomainError("Blocklength must be a positive integer, got {}".format(n))


class ChannelKind(Enum):
    BSC = "bsc"
    BEC = "bec"
    AWGN = "awgn"

    def __str__(self) -> str:
        return self.value

    @property
    def param_name(self) -> str:
        return "gamma" if self is ChannelKind.AWGN else "delta"


@dataclass(frozen=True)
class ChannelSpec:
    """Tagged channel: BSC(delta), BEC(delta) or AWGN(gamma, linear SNR)"""

    kind: ChannelKind
    param: float

    def __post_init__(self):
        if not isinstance(self.kind, ChannelKind):
            object.__setattr__(self, "kind", ChannelKind(str(self.kind).lower()))
        value = float(self.param)
        object.__setattr__(self, "param", value)
        if self.kind is ChannelKind.BSC and not 0.0 <= value <= 0.5:
            raise DomainError("BSC crossover must lie in [0, 0.5], got {}".format(value))
        if self.kind is ChannelKind.BEC and not 0.0 <= value <= 1.0:
            raise DomainError("BEC erasure probability must lie in [0, 1], got {}".format(value))
        if self.kind is ChannelKind.AWGN and not (value > 0 and math.isfinite(value)):
            raise DomainError("AWGN SNR must be positive and finite, got {}".format(value))

    def __str__(self) -> str:
        return "{}({}={})".format(self.kind, self.kind.param_name, self.param)

    @classmethod
    def bsc(cls, delta: float) -> ChannelSpec:
        return cls(ChannelKind.BSC, delta)

    @classmethod
    def bec(cls, delta: float) -> ChannelSpec:
        return cls(ChannelKind.BEC, delta)

    @classmethod
    def awgn(cls, gamma: float) -> ChannelSpec:
        return cls(ChannelKind.AWGN, gamma)

    @property
    def is_discrete(self) -> bool:
        return self.kind is not ChannelKind.AWGN

    @property
    def max_rate(self) -> float:
        """Ceiling for rate searches, in bits per channel use"""
        return 1.0 if self.is_discrete else 2.0


@dataclass(frozen=True)
class EnsembleSize:
    """Codebook size M carried as log2(M) so that M = 2^(nR) never overflows"""

    log2_M: float

    def __post_init__(self):
        value = float(self.log2_M)
        object.__setattr__(self, "log2_M", value)
        if not (value >= 0 and math.isfinite(value)):
            raise DomainError("log2_M must be finite and >= 0, got {}".format(value))

    @classmethod
    def from_size(cls, size: float) -> EnsembleSize:
        if not size >= 1:
            raise DomainError("Codebook size must be >= 1, got {}".format(size))
        return cls(math.log2(size))

    @classmethod
    def from_rate(cls, rate: float, n: int) -> EnsembleSize:
        return cls(rate * n)

    @property
    def log_m(self) -> float:
        return self.log2_M * LN2

    @property
    def size(self) -> float:
        try:
            return 2.0**self.log2_M
        except OverflowError:
            return math.inf

    @property
    def log_m_minus_one(self) -> float:
        if self.log2_M == 0:
            return NEG_INF
        if self.log2_M > EXACT_MINUS_ONE_LOG2:
            return self.log_m
        return math.log(math.expm1(self.log_m))

    def integer_size(self) -> int:
        """M as an integer; only for sizes that are exact integers"""
        if self.log2_M > 53:
            raise DomainError("M = 2^{} is too large for an integer oracle".format(self.log2_M))
        size = round(2.0**self.log2_M)
        if abs(math.log2(size) - self.log2_M) > 1e-12:
            raise DomainError("M = 2^{} is not an integer".format(self.log2_M))
        return size

    def _scale(self, log_factor: float, a: ArrayLike):
        a = np.asarray(a, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = np.sign(a) * np.exp(log_factor + np.log(np.abs(a)))
        out = np.where(a == 0, 0.0, out)
        return out[()]

    def times(self, a: ArrayLike):
        """M * a without forming M"""
        return self._scale(self.log_m, a)

    def minus_one_times(self, a: ArrayLike):
        """(M - 1) * a without forming M"""
        if self.log2_M == 0:
            return np.zeros(np.shape(a))[()]
        return self._scale(self.log_m_minus_one, a)


class Method(Enum):
    RC_EXACT = "rc"
    GAUSS_UPPER = "awgn-upper"
    GAUSS_LOWER = "awgn-lower"
    GAUSS_SERIES = "awgn-series"
    BEC_RCU = "rcu"
    BEC_DT = "dt"
    BEC_CONVERSE = "converse"

    def __str__(self) -> str:
        return self.value

    @property
    def is_converse(self) -> bool:
        return self is Method.BEC_CONVERSE

    @property
    def is_baseline(self) -> bool:
        return self in (Method.BEC_RCU, Method.BEC_DT, Method.BEC_CONVERSE)

    def supports(self, kind: ChannelKind) -> bool:
        if self is Method.RC_EXACT:
            return True
        if self.is_baseline:
            return kind is ChannelKind.BEC
        return kind is ChannelKind.AWGN


@dataclass
class BoundResult:
    log_epsilon: float
    err_est: float
    method: Method
    diagnostics: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    @property
    def epsilon(self) -> float:
        return math.exp(self.log_epsilon)

    @property
    def flagged(self) -> bool:
        return len(self.flags) > 0


@dataclass(frozen=True)
class BoundRequest:
    channel: ChannelSpec
    n: int
    m: EnsembleSize
    method: Method = Method.RC_EXACT
    order: int = 4
    cfg: QuadratureConfig | None = None

    def __post_init__(self):
        check_blocklength(self.n)
        if not self.method.supports(self.channel.kind):
            raise DomainError(
                "Method '{}' is not defined for channel '{}'".format(
                    self.method, self.channel.kind
                )
            )
        if self.order < 1:
            raise DomainError("Series order must be >= 1, got {}".format(self.order))
