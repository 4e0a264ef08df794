from __future__ import annotations


class RcboundError(Exception):
    pass


class DomainError(RcboundError, ValueError):
    """Argument outside the domain of a bound or special function"""

    pass


class ConvergenceError(RcboundError):
    pass


class DepthExceeded(RcboundError):
    pass


class InvariantViolation(RcboundError):
    pass


class SizeExceeded(RcboundError):
    """Input too large for an exponential-complexity oracle"""

    pass


class NoFeasibleRate(RcboundError):
    pass


class MonotonicityViolation(RcboundError):
    pass
