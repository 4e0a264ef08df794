from __future__ import annotations

import logging

from rcbound.bounds.baselines import bec_converse, bec_dt, bec_rcu
from rcbound.bounds.channels import (
    awgn_rc_exact,
    awgn_rc_lower,
    awgn_rc_series,
    awgn_rc_upper,
    bec_rc,
    bsc_rc,
)
from rcbound.errors import DepthExceeded, DomainError
from rcbound.models import BoundRequest, BoundResult, ChannelKind, Method

logger = logging.getLogger(__name__)

_DISCRETE = {
    (ChannelKind.BSC, Method.RC_EXACT): bsc_rc,
    (ChannelKind.BEC, Method.RC_EXACT): bec_rc,
    (ChannelKind.BEC, Method.BEC_RCU): bec_rcu,
    (ChannelKind.BEC, Method.BEC_DT): bec_dt,
    (ChannelKind.BEC, Method.BEC_CONVERSE): bec_converse,
}

_GAUSSIAN = {
    Method.RC_EXACT: awgn_rc_exact,
    Method.GAUSS_UPPER: awgn_rc_upper,
    Method.GAUSS_LOWER: awgn_rc_lower,
}

_STRICT_ERRORS = {
    "depth-exceeded": DepthExceeded,
}


def evaluate(request: BoundRequest, strict: bool = False) -> BoundResult:
    """Compute the bound named by ``request.method`` on ``request.channel``

    Flagged results are returned as-is unless ``strict`` is set, in which case
    flags with a matching exception are raised.
    """
    channel = request.channel
    key = (channel.kind, request.method)
    if key in _DISCRETE:
        result = _DISCRETE[key](channel.param, request.n, request.m)
    elif channel.kind is ChannelKind.AWGN and request.method is Method.GAUSS_SERIES:
        result = awgn_rc_series(
            channel.param, request.n, request.m, request.cfg, request.order, strict=strict
        )
    elif channel.kind is ChannelKind.AWGN and request.method in _GAUSSIAN:
        result = _GAUSSIAN[request.method](
            channel.param, request.n, request.m, request.cfg, strict=strict
        )
    else:
        raise DomainError(
            "Method '{}' is not defined for channel '{}'".format(request.method, channel.kind)
        )

    if result.flags:
        logger.warning(
            "{} n={} log2_M={} flagged: {}".format(
                channel, request.n, request.m.log2_M, ", ".join(result.flags)
            )
        )
        for flag in result.flags:
            if strict and flag in _STRICT_ERRORS:
                raise _STRICT_ERRORS[flag](
                    "{} n={} log2_M={}: {}".format(channel, request.n, request.m.log2_M, flag)
                )
    return result
