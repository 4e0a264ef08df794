"""Row schemas and writers for CSV and JSON-lines output

Inputs come first in every row, then results. Floats are written with
``repr`` so that the same flags and seed always produce the same bytes.
"""

from __future__ import annotations

from enum import Enum
from typing import IO, TypedDict
import csv
import json
import math

import numpy as np

from rcbound.errors import DomainError
from rcbound.models import BoundRequest, BoundResult
from rcbound.ratesearch import RateCurveRow

SCHEMA_VERSION = 1
FORMATS = ("csv", "json")


class BoundRow(TypedDict):
    channel: str
    param: float
    n: int
    log2_M: float
    method: str
    epsilon: float
    log_epsilon: float
    err_est: float
    flags: str


class RateRow(TypedDict):
    channel: str
    param: float
    n: int
    epsilon_target: float
    method: str
    rate: float
    log2_M: float
    achieved_epsilon: float
    err_est: float
    flags: str


class CheckRow(TypedDict):
    suite: str
    check: str
    seed: int | None
    discrepancy: float
    tolerance: float
    passed: bool


BOUND_FIELDS = list(BoundRow.__annotations__)
RATE_FIELDS = list(RateRow.__annotations__)
CHECK_FIELDS = list(CheckRow.__annotations__)


def bound_row(request: BoundRequest, result: BoundResult) -> BoundRow:
    return BoundRow(
        channel=str(request.channel.kind),
        param=request.channel.param,
        n=request.n,
        log2_M=request.m.log2_M,
        method=str(result.method),
        epsilon=result.epsilon,
        log_epsilon=result.log_epsilon,
        err_est=result.err_est,
        flags=";".join(result.flags),
    )


def rate_row(row: RateCurveRow) -> RateRow:
    return RateRow(
        channel=str(row.channel.kind),
        param=row.channel.param,
        n=row.n,
        epsilon_target=row.epsilon_target,
        method=str(row.method),
        rate=row.rate,
        log2_M=row.log2_M,
        achieved_epsilon=row.achieved_epsilon,
        err_est=row.err_est,
        flags=";".join(row.flags),
    )


class RowEncoder(json.JSONEncoder):
    """JSON encoder for enums and numpy scalars"""

    def default(self, obj):
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, np.generic):
            return obj.item()
        # anything else is a bug in the row builders
        return super().default(obj)


def _csv_value(value):
    if isinstance(value, float):
        return repr(value)
    return value


def _json_value(value):
    # JSON has no inf or nan
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


class RowWriter:
    """Writes rows one at a time and flushes, so partial output survives a failure"""

    def __init__(self, stream: IO[str], fields: list[str], fmt: str = "csv"):
        if fmt not in FORMATS:
            raise DomainError("Unknown output format '{}'".format(fmt))
        self.stream = stream
        self.fields = fields
        self.fmt = fmt
        self._csv = None
        if fmt == "csv":
            self._csv = csv.DictWriter(
                stream, fieldnames=fields, quoting=csv.QUOTE_MINIMAL, lineterminator="\n"
            )
            self._csv.writeheader()

    def write(self, row: dict):
        if self._csv is not None:
            self._csv.writerow({k: _csv_value(row[k]) for k in self.fields})
        else:
            record = {"schema_version": SCHEMA_VERSION}
            record.update({k: _json_value(row[k]) for k in self.fields})
            self.stream.write(json.dumps(record, cls=RowEncoder) + "\n")
        self.stream.flush()

    def write_all(self, rows):
        for row in rows:
            self.write(row)
