"""Default tolerances and their environment overrides

Every default can be overridden with an environment variable carrying the
``RCBOUND_`` prefix, e.g. ``RCBOUND_REL_TOL=1e-7``. Command-line flags take
precedence over the environment.
"""

from __future__ import annotations

import os

ENV_PREFIX = "RCBOUND_"

REL_TOL: float
ABS_TOL: float
MAX_DEPTH: int
TAIL_MASS: float
RATE_TOL: float
JOBS: int
LOGLEVEL: str


def _env(name: str, default, cast=float):
    value = os.environ.get(ENV_PREFIX + name)
    if value is None or value == "":
        return default
    try:
        return cast(value)
    except ValueError:
        raise ValueError(
            "Could not parse {}{}={!r} as {}".format(
                ENV_PREFIX, name, value, cast.__name__
            )
        )


def reload() -> None:
    """Read the defaults from the environment"""
    global REL_TOL, ABS_TOL, MAX_DEPTH, TAIL_MASS, RATE_TOL, JOBS, LOGLEVEL
    REL_TOL = _env("REL_TOL", 1e-8)
    ABS_TOL = _env("ABS_TOL", 1e-15)
    MAX_DEPTH = _env("MAX_DEPTH", 40, int)
    TAIL_MASS = _env("TAIL_MASS", 1e-12)
    RATE_TOL = _env("RATE_TOL", 1e-6)
    JOBS = _env("JOBS", os.cpu_count() or 1, int)
    LOGLEVEL = _env("LOGLEVEL", "WARNING", str).upper()


reload()
