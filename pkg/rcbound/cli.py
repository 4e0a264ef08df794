#!/usr/bin/env python3

from __future__ import annotations

import argparse
import logging
import sys

from rcbound import __version__, config
from rcbound.bounds import evaluate
from rcbound.errors import DomainError
from rcbound.models import BoundRequest, ChannelSpec, EnsembleSize, Method
from rcbound.numerics.quadrature import QuadratureConfig
from rcbound.output import (
    BOUND_FIELDS,
    CHECK_FIELDS,
    FORMATS,
    RATE_FIELDS,
    RowWriter,
    bound_row,
    rate_row,
)
from rcbound.ratesearch import SweepSpec, sweep
from rcbound.validate import SUITES, run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_DOMAIN = 2
EXIT_FLAGGED = 3
EXIT_UNEXPECTED = 100

DEFAULT_TRIALS = 100_000


def setup_logging(level: str) -> logging.Logger:
    logger = logging.getLogger("rcbound")
    handler = logging.StreamHandler(sys.stderr)
    formatter = logging.Formatter(
        "{asctime} | {levelname:<8s} | {name} | {message}", style="{"
    )
    handler.setFormatter(formatter)
    logger.handlers = [handler]
    logger.setLevel(level.upper())
    return logger


def parse_n_grid(text: str) -> list[int]:
    """Comma list whose items are integers or inclusive start:stop:step ranges"""
    grid = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if ":" in item:
                parts = [int(p) for p in item.split(":")]
                if len(parts) == 2:
                    parts.append(1)
                start, stop, step = parts
                if step < 1:
                    raise DomainError("Grid step must be positive in '{}'".format(item))
                grid.extend(range(start, stop + 1, step))
            else:
                grid.append(int(item))
        except ValueError:
            raise DomainError("Could not parse blocklength grid item '{}'".format(item))
    return grid


def _get_error_message(err) -> str:
    return "{} raised: {}".format(type(err).__name__, err)


class RcboundCLI:
    _commands = {
        "bound": "evaluate one error probability bound",
        "sweep": "maximal rates over a grid of blocklengths",
        "validate": "run the closed-form, direct-sum and simulation checks",
    }

    def __init__(self):
        self.logger = logging.getLogger("rcbound")

        # Setup argument parser
        self.parser = argparse.ArgumentParser(
            description="rcbound: exact random-coding error probabilities and rate curves",
        )
        self.parser.add_argument(
            "-v",
            "--version",
            action="store_true",
            default=False,
            help="print version",
        )
        _subparsers = self.parser.add_subparsers()
        for cmd, help_text in self._commands.items():
            sub = _subparsers.add_parser(cmd, help=help_text)
            sub.add_argument(
                "--log-level",
                default=config.LOGLEVEL,
                choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                type=str.upper,
                help="diagnostics on stderr (default from RCBOUND_LOGLEVEL)",
            )
            sub.add_argument("--format", choices=FORMATS, default="csv")
            getattr(self, "_add_{}_arguments".format(cmd))(sub)
            sub.set_defaults(func=getattr(self, cmd))

    @staticmethod
    def _add_channel_arguments(sub):
        sub.add_argument("--channel", required=True, choices=["bsc", "bec", "awgn"])
        sub.add_argument("--delta", type=float, help="BSC crossover or BEC erasure probability")
        sub.add_argument("--gamma", type=float, help="AWGN signal-to-noise ratio (linear)")
        sub.add_argument("--order", type=int, default=4, help="series order for awgn-series")
        sub.add_argument("--rel-tol", type=float)
        sub.add_argument("--abs-tol", type=float)
        sub.add_argument("--max-depth", type=int)
        sub.add_argument("--tail-mass", type=float)
        sub.add_argument(
            "--strict",
            action="store_true",
            default=False,
            help="raise on numerical flags instead of reporting them",
        )

    def _add_bound_arguments(self, sub):
        self._add_channel_arguments(sub)
        sub.add_argument("--n", type=int, required=True, help="blocklength")
        size = sub.add_mutually_exclusive_group(required=True)
        size.add_argument("--log2m", type=float, help="log2 of the codebook size")
        size.add_argument("--rate", type=float, help="rate in bits per channel use")
        sub.add_argument("--method", default="rc", choices=[str(m) for m in Method])

    def _add_sweep_arguments(self, sub):
        self._add_channel_arguments(sub)
        sub.add_argument("--epsilon", type=float, required=True, help="target error probability")
        sub.add_argument("--n-grid", required=True, help="e.g. 8,16,32 or 50:400:50")
        sub.add_argument("--methods", default="rc", help="comma separated, e.g. rc,rcu,dt,converse")
        sub.add_argument("--rate-tol", type=float, default=None)
        sub.add_argument(
            "--integer-m",
            action="store_true",
            default=False,
            help="round the codebook size down to an integer",
        )
        sub.add_argument(
            "--allow-infeasible",
            action="store_true",
            default=False,
            help="rows flagged only no-feasible-rate do not change the exit code",
        )
        sub.add_argument("--jobs", type=int, default=None, help="worker processes")
        sub.add_argument("--out", default=None, help="write rows to this path instead of stdout")

    @staticmethod
    def _add_validate_arguments(sub):
        sub.add_argument("--suite", choices=SUITES, default="all")
        sub.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
        sub.add_argument("--seed", type=int, default=0)

    def parse_args(self, argv=None):
        return self.parser.parse_args(argv)

    @staticmethod
    def channel(args) -> ChannelSpec:
        if args.channel == "awgn":
            if args.gamma is None:
                raise DomainError("--gamma is required for the awgn channel")
            return ChannelSpec.awgn(args.gamma)
        if args.delta is None:
            raise DomainError("--delta is required for the {} channel".format(args.channel))
        return ChannelSpec(args.channel, args.delta)

    @staticmethod
    def quadrature(args) -> QuadratureConfig:
        return QuadratureConfig.from_env(
            rel_tol=args.rel_tol,
            abs_tol=args.abs_tol,
            max_depth=args.max_depth,
            tail_mass=args.tail_mass,
        )

    def run(self, args) -> int:
        setup_logging(args.log_level)
        try:
            return args.func(args)
        except DomainError as err:
            self.logger.error(_get_error_message(err))
            return EXIT_DOMAIN
        except Exception as err:
            self.logger.error(_get_error_message(err))
            return EXIT_UNEXPECTED

    def bound(self, args) -> int:
        channel = self.channel(args)
        if args.rate is not None:
            m = EnsembleSize.from_rate(args.rate, args.n)
        else:
            m = EnsembleSize(args.log2m)
        request = BoundRequest(channel, args.n, m, Method(args.method), args.order, self.quadrature(args))
        result = evaluate(request, strict=args.strict)
        RowWriter(sys.stdout, BOUND_FIELDS, args.format).write(bound_row(request, result))
        return EXIT_FLAGGED if result.flagged else EXIT_OK

    def sweep(self, args) -> int:
        spec = SweepSpec(
            channel=self.channel(args),
            n_grid=parse_n_grid(args.n_grid),
            epsilon_target=args.epsilon,
            methods=[Method(m.strip()) for m in args.methods.split(",") if m.strip()],
            rate_tol=args.rate_tol,
            order=args.order,
            integer_m=args.integer_m,
            cfg=self.quadrature(args),
        )
        rows = sweep(spec, jobs=args.jobs, strict=args.strict)
        if args.out:
            with open(args.out, "w", newline="") as f:
                RowWriter(f, RATE_FIELDS, args.format).write_all(rate_row(r) for r in rows)
        else:
            RowWriter(sys.stdout, RATE_FIELDS, args.format).write_all(rate_row(r) for r in rows)
        ignored = {"no-feasible-rate"} if args.allow_infeasible else set()
        flagged = [r for r in rows if set(r.flags) - ignored]
        return EXIT_FLAGGED if flagged else EXIT_OK

    def validate(self, args) -> int:
        checks = run_suite(args.suite, args.trials, args.seed)
        RowWriter(sys.stdout, CHECK_FIELDS, args.format).write_all(c.as_row() for c in checks)
        return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK_FAILED


def main(argv=None):
    cli = RcboundCLI()
    args = cli.parse_args(argv)
    if args.version:
        print(__version__)
    elif not hasattr(args, "func"):
        cli.parser.print_help()
    else:
        sys.exit(cli.run(args))
    sys.exit(0)


if __name__ == "__main__":
    main()
