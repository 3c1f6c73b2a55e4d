"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 simulation aborted on a non-finite state.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys

from .analytic import SlvpSolution, fd_table, write_fd_csv, write_slvp_csv
from .config import ConfigError, config_from_dict, load_config, parse_params
from .core import PRESETS, kmh_to_ms
from .phase import phase_map
from .replicate import replicate_fig
from .simulator import SimulationAbort, run, write_trajectory_csv
from .verify import SUITES, THREADS_ENV, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _add_params(sp):
    sp.add_argument("--preset", default="paper-5.2", choices=sorted(PRESETS), help="built-in parameter set")
    sp.add_argument("--params", metavar="JSON", help="JSON file with parameter overrides")
    sp.add_argument("--units", default="m/s", choices=["m/s", "km/h"], help="units of speed arguments")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mppcf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run a scenario and write its trajectory CSV")
    sp.add_argument("--config", metavar="JSON", help="scenario file (defaults to the stationary-leader run)")
    sp.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    sp.add_argument("--report", metavar="JSON", help="also write the monitor report here")

    sp = sub.add_parser("phase-map", help="classify a grid of the speed-spacing plane")
    _add_params(sp)
    sp.add_argument("--v-leader", type=float, default=0.0)
    sp.add_argument("--v-range", type=float, nargs=2, default=[0.0, 120.0 / 3.6], metavar=("LO", "HI"))
    sp.add_argument("--z-range", type=float, nargs=2, default=[0.0, 400.0], metavar=("LO", "HI"))
    sp.add_argument("--nv", type=int, default=101)
    sp.add_argument("--nz", type=int, default=101)
    sp.add_argument("--out", default="-")

    sp = sub.add_parser("fd", help="tabulate the fundamental diagram")
    _add_params(sp)
    sp.add_argument("--points", type=int, default=200)
    sp.add_argument("--out", default="-")

    sp = sub.add_parser("slvp", help="tabulate the stationary-leader braking profile")
    _add_params(sp)
    sp.add_argument("--v0", type=float, default=30.0, help="speed at comfort-braking entry")
    sp.add_argument("--points", type=int, default=101)
    sp.add_argument("--out", default="-")

    sp = sub.add_parser("verify", help="run a property suite")
    sp.add_argument("--suite", required=True, choices=sorted(SUITES))
    sp.add_argument("--cases", type=int, help="number of random cases (suite default otherwise)")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    sp.add_argument("--out", default="-", help="JSON report path")

    sp = sub.add_parser("replicate-fig", help="write the six-panel stationary-leader series")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--config", metavar="JSON")
    return parser


def parse_args(argv):
    """Parse ``argv`` into a namespace; usage errors exit with status 2."""
    args = build_parser().parse_args(argv)
    for name in ("nv", "nz", "points", "cases", "threads"):
        value = getattr(args, name, None)
        if value is not None and value < (0 if name == "cases" else 1):
            raise UsageError(f"--{name} must be positive")
    return args


@contextlib.contextmanager
def _output(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _params(args):
    doc = {}
    if args.params:
        with open(args.params) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.params}: malformed JSON ({exc})") from exc
    return parse_params(doc, "m/s", PRESETS[args.preset])


def _speed(x, args):
    return kmh_to_ms(x) if args.units == "km/h" else x


def _dispatch(args) -> int:
    if args.command == "simulate":
        cfg = load_config(args.config) if args.config else config_from_dict({})
        traj, report = run(cfg)
        with _output(args.out) as fh:
            write_trajectory_csv(traj, fh)
        if args.report:
            with open(args.report, "w") as fh:
                json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        return EXIT_OK

    if args.command == "phase-map":
        p = _params(args)
        v_range = [_speed(x, args) for x in args.v_range]
        grid = phase_map(v_range, args.z_range, args.nv, args.nz, _speed(args.v_leader, args), p)
        with _output(args.out) as fh:
            grid.write_csv(fh)
        return EXIT_OK

    if args.command == "fd":
        with _output(args.out) as fh:
            write_fd_csv(fd_table(_params(args), args.points), fh)
        return EXIT_OK

    if args.command == "slvp":
        sol = SlvpSolution(_speed(args.v0, args), _params(args))
        with _output(args.out) as fh:
            write_slvp_csv(sol, fh, args.points)
        return EXIT_OK

    if args.command == "verify":
        report = run_suite(args.suite, args.cases, args.seed, args.threads)
        with _output(args.out) as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return EXIT_OK if report["passed"] else EXIT_FAIL

    if args.command == "replicate-fig":
        cfg = load_config(args.config) if args.config else None
        summary = replicate_fig(args.out, cfg)
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    raise UsageError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"mppcf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except SimulationAbort as exc:
        print(f"mppcf: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ConfigError, UsageError, ValueError, OSError) as exc:
        print(f"mppcf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
