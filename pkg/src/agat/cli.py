"""Batch command-line front end.

Two subcommands:

``agat run``
    Integrate one scenario (built-in by name, or from a config file) and
    write the trajectory as CSV.  Exit codes: 0 success, 1 unknown
    scenario or bad config, 2 model error (coupling singularity, rank
    deficiency, degenerate inertia), 3 non-finite state during
    integration, 4 output write failure.

``agat check``
    Run an acceptance suite and print one pass/fail line per criterion;
    exits nonzero if any criterion fails.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import acceptance, scenarios
from .chains import RankDeficiencyError, SingularMassMatrixError
from .integrate import NonFiniteStateError
from .pendubot import DegenerateInertiaError
from .tracking import CouplingSingularityError

__all__ = ["main", "run_command", "check_command"]


def _pair(text: str) -> tuple:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated values")
    return tuple(parts)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agat",
        description="Pendubot elbow-tracking simulations and checks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate a scenario and write CSV")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="built-in scenario name (s1..s5)")
    src.add_argument("--config", help="path to a scenario config file")
    run.add_argument("--out", required=True, help="output CSV path")
    run.add_argument("--dt", type=float, help="step size override [s]")
    run.add_argument("--t-end", type=float, help="horizon override [s]")
    run.add_argument("--stride", type=int, help="record stride override")
    run.add_argument("--kp", type=float, help="proportional gain override")
    run.add_argument("--fd", type=_pair, metavar="A,B",
                     help="dissipation magnitudes: installs Fd = -diag(A, B)")
    run.add_argument("--p", type=_pair, metavar="C1,C2",
                     help="navigation weights: installs P = diag(C1, C2)")

    check = sub.add_parser("check", help="run an acceptance suite")
    check.add_argument("--suite", default="full",
                       help="suite name: full, fast, or a single criterion "
                            "(default: full)")
    return parser


def run_command(args) -> int:
    if args.scenario is not None:
        registry = scenarios.builtin_scenarios()
        if args.scenario not in registry:
            print(f"error: unknown scenario {args.scenario!r}; "
                  f"available: {', '.join(sorted(registry))}", file=sys.stderr)
            return 1
        scenario = registry[args.scenario]
    else:
        try:
            with open(args.config) as fh:
                scenario = scenarios.parse_scenario(fh.read())
        except (OSError, ValueError) as exc:
            print(f"error: cannot load config: {exc}", file=sys.stderr)
            return 1

    try:
        scenario = scenarios.apply_overrides(
            scenario, dt=args.dt, t_end=args.t_end, stride=args.stride,
            kp=args.kp, fd=args.fd, p=args.p)
    except ValueError as exc:
        print(f"error: bad override: {exc}", file=sys.stderr)
        return 1

    try:
        record = scenarios.run_scenario(scenario)
    except (CouplingSingularityError, RankDeficiencyError,
            SingularMassMatrixError, DegenerateInertiaError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 2
    except NonFiniteStateError as exc:
        print(f"integration error: {exc}", file=sys.stderr)
        return 3

    try:
        scenarios.write_csv(record, args.out)
    except OSError as exc:
        print(f"write error: {exc}", file=sys.stderr)
        return 4
    return 0


def check_command(args) -> int:
    try:
        results = acceptance.run_suite(args.suite)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 1
    for res in results:
        print(res.line)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return 0 if failed == 0 else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return run_command(args)
    return check_command(args)


if __name__ == "__main__":
    sys.exit(main())
