"""Command-line entry point.

Subcommands:
  run <config>             execute an experiment config
  verify <selector>        run a property suite (gradients|mse-lemmas|rates|prox|all)
  ingest <csv> [...]       parse a returns CSV and re-emit it cleaned
  schedule <preset> [...]  print the resolved (tau, B, S) triples of a preset

Exit codes: 0 success, 1 config error, 2 run failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import math
import sys

from .datasets import ingest_returns_csv, write_returns_csv
from .harness import ConfigError, load_config, run_experiment
from .model import FULL, DerivedConstants
from .verify import SELECTORS, run_checks
from . import schedules

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUN = 2
EXIT_VERIFY = 3

SCHEDULE_PRESETS = (
    "constant-expectation",
    "adaptive-expectation",
    "constant-finite",
    "adaptive-finite",
    "adaptive-sqrt-finite",
    "gradient-dominant-expectation",
    "gradient-dominant-finite",
    "strongly-convex-expectation",
    "strongly-convex-finite",
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="civr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a flat key=value config file")

    p_verify = sub.add_parser("verify", help="run a property suite")
    p_verify.add_argument("selector", choices=SELECTORS)

    p_ingest = sub.add_parser("ingest", help="parse a returns CSV")
    p_ingest.add_argument("csv")
    p_ingest.add_argument("--take-last", type=int, default=0)
    p_ingest.add_argument("--scale", choices=("percent", "raw"), default="percent")
    p_ingest.add_argument("-o", "--output", default="")

    p_sched = sub.add_parser("schedule", help="print a resolved schedule")
    p_sched.add_argument("preset", choices=SCHEDULE_PRESETS)
    p_sched.add_argument("--eta", type=float, required=True)
    p_sched.add_argument("--epochs", type=int, default=0)
    p_sched.add_argument("--n", type=int, default=0)
    p_sched.add_argument("--eps", type=float, default=0.0)
    p_sched.add_argument("--sigma0-sq", type=float, default=0.0)
    p_sched.add_argument("--a", type=float, default=1.0)
    p_sched.add_argument("--b", type=float, default=0.0)
    p_sched.add_argument("--nu", type=float, default=0.0)
    p_sched.add_argument("--mu", type=float, default=0.0)
    return parser


def _resolve_schedule(args) -> schedules.Schedule:
    # Builders only read sigma_0_sq from the derived constants when eta is
    # given explicitly, so the rest can be zeros here.
    consts = DerivedConstants(0.0, 0.0, args.sigma0_sq, math.inf, math.inf)
    preset = args.preset
    if preset == "constant-expectation":
        _require(args.eps > 0, "--eps required")
        return schedules.constant_expectation(args.eps, consts, eta=args.eta)
    if preset == "adaptive-expectation":
        _require(args.epochs > 0, "--epochs required")
        return schedules.adaptive_expectation(args.a, args.b, args.epochs, consts, eta=args.eta)
    if preset == "constant-finite":
        _require(args.n > 0 and args.epochs > 0, "--n and --epochs required")
        return schedules.constant_finite(args.n, args.epochs, eta=args.eta)
    if preset == "adaptive-finite":
        _require(args.n > 0 and args.epochs > 0, "--n and --epochs required")
        return schedules.adaptive_finite(args.n, args.a, args.b, args.epochs, eta=args.eta)
    if preset == "adaptive-sqrt-finite":
        _require(args.n > 0 and args.epochs > 0, "--n and --epochs required")
        return schedules.adaptive_sqrt_finite(args.n, args.epochs, eta=args.eta)
    if preset == "gradient-dominant-expectation":
        _require(args.eps > 0 and args.nu > 0, "--eps and --nu required")
        return schedules.gradient_dominant_expectation(args.eps, args.nu, consts, eta=args.eta)
    if preset == "gradient-dominant-finite":
        _require(args.n > 0 and args.nu > 0, "--n and --nu required")
        return schedules.gradient_dominant_finite(args.n, args.nu, consts, eta=args.eta)
    if preset == "strongly-convex-expectation":
        _require(args.eps > 0 and args.mu > 0, "--eps and --mu required")
        return schedules.strongly_convex_expectation(args.eps, args.mu, consts, eta=args.eta)
    _require(args.n > 0 and args.mu > 0, "--n and --mu required")
    return schedules.strongly_convex_finite(args.n, args.mu, consts, eta=args.eta)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            try:
                cfg = load_config(args.config)
            except (ConfigError, OSError, ValueError) as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            try:
                summary = run_experiment(cfg)
            except ConfigError as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            except Exception as exc:
                print(f"run failure: {exc}", file=sys.stderr)
                return EXIT_RUN
            print(f"wrote {summary['runs']} run trace(s) and summary to {cfg.outdir}")
            return EXIT_OK

        if args.command == "verify":
            results = run_checks(args.selector)
            for res in results:
                print(res.line())
            failed = [r for r in results if not r.passed]
            print(f"{len(results) - len(failed)}/{len(results)} checks passed")
            return EXIT_VERIFY if failed else EXIT_OK

        if args.command == "ingest":
            try:
                ds = ingest_returns_csv(args.csv, take_last=args.take_last or None, scale=args.scale)
            except (OSError, ValueError) as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            print(f"{ds.n_periods} rows x {ds.n_assets} assets ({ds.provenance})")
            if args.output:
                write_returns_csv(ds, args.output)
                print(f"wrote {args.output}")
            return EXIT_OK

        # schedule
        try:
            sched = _resolve_schedule(args)
        except (ConfigError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"kind={sched.kind} eta={sched.eta} epochs={sched.T} slots={sched.total_slots}")
        print("t,tau,B,S")
        for t, plan in enumerate(sched.epochs, start=1):
            b = "full" if plan.B is FULL else str(plan.B)
            print(f"{t},{plan.tau},{b},{plan.S}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
