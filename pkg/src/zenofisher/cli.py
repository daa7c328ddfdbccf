"""
Command-line entry point.

    zenofisher surface  --config cfg.json --out surface.csv
    zenofisher scaling  --calibration mhz --out scaling.csv
    zenofisher crb      --seed 7 --threads 2 --out crb.csv
    zenofisher ld       --out ld.csv
    zenofisher validate --criteria 1,2,3

Without ``--out`` the CSV goes to standard output. Summaries go to
standard error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import CALIBRATIONS, ExperimentConfig
from .csvio import render_csv
from .errors import ZenoError
from .experiments import Table, run_crb, run_ld, run_scaling, run_surface, base_metadata


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment configuration")
    p.add_argument("--out", type=Path, help="output CSV path (default: stdout)")
    p.add_argument("--seed", type=int, help="64-bit master seed, overrides the config")
    p.add_argument("--threads", type=int, default=1, help="worker threads for Monte Carlo (default 1)")
    p.add_argument("--calibration", choices=sorted(CALIBRATIONS), help="set omega to 2 pi x 5 kHz or 5 MHz")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zenofisher", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"zenofisher {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("surface", "P* and normalised FIM eigenvalue over a (mu1, mu2) grid"),
        ("scaling", "Fisher information for mu2 versus m and N, with linear fits"),
        ("crb", "batch MLE of mu2 against the Cramer-Rao bound"),
        ("ld", "large-deviation convergence of the empirical rate"),
        ("validate", "run the validation suites"),
    ):
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        if name == "validate":
            p.add_argument("--criteria", help="comma-separated criterion numbers (default: all)")
    return parser


def load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig.from_dict()
    if args.calibration:
        config = config.with_calibration(args.calibration)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _emit(table: Table, out: Path | None) -> None:
    text = render_csv(table.header, table.rows, table.metadata)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
    if table.companion is not None:
        extra = render_csv(table.companion.header, table.companion.rows, table.companion.metadata)
        if out is None:
            sys.stdout.write("\n" + extra)
        else:
            path = out.with_name(out.stem + ".fits" + (out.suffix or ".csv"))
            path.write_text(extra)
            print(f"fits written to {path}", file=sys.stderr)


def _validate(args, config: ExperimentConfig) -> Table:
    from . import validation

    criteria = None
    if args.criteria:
        try:
            criteria = [int(c) for c in args.criteria.split(",")]
        except ValueError as exc:
            raise SystemExit(f"invalid --criteria: {args.criteria}") from exc
        unknown = set(criteria) - set(validation.SUITES)
        if unknown:
            raise SystemExit(f"unknown criteria: {sorted(unknown)}")
    overrides = {
        8: lambda: validation.check_monte_carlo(seed=config.seed, threads=args.threads),
        9: lambda: validation.check_crb(seed=config.seed, threads=args.threads),
    }
    checks = []
    for c in criteria or sorted(validation.SUITES):
        results = overrides.get(c, validation.SUITES[c])()
        for r in results:
            print(r.line(), file=sys.stderr, flush=True)
        checks.extend(results)
    rows = [[c.criterion, c.name, c.value, c.threshold, c.passed, c.detail] for c in checks]
    meta = base_metadata(config, "validate")
    meta["passed"] = sum(c.passed for c in checks)
    meta["failed"] = sum(not c.passed for c in checks)
    return Table(["criterion", "check", "value", "threshold", "passed", "detail"], rows, meta)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        config = load_config(args)
        if args.command == "surface":
            table = run_surface(config)
        elif args.command == "scaling":
            table = run_scaling(config, threads=args.threads)
        elif args.command == "crb":
            table = run_crb(config, threads=args.threads)
            md = table.metadata
            print(f"Var/CRB = {md['saturation_ratio']:.4g} +- {md['saturation_ratio_stderr']:.2g}", file=sys.stderr)
        elif args.command == "ld":
            table = run_ld(config, threads=args.threads)
        else:
            table = _validate(args, config)
        _emit(table, args.out)
    except ZenoError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate" and table.metadata["failed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
