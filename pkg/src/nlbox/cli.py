"""Command-line front end.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 convergence
error, 5 I/O error. The output directory may be overridden with the
NLBOX_OUT_DIR environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import (
    ConvergenceError,
    NlboxError,
    ScenarioParseError,
    ValidationError,
)
from .scenario import parse_scenario, parse_stats, run_scenario, write_report
from .witness import fit_linear_map, is_linear_explainable, sampled_tolerance

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_CONVERGENCE = 4
EXIT_IO = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlbox",
        description="Scenario-driven nonlinear-box experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_seed=True):
        p.add_argument("--format", choices=("csv", "json"), default="json")
        p.add_argument("--out", type=Path, default=None, help="report file path")
        p.add_argument("--tol", type=float, default=None)
        if with_seed:
            p.add_argument("--seed", type=int, default=None)

    for name in ("run", "verify", "signaling", "bb84"):
        p = sub.add_parser(name)
        p.add_argument("scenario", type=Path)
        add_common(p)

    p = sub.add_parser("witness")
    p.add_argument("stats", type=Path)
    add_common(p, with_seed=False)

    p = sub.add_parser("batch")
    p.add_argument("directory", type=Path)
    add_common(p)
    return parser


_FORCED_PROTOCOL = {"verify": "verification", "signaling": "signaling", "bb84": "bb84"}


def _out_path(args, default_name: str) -> Path:
    out = args.out
    if out is None:
        out = Path(default_name)
    override = os.environ.get("NLBOX_OUT_DIR")
    if override:
        out = Path(override) / out.name
    return out


def _run_one(path: Path, args, forced_protocol=None) -> None:
    config = parse_scenario(path)
    if forced_protocol and config.protocol != forced_protocol:
        raise ValidationError(
            f"{path}: scenario protocol is {config.protocol!r}, expected {forced_protocol!r}")
    report = run_scenario(config, seed=args.seed, tol=args.tol)
    ext = "csv" if args.format == "csv" else "json"
    out = _out_path(args, f"{path.stem}.report.{ext}")
    write_report(report, out, args.format)
    print(f"{path}: {config.protocol} report written to {out}")


def _run_witness(args) -> None:
    table = parse_stats(args.stats)
    fit = fit_linear_map(table)
    tol = args.tol
    if tol is None:
        tol = sampled_tolerance(table) if table.is_sampled() else 1e-8
    verdict = fit.residual <= tol and fit.choi_min_eig >= -tol
    print(f"residual={fit.residual!r} choi_min_eig={fit.choi_min_eig!r} "
          f"tol={tol!r} linear_explainable={verdict}")


def _run_batch(args) -> None:
    files = sorted(args.directory.glob("*.scn"))
    if not files:
        raise ValidationError(f"no *.scn files under {args.directory}")

    def one(path):
        _run_one(path, args)

    with ThreadPoolExecutor() as pool:
        list(pool.map(one, files))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "witness":
            _run_witness(args)
        elif args.command == "batch":
            _run_batch(args)
        else:
            _run_one(args.scenario, args, _FORCED_PROTOCOL.get(args.command))
    except ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConvergenceError as exc:
        print(f"convergence error: {exc} (residual={exc.residual})", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NlboxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
