"""Command-line entry point: ``hybridqubit <subcommand> ...``.

Exit codes: 0 success, 1 invalid input, 2 numerical convergence failure.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import scenarios
from .channel import write_coupling_table
from .numerics import ConvergenceError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output CSV path ('-' for stdout); defaults to the config's output or stdout")
    common.add_argument("--grid-scale", type=_positive_float, default=1.0,
                        help="multiply quadrature node counts (convergence studies)")
    common.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                        help="worker threads for sweep points (default: available CPUs)")

    p = argparse.ArgumentParser(prog="hybridqubit", description="Rotation-invariant hybrid qubit simulator")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run a scenario config")
    r.add_argument("config")
    pr = sub.add_parser("preset", parents=[common], help="run a bundled preset")
    pr.add_argument("name")
    c = sub.add_parser("coeffs", parents=[common], help="dump the coupling table of a mask config")
    c.add_argument("config")
    cl = sub.add_parser("classify", parents=[common], help="check the invariance condition of channels")
    cl.add_argument("config")
    sub.add_parser("list-presets", help="list bundled presets")
    return p


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", newline="", encoding="utf-8"), True
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _write(path, writer) -> None:
    fh, close = _open_out(path)
    try:
        writer(fh)
    finally:
        if close:
            fh.close()


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise scenarios.ConfigError(path, f"invalid TOML: {exc}") from None


def _run(cfg: scenarios.ScenarioConfig, args) -> None:
    cfg = cfg.with_grid_scale(args.grid_scale)
    rows = scenarios.run_scenario(cfg, threads=args.threads)
    _write(args.out or cfg.output, lambda fh: scenarios.write_rows(rows, fh))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            for name in scenarios.preset_names():
                print(name)
        elif args.command == "run":
            _run(scenarios.load_config(args.config), args)
        elif args.command == "preset":
            _run(scenarios.load_preset(args.name), args)
        elif args.command == "coeffs":
            c = scenarios.coupling_from_config(_load_toml(args.config), args.grid_scale)
            _write(args.out, lambda fh: write_coupling_table(c, fh))
        elif args.command == "classify":
            rows = scenarios.classify_config(_load_toml(args.config), args.grid_scale)
            _write(args.out, lambda fh: scenarios.write_rows(rows, fh, scenarios.CLASSIFY_COLUMNS))
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
