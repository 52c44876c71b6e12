"""
Command-line interface.

    biodqpt run --config FILE [--n-momenta N] [--t-max T] [--output-dir DIR]
    biodqpt recipe fig1 [--output-dir DIR]
    biodqpt selftest [--seed S]

Exit codes: 0 success, 1 config error, 2 computation error, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

from biodqpt.config import load_config
from biodqpt.errors import ConfigError, DqptError

RECIPES = ("fig1", "fig2a", "fig2b", "fig2c", "fig3", "fig4")

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_SELFTEST = 0, 1, 2, 3


def recipe_path(name: str):
    if name not in RECIPES:
        raise ConfigError(f"unknown recipe {name!r}; choose from {RECIPES}")
    return resources.files("biodqpt") / "recipes" / f"{name}.cfg"


def _add_overrides(parser):
    parser.add_argument("--n-momenta", type=int, dest="n_momenta")
    parser.add_argument("--t-max", type=float, dest="t_max")
    parser.add_argument("--n-times", type=int, dest="n_times")
    parser.add_argument("--output-dir", dest="output_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biodqpt", description="Biorthogonal DQPT diagnostics")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configuration file")
    p_run.add_argument("--config", required=True)
    _add_overrides(p_run)

    p_recipe = sub.add_parser("recipe", help="reproduce the data behind one figure")
    p_recipe.add_argument("name", choices=RECIPES)
    _add_overrides(p_recipe)

    p_self = sub.add_parser("selftest", help="reduced-scale invariant checks")
    p_self.add_argument("--seed", type=int, default=0)
    p_self.add_argument("--inject-branch-flip", action="store_true", help=argparse.SUPPRESS)
    return parser


def _overrides(args) -> dict:
    return {key: str(getattr(args, key)) for key in ("n_momenta", "t_max", "n_times", "output_dir")
            if getattr(args, key) is not None}


def _run(config_path, args) -> int:
    from biodqpt.runner import run

    try:
        with resources.as_file(config_path) as path:
            config = load_config(path, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        tables = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DqptError, ArithmeticError) as exc:
        print(f"computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    print(f"wrote {len(tables)} tables to {args.output_dir or config.output_dir}")
    return EXIT_OK


def _selftest(args) -> int:
    from biodqpt.model import inject_branch_flip
    from biodqpt.runner import selftest

    if args.inject_branch_flip:
        with inject_branch_flip():
            report = selftest(args.seed)
    else:
        report = selftest(args.seed)
    for name, ok, detail in report:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    failed = [name for name, ok, _ in report if not ok]
    print(f"{len(report) - len(failed)}/{len(report)} checks passed")
    return EXIT_SELFTEST if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "selftest":
        return _selftest(args)
    if args.command == "recipe":
        return _run(recipe_path(args.name), args)
    return _run(Path(args.config), args)


if __name__ == "__main__":
    sys.exit(main())
