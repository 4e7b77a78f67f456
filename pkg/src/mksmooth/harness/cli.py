"""Command-line entry point.

    mksmooth simulate   --config cfg.ini [--seed S] [--out DIR] [--threads K] [--quiet]
    mksmooth rates      [--config cfg.ini] ...
    mksmooth laplacian  [--config cfg.ini] ...
    mksmooth hks        [--config cfg.ini] ...
    mksmooth regression [--config cfg.ini] ...

Each subcommand runs one experiment family; without --config it uses the
built-in default config for that family (simulate defaults to
berry_circle).  --seed/--out override the config's root seed and output
directory.  Exit codes: 0 success, 2 configuration error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from ..errors import ConfigError, MksmoothError
from .config import parse_config
from .experiments import run_experiment
from .io import write_results

_SUBCOMMAND_KINDS = {
    "simulate": ("berry_circle", "berry_torus"),
    "rates": ("rates",),
    "laplacian": ("laplacian",),
    "hks": ("hks",),
    "regression": ("regression",),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mksmooth",
        description="kernel smoothing experiments on embedded manifolds")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kinds in _SUBCOMMAND_KINDS.items():
        p = sub.add_parser(name, help=f"run a {' / '.join(kinds)} experiment")
        p.add_argument("--config", help="experiment config file (INI)")
        p.add_argument("--seed", type=int, help="override the root seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for replicates (default 1)")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress output on stderr")
    return parser


def _load_config(args) -> "ExperimentConfig":
    kinds = _SUBCOMMAND_KINDS[args.command]
    if args.config is None:
        text = f"[experiment]\nkind = {kinds[0]}\n"
    else:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    cfg = parse_config(text)
    if cfg.experiment not in kinds:
        raise ConfigError(f"subcommand {args.command} runs {kinds}, "
                          f"config says {cfg.experiment}")
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg = replace(cfg, root_seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads < 1:
        print("mksmooth: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"mksmooth: config error: {exc}", file=sys.stderr)
        return 2
    try:
        res = run_experiment(cfg, threads=args.threads, quiet=args.quiet,
                             flush_dir=cfg.out_dir)
        write_results(res, cfg.out_dir)
    except ConfigError as exc:
        print(f"mksmooth: config error: {exc}", file=sys.stderr)
        return 2
    except MksmoothError as exc:
        print(f"mksmooth: numeric failure: {exc}", file=sys.stderr)
        return 3
    if not args.quiet:
        print(f"wrote {cfg.out_dir}/raw.csv, summary.csv, run.json", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
