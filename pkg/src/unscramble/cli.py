"""Command-line entry point: one subcommand per experiment kind.

    unscramble <kind> --config run.json [--seed N] [--out PREFIX] [--workers N]

Flags override the corresponding config fields; the worker count can also
come from the UNSCRAMBLE_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import sys

from .config import KINDS, ConfigError, load_config
from .runner import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unscramble",
        description="Scramble / measure / time-reverse / recover experiments.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a '{kind}' experiment")
        p.add_argument("--config", required=True, help="path to the JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output path prefix")
        p.add_argument("--workers", type=int, default=None, help="worker pool size")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.kind != args.kind:
            raise ConfigError(
                f"config file is for kind {cfg.kind!r} but the {args.kind!r} "
                "subcommand was invoked"
            )
        manifest = run_experiment(cfg, out_prefix=args.out, workers=args.workers, seed=args.seed)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
