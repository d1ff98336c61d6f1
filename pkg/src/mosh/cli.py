"""Command line entry point: ``mosh {dense,sparse,e2e,metrics,oracle-build}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from mosh.config import ConfigError, ExperimentConfig
from mosh.metrics import EmptyRegionError
from mosh.pipeline import (
    ArtifactError,
    cmd_dense,
    cmd_e2e,
    cmd_metrics,
    cmd_oracle_build,
    cmd_sparse,
)

COMMANDS = {
    "dense": cmd_dense,
    "sparse": cmd_sparse,
    "e2e": cmd_e2e,
    "metrics": cmd_metrics,
    "oracle-build": cmd_oracle_build,
}


def parse_seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mosh", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="YAML experiment config; defaults apply when omitted")
        p.add_argument("--seed-override", type=parse_seeds, metavar="SEEDS",
                       help="comma-separated seeds replacing the config's seed list")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
        p.add_argument("--workers", type=int, help="parallel seed workers")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed_override:
        changes["seeds"] = args.seed_override
    if args.out:
        changes["out"] = args.out
    if args.workers:
        changes["workers"] = args.workers
    return dataclasses.replace(cfg, **changes) if changes else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        result = COMMANDS[args.command](cfg, cfg.out)
    except ConfigError as exc:
        print(f"mosh: config error: {exc}", file=sys.stderr)
        return 2
    except (ArtifactError, EmptyRegionError) as exc:
        print(f"mosh: {exc}", file=sys.stderr)
        return 1
    if isinstance(result, dict) and "rows" in result:
        for row in result["rows"]:
            print(f"{row['method']:>16s}  mean={row['mean']:.4f}  std={row['std']:.4f}")
    elif isinstance(result, dict) and "summary" in result:
        print(result["summary"])
    elif isinstance(result, dict):
        for r in result["runs"]:
            print(r.get("trace", r))
    else:
        print(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
