"""Command line front end.

``heatlab run <config>`` executes one task file, ``heatlab sweep <dir>``
runs every ``*.cfg`` file under a directory into per-config output folders,
and ``heatlab verify`` runs the seeded invariant suites.  Exit status: 0 on
success, 1 for configuration errors, 2 for numeric failures, 3 when a
verification suite fails.  ``--out`` (or the ``HEATLAB_OUT`` environment
variable) overrides the output directory from the config.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import TaskConfig, parse_config
from .errors import ConfigError
from .tasks import run_task, sweep


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatlab",
        description="Volumes, isoperimetric profiles, and heat kernel "
                    "bounds on weighted rotationally symmetric models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one task config file")
    p_run.add_argument("config", help="path to the config file")
    p_run.add_argument("--out", default=None,
                       help="output directory (overrides the config)")

    p_sweep = sub.add_parser("sweep", help="run every *.cfg in a directory")
    p_sweep.add_argument("directory", help="directory of config files")
    p_sweep.add_argument("--out", default=None,
                         help="output root (default: <directory>/out)")

    p_verify = sub.add_parser("verify", help="run the invariant suites")
    p_verify.add_argument("--seed", type=int, default=42,
                          help="seed for the randomized suites")
    p_verify.add_argument("--out", default=None,
                          help="directory for verify.json (default: out)")
    return parser


def _cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        config = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run_task(config, out_dir=args.out)


def _cmd_sweep(args) -> int:
    root = Path(args.directory)
    if not root.is_dir():
        print(f"config error: {root} is not a directory", file=sys.stderr)
        return 1
    jobs = []
    for path in sorted(root.glob("*.cfg")):
        try:
            jobs.append((path.name, parse_config(path.read_text()), None))
        except ConfigError as exc:
            jobs.append((path.name, None, exc))
    out = args.out if args.out is not None else str(root / "out")
    return sweep(jobs, out)


def _cmd_verify(args) -> int:
    config = TaskConfig(task="verify", seed=args.seed)
    return run_task(config, out_dir=args.out)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
