"""Command line entry point: ``multirev <study> --config FILE``.

Exit codes: 0 success, 1 a study's own pass criterion failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import config, harness
from .errors import ConfigError, InvalidParameter

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multirev", description="Multirevolution integrator experiments.")
    sub = parser.add_subparsers(dest="study", required=True, metavar="study")
    for name in harness.RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} study")
        p.add_argument("--config", required=True, help="YAML study configuration")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--threads", type=int, default=None, help="worker threads for Monte-Carlo blocks")
        p.add_argument("--out-dir", default=None, help="directory for CSV, metadata and plot files")
    return parser


def _failed(result) -> bool:
    if result.study == "validate-moments":
        return not result.summary["passed"]
    return False


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = config.load(args.config, args.study, seed=args.seed, threads=args.threads, out_dir=args.out_dir)
        result = harness.RUNNERS[args.study](cfg)
    except (ConfigError, InvalidParameter) as exc:
        print(f"multirev: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(harness._jsonable({"study": result.study, "summary": result.summary, "files": result.files}), indent=2))
    return EXIT_FAILED if _failed(result) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
