"""Command line entry point: ``xelliptic run --config PATH`` and ``xelliptic list``.

Exit status is 0 when every check passes, 2 when an estimate check fails
and 1 on errors (bad config, unknown experiment, solver failure).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .experiments import EXPERIMENTS, ConfigError, load_config, run_experiment

log = logging.getLogger("xelliptic")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xelliptic", description="X-elliptic estimate experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("--config", required=True, type=Path, help="experiment config (JSON)")
    run.add_argument("--out", type=Path, default=None, help="output directory (default: config output.dir or ./out)")
    run.add_argument("--quiet", action="store_true", help="only report failures")
    sub.add_parser("list", help="list registered experiments")
    return ap


def cli_main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for name, fn in sorted(EXPERIMENTS.items()):
            doc = (fn.__doc__ or "").strip().splitlines()
            print(f"{name:20s} {doc[0] if doc else ''}")
        return 0

    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    if not args.config.is_file():
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 1
    try:
        cfg = load_config(args.config)
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    out = args.out or Path(cfg.output.get("dir", "out"))
    report.write(out)
    for c in report.checks:
        if not args.quiet or not c["passed"]:
            status = "PASS" if c["passed"] else "FAIL"
            print(f"[{status}] {cfg.experiment}.{c['name']}: {c['value']} (tolerance {c['tolerance']})")
    if not args.quiet:
        print(f"report written to {out / 'report.json'}")
    return 0 if report.passed else 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
