"""Command-line entry point ``floquet-loss``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, load_config

THREADS_ENV = "FLOQUET_LOSS_THREADS"

log = logging.getLogger("floquet_loss")


def _threads(value) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floquet-loss", description="Steady-state loss of a driven transmon.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run or resume a drive sweep")
    run.add_argument("--config", required=True)
    run.add_argument("--resume", action="store_true")
    run.add_argument("--threads", type=int, default=None, help=f"worker threads (fallback: ${THREADS_ENV})")

    cmp_ = sub.add_parser("compare", help="compare predictions with measured linewidths")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--data", required=True)
    cmp_.add_argument("--out", default=None)
    cmp_.add_argument("--threads", type=int, default=None)

    dump = sub.add_parser("dump", help="write diagnostic CSV files")
    dump.add_argument("--what", required=True, choices=["spectra", "overlaps", "rates", "hbar"])
    dump.add_argument("--config", required=True)
    dump.add_argument("--out-dir", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    logging.captureWarnings(True)
    try:
        cfg = load_config(args.config)
    except (OSError, ConfigError) as exc:
        log.error("config error: %s", exc)
        return 2

    if args.command == "run":
        from .sweep import CheckpointError, run_sweep

        try:
            res = run_sweep(cfg, resume=args.resume, threads=_threads(args.threads))
        except CheckpointError as exc:
            log.error("%s", exc)
            return 2
        failed = [r["index"] for r in res.rows if r["status"] != "ok"]
        log.info("wrote %s (%d points, %d failed)", res.results_path, len(res.rows), len(failed))
        return 1 if failed else 0

    if args.command == "compare":
        from .sweep import SchemaError, compare

        try:
            path = compare(cfg, args.data, args.out, threads=_threads(args.threads))
        except (OSError, SchemaError) as exc:
            log.error("%s", exc)
            return 2
        log.info("wrote %s", path)
        return 0

    from .diagnostics import dump_diagnostics

    path = dump_diagnostics(cfg, args.what, args.out_dir)
    log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
