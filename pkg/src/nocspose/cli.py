"""Command line entry point: ``nocspose {generate,sweep,report,time}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import NocsPoseError
from .harness.config import load_config
from .harness.dataset import generate_dataset
from .harness.report import report
from .harness.sweep import run_sweep
from .harness.timing import time_pipeline


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer: {text}")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="nocspose", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", type=Path, required=config_required, help="experiment config JSON")
        sp.add_argument("--out", type=Path, help="dataset/output directory (overrides the config)")
        sp.add_argument("--seed", type=_u64, help="master seed (overrides the config)")

    g = sub.add_parser("generate", help="render a synthetic dataset")
    common(g)
    s = sub.add_parser("sweep", help="degrade maps, solve poses and write sweep.csv")
    common(s)
    s.add_argument("--workers", type=int, help="worker processes (output is identical for any count)")
    r = sub.add_parser("report", help="summarize a sweep CSV into tables and SVG plots")
    common(r, config_required=False)
    r.add_argument("--csv", type=Path, help="sweep CSV (default: <out>/sweep.csv)")
    t = sub.add_parser("time", help="time correspondence extraction and RANSAC+EPnP")
    common(t)
    t.add_argument("--runs", type=int, help="number of timed instances (>= 100)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            csv_path = args.csv
            if csv_path is None:
                out = args.out or (load_config(args.config).output_dir if args.config else None)
                if out is None:
                    raise NocsPoseError("report needs --csv, --out or --config")
                csv_path = Path(out) / "sweep.csv"
            print(report(csv_path, args.out))
            return 0

        config = load_config(args.config).with_overrides(args.out, args.seed, getattr(args, "workers", None))
        if args.command == "generate":
            print(generate_dataset(config))
        elif args.command == "sweep":
            print(run_sweep(config))
        elif args.command == "time":
            print(time_pipeline(config, runs=args.runs).format())
        return 0
    except (NocsPoseError, FileNotFoundError, PermissionError) as e:
        print(f"nocspose: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
