#!/usr/bin/env python3
"""Regenerate every verification table as CSV plus a plain-text report.

    python scripts/run_acceptance_tables.py --out results/
"""

import argparse
import sys
from pathlib import Path

from echobd.cli import main


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--count", type=int, default=20)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return main([
        "verify", "all", "--seed", str(args.seed), "--count", str(args.count),
        "--deterministic", "--csv-dir", str(out / "tables"), "--out", str(out / "report.txt"),
    ])


if __name__ == "__main__":
    sys.exit(run())
