#!/usr/bin/env python3
"""Render SVG trajectories and orbit scans for the sample profile configs."""

import argparse
import csv
from pathlib import Path

from echobd.config import load_config
from echobd.reebprofiles import check_contact, emit_profile_plot, scan_morse_bott

ROOT = Path(__file__).resolve().parent.parent


def run() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figures")
    ap.add_argument("configs", nargs="*", default=sorted(str(p) for p in (ROOT / "configs").glob("*.json")))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in args.configs:
        cfg = load_config(path)
        for i, prof in enumerate(cfg.profiles):
            stem = f"{Path(path).stem}-{i}"
            emit_profile_plot(prof, out / f"{stem}.svg")
            rep = check_contact(prof)
            recs = scan_morse_bott(prof, cfg.scenario.L, cfg.scenario.q_max)
            with open(out / f"{stem}-orbits.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\r\n")
                w.writerow(["parameter", "p", "q", "action"])
                w.writerows(r.as_row() for r in recs)
            print(f"{stem}: contact {'ok' if rep.ok else 'VIOLATED'} (margin {rep.margin:.3g}), {len(recs)} orbit records")


if __name__ == "__main__":
    run()
