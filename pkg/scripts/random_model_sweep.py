#!/usr/bin/env python3
"""Sweep many random admissible models through the main and hat checks.

Prints one CSV row per model; useful for stress runs beyond the acceptance set.
"""

import argparse
import csv
import sys
import time

from echobd.scenarios import ScenarioBounds, random_admissible_nmodel, run_hat_theorem, run_main_theorem, run_many


def one(args):
    seed, orbits, bounds = args
    n = random_admissible_nmodel(seed, orbits, bounds.j_max)
    t = time.perf_counter()
    main = run_main_theorem(n, bounds, claims=False)
    hat = run_hat_theorem(n, bounds)
    return seed, orbits, len(n.d_flat) + len(n.d_prime), main.passed, hat.passed, time.perf_counter() - t


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--start", type=int, default=1000)
    ap.add_argument("--max-orbits", type=int, default=6)
    ap.add_argument("--jmax", type=int, default=6)
    args = ap.parse_args()
    b = ScenarioBounds(m_max=args.jmax, j_max=args.jmax)
    jobs = [(s, 1 + s % args.max_orbits, b) for s in range(args.start, args.start + args.seeds)]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["seed", "orbits", "entries", "main", "hat", "seconds"])
    failed = 0
    for row in run_many(one, jobs):
        failed += not (row[3] and row[4])
        w.writerow([*row[:5], f"{row[5]:.3f}"])
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(run())
