#!/usr/bin/env python3
"""Sweep the knowledge sample size and locate where delegation stops paying off.

Writes one CSV row per sample size with both strategies' link bytes and the
mean per-area delay.
"""

import argparse
import csv
import sys

from vkn.comfort import default_scenario
from vkn.netsim import run_comparison


def mean(xs):
    xs = list(xs)
    return sum(xs) / len(xs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--start", type=int, default=64)
    ap.add_argument("--stop", type=int, default=16384)
    ap.add_argument("--factor", type=float, default=1.5)
    ap.add_argument("-o", "--output", help="CSV path (default stdout)")
    args = ap.parse_args()

    sizes, s = [], args.start
    while s <= args.stop:
        sizes.append(s)
        s = max(s + 1, int(s * args.factor))

    rows = []
    for size in sizes:
        r = run_comparison(default_scenario().with_overrides({"sample_size_bytes": size}))
        rows.append({
            "sample_size_bytes": size,
            "info_bytes": r.info_centric.total_bytes,
            "vkn_bytes": r.vkn.total_bytes,
            "bytes_saved": r.bytes_saved,
            "info_delay_ms": mean(r.info_centric.per_query_delay_ms.values()),
            "vkn_delay_ms": mean(r.vkn.per_query_delay_ms.values()),
        })

    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.DictWriter(fh, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    if args.output:
        fh.close()

    # exact break-even by bisection on the byte delta
    lo, hi = 1, 1
    while run_comparison(default_scenario().with_overrides({"sample_size_bytes": hi})).bytes_saved > 0:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if run_comparison(default_scenario().with_overrides({"sample_size_bytes": mid})).bytes_saved > 0:
            lo = mid + 1
        else:
            hi = mid
    print(f"delegation saves bytes while sample_size_bytes < {lo}", file=sys.stderr)


if __name__ == "__main__":
    main()
