#!/usr/bin/env python3
"""Run both retrieval strategies on the shipped scenario and save report + trace."""

import argparse
import json
from pathlib import Path

from vkn.cli import format_report
from vkn.comfort import default_scenario
from vkn.netsim import run_comparison


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/default", help="output directory")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args()

    report = run_comparison(default_scenario().with_overrides(args.override))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    (out / "trace.txt").write_text(report.trace_text())
    print(format_report(report), end="")
    print(f"wrote {out}/report.json and {out}/trace.txt")


if __name__ == "__main__":
    main()
