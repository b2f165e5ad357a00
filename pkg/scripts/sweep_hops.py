#!/usr/bin/env python3
"""Grow the relay chain between the ego vehicle and one area server and compare delays."""

import argparse

from vkn.comfort import area_items
from vkn.config import LinkSpec, NodeSpec, Scenario, SimConstants
from vkn.engine import COMFORT_MODEL_ID
from vkn.netsim import run_comparison


def chain(hops, constants):
    ids = ["V_ego"] + [f"relay{i}" for i in range(1, hops)] + ["server_A"]
    nodes = [NodeSpec("V_ego", "ego_zone", bytecodes=(COMFORT_MODEL_ID,))]
    nodes += [NodeSpec(n, "ego_zone") for n in ids[1:-1]]
    nodes.append(NodeSpec("server_A", "A", area_server=True, bytecodes=(COMFORT_MODEL_ID,)))
    links = tuple(LinkSpec(a, b) for a, b in zip(ids, ids[1:]))
    return Scenario(tuple(nodes), links, tuple(area_items("server_A", "A", "LOW", "CLEAR", "FLUID")),
                    "V_ego", ("A",), COMFORT_MODEL_ID, "server_A", constants)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-hops", type=int, default=8)
    ap.add_argument("--latency-ms", type=int, default=20)
    ap.add_argument("--bandwidth", type=int, default=125_000, help="bytes per second")
    args = ap.parse_args()

    c = SimConstants(latency_ms=args.latency_ms, bandwidth_Bps=args.bandwidth)
    print(f"{'hops':>4} {'info_ms':>8} {'vkn_ms':>7} {'info_B':>7} {'vkn_B':>6}")
    for h in range(1, args.max_hops + 1):
        r = run_comparison(chain(h, c))
        print(f"{h:>4} {r.info_centric.per_query_delay_ms['A']:>8} {r.vkn.per_query_delay_ms['A']:>7} "
              f"{r.info_centric.total_bytes:>7} {r.vkn.total_bytes:>6}")


if __name__ == "__main__":
    main()
