import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from vkn.comfort import default_scenario
from vkn.config import LinkSpec, NodeSpec, ScenarioError, SimConstants
from vkn.engine import COMFORT_MODEL_ID
from vkn.netsim import (
    Link,
    Topology,
    build_topology,
    run_comparison,
    run_strategy_info_centric,
    run_strategy_vkn,
    transit_time,
)
from vkn.vkql import NodeRole

from oracles import size_model_bytes
from scenarios import line_scenario


def ceil_div(a, b):
    return (a + b - 1) // b


def test_transit_time_examples():
    assert transit_time(2080, Link("a", "b", 20, 125000)) == 20 + 17 == 37
    assert transit_time(125000, Link("a", "b", 0, 125000)) == 1000


def test_two_hop_hand_trace():
    # one CREATE_REQ over two 20 ms / 1 Mbps hops: 20 + ceil(96*1000/125000) = 21 per hop
    sc = line_scenario(2)
    m = run_strategy_vkn(build_topology(sc), sc)
    assert m.trace[:2] == ["t=21 V_ego→r1 CREATE_REQ 96B", "t=42 r1→server_A CREATE_REQ 96B"]


def test_routes_shortest_then_lexicographic():
    # s-b-d and s-a-d are both two hops; the smaller next hop wins
    nodes = [NodeRole(n, "z") for n in "sabd"]
    links = [Link("s", "b"), Link("s", "a"), Link("a", "d"), Link("b", "d")]
    topo = Topology(nodes, links)
    assert topo.route("s", "d") == ["s", "a", "d"]
    assert topo.hops("s", "d") == 2


def test_disconnected_topology_rejected():
    with pytest.raises(ScenarioError):
        Topology([NodeRole("a", "z"), NodeRole("b", "z")], [])


def per_area_oracle(c: SimConstants, n_inputs=3):
    return size_model_bytes(c.header_bytes, c.request_bytes, [c.item_size_bytes] * n_inputs, c.sample_size_bytes)


def test_info_centric_default_area_bytes():
    sc = default_scenario()
    info_oracle, _ = per_area_oracle(sc.constants)
    m = run_strategy_info_centric(build_topology(sc), sc)
    assert info_oracle == 3 * 96 + 3 * (32 + 2048) == 6528
    for area in "ABC":
        assert m.per_area_message_bytes[area] == info_oracle
        assert m.per_area_bytes[area] == 2 * info_oracle
    assert m.total_bytes == 3 * 2 * info_oracle


def test_vkn_default_area_bytes():
    sc = default_scenario()
    _, vkn_oracle = per_area_oracle(sc.constants)
    m = run_strategy_vkn(build_topology(sc), sc)
    assert vkn_oracle == 96 + 160 == 256
    assert m.per_area_message_bytes == {a: vkn_oracle for a in "ABC"}
    assert m.total_bytes == 3 * 2 * vkn_oracle


def test_info_centric_with_bytecode_download():
    sc = line_scenario(2, ego_bytecode=False)
    with_dl = run_strategy_info_centric(build_topology(sc), sc)
    base = run_strategy_info_centric(build_topology(line_scenario(2)), line_scenario(2))
    c = sc.constants
    assert with_dl.message_bytes - base.message_bytes == (c.header_bytes + c.request_bytes) + (32 + 65536)
    assert with_dl.per_kind_bytes["BYTECODE_RESP"] == 2 * (32 + 65536)
    assert with_dl.area_comfort == base.area_comfort == {"A": "GOOD"}


def test_missing_item_is_scenario_error():
    sc = line_scenario(2)
    sc = replace(sc, items=tuple(it for it in sc.items if it.name != "Road.Visibility"))
    with pytest.raises(ScenarioError, match="Road.Visibility"):
        run_strategy_info_centric(build_topology(sc), sc)


@pytest.mark.parametrize("hops", [1, 2, 3])
def test_vkn_delay_decomposition(hops):
    compute = 13
    c = SimConstants(compute_ms=compute)
    lat = [5, 20, 40][:hops]
    sc = line_scenario(hops, constants=c, latencies=lat)
    m = run_strategy_vkn(build_topology(sc), sc)
    req = c.header_bytes + c.request_bytes
    resp = c.header_bytes + c.sample_size_bytes
    expected = sum(l + ceil_div(req * 1000, c.bandwidth_Bps) for l in lat) + compute \
        + sum(l + ceil_div(resp * 1000, c.bandwidth_Bps) for l in lat)
    assert m.per_query_delay_ms == {"A": expected}


@pytest.mark.parametrize("hops", [1, 2, 3])
def test_info_centric_delay_hand_trace(hops):
    # three requests and three responses pipelined store-and-forward over equal hops
    c = SimConstants()
    sc = line_scenario(hops, constants=c)
    m = run_strategy_info_centric(build_topology(sc), sc)
    s_req = ceil_div(96 * 1000, c.bandwidth_Bps)
    s_resp = ceil_div(2080 * 1000, c.bandwidth_Bps)
    last_req = hops * (s_req + c.latency_ms) + 2 * s_req
    # first response reaches ego after hops*(s_resp+lat); the other two queue behind it
    first_resp_out = last_req - 2 * s_req
    expected = first_resp_out + hops * (s_resp + c.latency_ms) + 2 * s_resp
    assert m.per_query_delay_ms == {"A": expected}


def test_vkn_faster_than_info_on_default():
    r = run_comparison(default_scenario())
    for area in "ABC":
        assert r.vkn.per_query_delay_ms[area] < r.info_centric.per_query_delay_ms[area]


def test_fallback_when_no_bytecode_in_area():
    sc = line_scenario(2, server_bytecode=False)
    vkn = run_strategy_vkn(build_topology(sc), sc)
    info = run_strategy_info_centric(build_topology(sc), sc)
    assert vkn.fallbacks == ["A"]
    assert vkn.message_bytes == info.message_bytes + 96 + 96
    assert vkn.total_bytes == info.total_bytes + 2 * (96 + 96)
    assert vkn.area_comfort == info.area_comfort


def test_forward_to_vehicle_in_area():
    sc = line_scenario(2, server_bytecode=False)
    sc = replace(sc, nodes=sc.nodes + (NodeSpec("car_A", "A", bytecodes=(COMFORT_MODEL_ID,)),),
                 links=sc.links + (LinkSpec("server_A", "car_A"),))
    # the car only knows what it senses; give it a copy of the area inputs
    sc = replace(sc, items=sc.items + tuple(replace(it, node="car_A", item_id=f"car:{it.name}") for it in sc.items))
    m = run_strategy_vkn(build_topology(sc), sc)
    assert m.fallbacks == []
    assert m.routes["A"] == ["V_ego", "r1", "server_A", "car_A"]
    kinds = [line.split()[2] for line in m.trace]
    assert kinds == ["CREATE_REQ"] * 3 + ["CREATE_RESP"] * 3
    assert m.area_comfort == {"A": "GOOD"}


def audit(m):
    assert m.total_bytes == sum(m.per_link_bytes.values())
    assert m.total_bytes == sum(size * hops for size, hops in m.ledger.values())
    assert m.total_bytes == sum(m.per_kind_bytes.values())
    assert m.message_bytes == sum(size for size, _ in m.ledger.values())
    assert m.hop_count == len(m.trace)
    assert m.unanswered == []
    assert m.dropped == []


def test_conservation_on_default_and_fallback():
    r = run_comparison(default_scenario())
    audit(r.info_centric)
    audit(r.vkn)
    sc = default_scenario().without_bytecode("server_B")
    r2 = run_comparison(sc)
    audit(r2.vkn)
    assert r2.vkn.fallbacks == ["B"]


def test_determinism():
    a = run_comparison(default_scenario())
    b = run_comparison(default_scenario())
    assert a.to_dict() == b.to_dict()
    assert a.trace_text() == b.trace_text()


def test_boundary_sample_size():
    c = SimConstants()
    info_area, _ = per_area_oracle(c)
    # vkn bytes per area = (H+R) + (H+S); equal to info_area at this S
    even = info_area - (c.header_bytes + c.request_bytes) - c.header_bytes
    r = run_comparison(default_scenario().with_overrides({"sample_size_bytes": even}))
    assert r.bytes_saved == 0
    assert all(d["bytes_saved"] == 0 for d in r.deltas().values())
    r = run_comparison(default_scenario().with_overrides({"sample_size_bytes": even + 1}))
    assert r.bytes_saved < 0


def test_horizon_drops_late_events():
    sc = default_scenario().with_overrides({"horizon_ms": 100})
    m = run_strategy_vkn(build_topology(sc), sc)
    assert m.area_comfort["A"] == "FAIR"
    assert m.area_comfort["C"] is None
    assert m.dropped


def dominance_sizes(rng, dominant: bool):
    header = rng.randint(1, 200)
    request = rng.randint(1, 500)
    items = [rng.randint(1, 20000) for _ in range(3)]
    lhs_fixed = request + 2 * header
    rhs = sum(s + header for s in items)
    if dominant:
        if lhs_fixed + 1 >= rhs:
            items = [s + lhs_fixed for s in items]
            rhs = sum(s + header for s in items)
        sample = rng.randint(1, rhs - lhs_fixed - 1)
    else:
        info_total = 3 * (header + request) + rhs
        sample = info_total - (header + request) - header + rng.randint(1, 20000)
    return header, request, items, sample


def sized_scenario(header, request, items, sample):
    sc = default_scenario(SimConstants(header_bytes=header, request_bytes=request, sample_size_bytes=sample))
    names = ["Road.Traffic", "Road.Visibility", "TwoWheelers.Concentration"]
    sizes = dict(zip(names, items))
    return replace(sc, items=tuple(replace(it, size_bytes=sizes[it.name]) for it in sc.items))


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_dominance_property(seed, dominant):
    header, request, items, sample = dominance_sizes(random.Random(seed), dominant)
    r = run_comparison(sized_scenario(header, request, items, sample))
    if dominant:
        assert request + sample + 2 * header < sum(s + header for s in items)
        assert r.vkn.total_bytes < r.info_centric.total_bytes
    else:
        assert r.vkn.total_bytes > r.info_centric.total_bytes
