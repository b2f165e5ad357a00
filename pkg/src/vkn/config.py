"""Scenario configuration and the size constants used by the simulator."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from .engine import COMFORT_MODEL_ID, HANDLERS


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class SimConstants:
    header_bytes: int = 32
    request_bytes: int = 64
    latency_ms: int = 20
    bandwidth_Bps: int = 125_000
    item_size_bytes: int = 2048
    sample_size_bytes: int = 128
    bytecode_size_bytes: int = 65536
    compute_ms: int = 0
    horizon_ms: int = 3_600_000

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ScenarioError(f"constants.{f.name} must be an integer, got {v!r}")
            lo = 0 if f.name in ("latency_ms", "compute_ms") else 1
            if v < lo:
                raise ScenarioError(f"constants.{f.name} must be >= {lo}, got {v}")


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    region: str
    area_server: bool = False
    bytecodes: tuple[str, ...] = ()


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    latency_ms: int | None = None
    bandwidth_Bps: int | None = None


@dataclass(frozen=True)
class ItemSpec:
    node: str
    name: str
    value: str | int | float
    region: str | None = None
    start_ms: int = 0
    end_ms: int | None = None
    size_bytes: int | None = None
    layer: int = 4
    item_id: str | None = None


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]
    items: tuple[ItemSpec, ...]
    ego: str
    queries: tuple[str, ...]
    model_id: str = COMFORT_MODEL_ID
    bytecode_provider: str | None = None
    constants: SimConstants = field(default_factory=SimConstants)

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise ScenarioError(f"unknown node {node_id!r}")

    def with_overrides(self, overrides: dict[str, int] | list[str]) -> "Scenario":
        return replace(self, constants=apply_overrides(self.constants, overrides))

    def without_bytecode(self, node_id: str, model_id: str | None = None) -> "Scenario":
        model_id = model_id or self.model_id
        nodes = tuple(replace(n, bytecodes=tuple(m for m in n.bytecodes if m != model_id))
                      if n.node_id == node_id else n for n in self.nodes)
        return replace(self, nodes=nodes)

    def with_item_value(self, region: str, name: str, value) -> "Scenario":
        items = tuple(replace(it, value=value)
                      if (it.region or self.node(it.node).region) == region and it.name == name else it
                      for it in self.items)
        return replace(self, items=items)


def apply_overrides(constants: SimConstants, overrides) -> SimConstants:
    """Apply ``key=value`` strings (or a dict) to the constants. Unknown keys are errors."""
    if not isinstance(overrides, dict):
        parsed = {}
        for ov in overrides:
            if "=" not in ov:
                raise ScenarioError(f"override {ov!r} is not key=value")
            k, v = (s.strip() for s in ov.split("=", 1))
            try:
                parsed[k] = int(v)
            except ValueError:
                raise ScenarioError(f"override {k}: {v!r} is not an integer") from None
        overrides = parsed
    known = {f.name for f in fields(SimConstants)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ScenarioError(f"unknown override key(s): {', '.join(unknown)}")
    return replace(constants, **overrides)


def _check(cond: bool, where: str, message: str):
    if not cond:
        raise ScenarioError(f"{where}: {message}")


def validate_scenario(sc: Scenario) -> None:
    ids = [n.node_id for n in sc.nodes]
    _check(len(ids) == len(set(ids)), "nodes", "duplicate node id")
    _check(bool(ids), "nodes", "no nodes")
    known = set(ids)
    servers: dict[str, list[str]] = {}
    for i, n in enumerate(sc.nodes):
        _check(bool(n.node_id) and bool(n.region), f"nodes[{i}]", "id and region must be non-empty")
        for m in n.bytecodes:
            _check(m in HANDLERS, f"nodes[{i}].bytecodes", f"no registered handler for {m!r}")
        if n.area_server:
            servers.setdefault(n.region, []).append(n.node_id)
    for region, s in servers.items():
        _check(len(s) == 1, "nodes", f"region {region} has {len(s)} area servers")
    for i, ln in enumerate(sc.links):
        _check(ln.a in known and ln.b in known, f"links[{i}]", f"unknown endpoint in {ln.a}-{ln.b}")
        _check(ln.a != ln.b, f"links[{i}]", "self link")
        _check(ln.latency_ms is None or ln.latency_ms >= 0, f"links[{i}].latency_ms", "must be >= 0")
        _check(ln.bandwidth_Bps is None or ln.bandwidth_Bps > 0, f"links[{i}].bandwidth_Bps", "must be > 0")
    for i, it in enumerate(sc.items):
        _check(it.node in known, f"items[{i}].node", f"unknown node {it.node!r}")
    _check(sc.ego in known, "ego", f"unknown node {sc.ego!r}")
    _check(sc.model_id in HANDLERS, "model", f"no registered handler for {sc.model_id!r}")
    if sc.bytecode_provider is not None:
        _check(sc.bytecode_provider in known, "bytecode_provider", f"unknown node {sc.bytecode_provider!r}")
    _check(bool(sc.queries), "queries", "no query areas")
    for i, q in enumerate(sc.queries):
        _check(q in servers, f"queries[{i}]", f"region {q!r} has no area server")


_NODE_KEYS = {"id", "region", "area_server", "bytecodes"}
_LINK_KEYS = {"a", "b", "latency_ms", "bandwidth_Bps"}
_ITEM_KEYS = {"node", "name", "value", "region", "start_ms", "end_ms", "size_bytes", "layer", "item_id"}
_TOP_KEYS = {"nodes", "links", "items", "ego", "queries", "model", "bytecode_provider", "constants"}


def _keys(obj, allowed: set[str], where: str, required=()):
    _check(isinstance(obj, dict), where, "expected an object")
    extra = sorted(set(obj) - allowed)
    _check(not extra, where, f"unknown key(s) {', '.join(extra)}")
    for r in required:
        _check(r in obj, where, f"missing key {r!r}")


def scenario_from_dict(data) -> Scenario:
    _keys(data, _TOP_KEYS, "scenario", required=("nodes", "links", "items", "ego", "queries"))
    consts = data.get("constants", {})
    _keys(consts, {f.name for f in fields(SimConstants)}, "constants")
    nodes = []
    for i, n in enumerate(data["nodes"]):
        _keys(n, _NODE_KEYS, f"nodes[{i}]", required=("id", "region"))
        nodes.append(NodeSpec(n["id"], n["region"], bool(n.get("area_server", False)),
                              tuple(n.get("bytecodes", ()))))
    links = []
    for i, ln in enumerate(data["links"]):
        _keys(ln, _LINK_KEYS, f"links[{i}]", required=("a", "b"))
        links.append(LinkSpec(ln["a"], ln["b"], ln.get("latency_ms"), ln.get("bandwidth_Bps")))
    items = []
    for i, it in enumerate(data["items"]):
        _keys(it, _ITEM_KEYS, f"items[{i}]", required=("node", "name", "value"))
        items.append(ItemSpec(**it))
    sc = Scenario(tuple(nodes), tuple(links), tuple(items), data["ego"], tuple(data["queries"]),
                  data.get("model", COMFORT_MODEL_ID), data.get("bytecode_provider"),
                  SimConstants(**consts))
    validate_scenario(sc)
    return sc


def load_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(data)


def scenario_to_dict(sc: Scenario) -> dict:
    def node(n: NodeSpec):
        d = {"id": n.node_id, "region": n.region}
        if n.area_server:
            d["area_server"] = True
        if n.bytecodes:
            d["bytecodes"] = list(n.bytecodes)
        return d

    def drop_none(d):
        return {k: v for k, v in d.items() if v is not None}

    out = {
        "model": sc.model_id,
        "ego": sc.ego,
        "bytecode_provider": sc.bytecode_provider,
        "queries": list(sc.queries),
        "constants": asdict(sc.constants),
        "nodes": [node(n) for n in sc.nodes],
        "links": [drop_none(asdict(ln)) for ln in sc.links],
        "items": [drop_none(asdict(it)) for it in sc.items],
    }
    return drop_none(out)


def dump_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"
