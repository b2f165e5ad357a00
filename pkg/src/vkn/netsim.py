"""Deterministic discrete-event simulation of knowledge vs information retrieval.

Links are store-and-forward: a message is serialized in full at each hop, and
each link direction sends one message at a time (FIFO), so a message waits
while the link is busy with an earlier one.
"""

from __future__ import annotations

import heapq
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field

from .comfort import RouteDecision, decide_route
from .config import Scenario, ScenarioError, SimConstants
from .engine import execute, make_bytecode
from .ldm import KnowledgeBase, LdmStore, MissingInputs
from .semantic import ContentItem, SemanticRegistry, default_registry, make_item
from .vkmd import ModelDescription
from .vkql import (
    INPUTS_UNAVAILABLE,
    KNOWLEDGE_UNAVAILABLE,
    REQUEST_KINDS,
    BytecodeReq,
    CreateReq,
    InfoReq,
    Kind,
    MessageFactory,
    NodeRole,
    RegionAddr,
    SizeModel,
    VkqlMessage,
    handle_message,
)

log = logging.getLogger(__name__)

INFO_CENTRIC = "info_centric"
VKN = "vkn"


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    latency_ms: int = 20
    bandwidth_Bps: int = 125_000


def serialization_ms(size_bytes: int, bandwidth_Bps: int) -> int:
    # integer ceil, exact for any size
    return -(-size_bytes * 1000 // bandwidth_Bps)


def transit_time(size_bytes: int, link: Link) -> int:
    return link.latency_ms + serialization_ms(size_bytes, link.bandwidth_Bps)


def link_key(a: str, b: str) -> str:
    return "|".join(sorted((a, b)))


class Topology:
    """Nodes, symmetric links, and hop-count shortest-path routes.

    Among equally short routes the next hop is the lexicographically smallest
    neighbour id.
    """

    def __init__(self, nodes: list[NodeRole], links: list[Link]):
        self.nodes = {n.node_id: n for n in nodes}
        self.links: dict[str, Link] = {}
        self.adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for ln in links:
            key = link_key(ln.a, ln.b)
            if key in self.links:
                raise ScenarioError(f"duplicate link {key}")
            self.links[key] = ln
            self.adj[ln.a].add(ln.b)
            self.adj[ln.b].add(ln.a)
        self._dist = {n: self._bfs(n) for n in self.nodes}
        for n in self.nodes:
            missing = sorted(set(self.nodes) - set(self._dist[n]))
            if missing:
                raise ScenarioError(f"topology not connected: {n} cannot reach {', '.join(missing)}")

    def _bfs(self, src: str) -> dict[str, int]:
        dist = {src: 0}
        q = deque([src])
        while q:
            u = q.popleft()
            for v in sorted(self.adj[u]):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    q.append(v)
        return dist

    def link(self, a: str, b: str) -> Link:
        return self.links[link_key(a, b)]

    def next_hop(self, src: str, dst: str) -> str:
        d = self._dist[dst]
        return min(v for v in self.adj[src] if d[v] == d[src] - 1)

    def route(self, src: str, dst: str) -> list[str]:
        path = [src]
        while path[-1] != dst:
            path.append(self.next_hop(path[-1], dst))
        return path

    def hops(self, src: str, dst: str) -> int:
        return self._dist[dst][src]

    def area_server(self, region: str) -> str:
        servers = sorted(n.node_id for n in self.nodes.values() if n.is_area_server and n.region == region)
        if len(servers) != 1:
            raise ScenarioError(f"region {region} has {len(servers)} area servers")
        return servers[0]


def build_topology(sc: Scenario, registry: SemanticRegistry | None = None,
                   descriptions: dict[str, ModelDescription] | None = None) -> Topology:
    """Fresh node state for one run: every node knows the model description,
    bytecodes and items go where the scenario places them."""
    registry = registry if registry is not None else default_registry()
    if descriptions is None:
        from .engine import comfort_description
        descriptions = {d.model_id: d for d in [comfort_description()]}
    c = sc.constants
    roles = []
    for spec in sc.nodes:
        kb = KnowledgeBase()
        for d in descriptions.values():
            kb.register_description(d)
        for mid in spec.bytecodes:
            if mid not in descriptions:
                raise ScenarioError(f"node {spec.node_id}: no description for {mid}")
            kb.install_bytecode(make_bytecode(mid, c.bytecode_size_bytes, c.compute_ms, c.sample_size_bytes))
        roles.append(NodeRole(spec.node_id, spec.region, spec.area_server, kb, LdmStore(registry)))
    by_id = {r.node_id: r for r in roles}
    for r in roles:
        r.peer_bytecodes = {s.node_id: frozenset(s.bytecodes) for s in sc.nodes
                            if s.region == r.region and s.node_id != r.node_id}
    for i, it in enumerate(sc.items):
        node = by_id[it.node]
        region = it.region or node.region
        end = it.end_ms if it.end_ms is not None else c.horizon_ms
        item_id = it.item_id or f"{it.node}:{it.name}:{region}:{it.start_ms}"
        try:
            item = make_item(item_id, it.name, it.value, region, (it.start_ms, end), layer=it.layer,
                             size_bytes=it.size_bytes or c.item_size_bytes, registry=registry)
            node.ldm.insert(item)
        except (ValueError, KeyError) as exc:
            raise ScenarioError(f"items[{i}]: {exc}") from None
    links = [Link(ln.a, ln.b,
                  c.latency_ms if ln.latency_ms is None else ln.latency_ms,
                  c.bandwidth_Bps if ln.bandwidth_Bps is None else ln.bandwidth_Bps)
             for ln in sc.links]
    return Topology(roles, links)


@dataclass
class RunMetrics:
    strategy: str
    total_bytes: int = 0
    per_link_bytes: dict[str, int] = field(default_factory=dict)
    per_kind_bytes: dict[str, int] = field(default_factory=dict)
    per_area_bytes: dict[str, int] = field(default_factory=dict)
    # end-to-end sizes, each emitted message counted once regardless of hops
    message_bytes: int = 0
    per_area_message_bytes: dict[str, int] = field(default_factory=dict)
    per_query_delay_ms: dict[str, int] = field(default_factory=dict)
    message_count: int = 0
    hop_count: int = 0
    area_comfort: dict[str, str | None] = field(default_factory=dict)
    fallbacks: list[str] = field(default_factory=list)
    routes: dict[str, list[str]] = field(default_factory=dict)
    dropped: list[str] = field(default_factory=list)
    unanswered: list[int] = field(default_factory=list)
    decision: RouteDecision | None = None
    trace: list[str] = field(default_factory=list)
    # message id -> (size, hops traversed), for conservation audits
    ledger: dict[int, list[int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "total_bytes": self.total_bytes,
            "message_count": self.message_count,
            "hop_count": self.hop_count,
            "per_query_delay_ms": dict(self.per_query_delay_ms),
            "per_area_bytes": dict(self.per_area_bytes),
            "message_bytes": self.message_bytes,
            "per_area_message_bytes": dict(self.per_area_message_bytes),
            "per_kind_bytes": dict(sorted(self.per_kind_bytes.items())),
            "per_link_bytes": dict(sorted(self.per_link_bytes.items())),
            "area_comfort": dict(self.area_comfort),
            "fallbacks": list(self.fallbacks),
            "routes": {k: list(v) for k, v in self.routes.items()},
            "decision": self.decision.to_dict() if self.decision else None,
        }


class Simulation:
    """Event loop. Events run in (time_ms, seq) order; seq is the global emission counter."""

    DELIVER = "DELIVER"
    COMPUTE_DONE = "COMPUTE_DONE"
    LOCAL = "LOCAL"

    def __init__(self, topology: Topology, sizes: SizeModel, metrics: RunMetrics, horizon_ms: int):
        self.topo = topology
        self.factory = MessageFactory(sizes)
        self.metrics = metrics
        self.horizon_ms = horizon_ms
        self.now = 0
        self._heap: list = []
        self._seq = 0
        self._busy: dict[tuple[str, str], int] = defaultdict(int)
        self._final: dict[int, str] = {}
        self._open: dict[int, str] = {}
        self.observers: dict[str, callable] = {}
        self.corr_area: dict[int, str] = {}

    def _push(self, t: int, kind: str, payload):
        heapq.heappush(self._heap, (t, self._seq, kind, payload))
        self._seq += 1

    def resolve(self, dst) -> str:
        return self.topo.area_server(dst.region) if isinstance(dst, RegionAddr) else dst

    def send(self, msg: VkqlMessage, at_node: str, t: int | None = None):
        t = self.now if t is None else t
        final = self.resolve(msg.dst)
        if final not in self.topo.nodes:
            raise ScenarioError(f"message {msg.msg_id} addressed to unknown node {final}")
        self._final[msg.msg_id] = final
        m = self.metrics
        m.message_count += 1
        m.message_bytes += msg.size_bytes
        area = self.corr_area.get(msg.corr)
        if area is not None:
            m.per_area_message_bytes[area] = m.per_area_message_bytes.get(area, 0) + msg.size_bytes
        m.ledger[msg.msg_id] = [msg.size_bytes, 0]
        if msg.kind in REQUEST_KINDS and msg.corr == msg.msg_id and msg.reply_to is not None:
            self._open[msg.corr] = msg.reply_to
        if final == at_node:
            self._push(t, self.DELIVER, (msg, at_node, at_node))
        else:
            self._transmit(msg, at_node, self.topo.next_hop(at_node, final), t)

    def _transmit(self, msg: VkqlMessage, frm: str, to: str, t: int):
        link = self.topo.link(frm, to)
        start = max(t, self._busy[(frm, to)])
        done = start + serialization_ms(msg.size_bytes, link.bandwidth_Bps)
        self._busy[(frm, to)] = done
        m = self.metrics
        key = link_key(frm, to)
        m.per_link_bytes[key] = m.per_link_bytes.get(key, 0) + msg.size_bytes
        m.per_kind_bytes[msg.kind.name] = m.per_kind_bytes.get(msg.kind.name, 0) + msg.size_bytes
        area = self.corr_area.get(msg.corr)
        if area is not None:
            m.per_area_bytes[area] = m.per_area_bytes.get(area, 0) + msg.size_bytes
        m.total_bytes += msg.size_bytes
        m.hop_count += 1
        m.ledger[msg.msg_id][1] += 1
        self._push(done + link.latency_ms, self.DELIVER, (msg, frm, to))

    def at(self, t: int, fn):
        self._push(t, self.LOCAL, fn)

    def run(self):
        while self._heap:
            t, _, kind, payload = heapq.heappop(self._heap)
            if t > self.horizon_ms:
                self.metrics.dropped.append(f"t={t} {kind} beyond horizon {self.horizon_ms}")
                continue
            self.now = t
            if kind == self.DELIVER:
                self._deliver(*payload)
            elif kind == self.COMPUTE_DONE:
                msg, node = payload
                self.send(msg, node)
            else:
                payload()
        self.metrics.unanswered = sorted(self._open)

    def _deliver(self, msg: VkqlMessage, frm: str, node: str):
        if frm != node:
            self.metrics.trace.append(f"t={self.now} {frm}→{node} {msg.kind.name} {msg.size_bytes}B")
        final = self._final[msg.msg_id]
        if node != final:
            self._transmit(msg, node, self.topo.next_hop(node, final), self.now)
            return
        if msg.kind not in REQUEST_KINDS and self._open.get(msg.corr) == node:
            del self._open[msg.corr]
        outs = handle_message(self.topo.nodes[node], msg, self.now, self.factory)
        for out, delay in outs:
            if delay > 0:
                self._push(self.now + delay, self.COMPUTE_DONE, (out, node))
            else:
                self.send(out, node)
        obs = self.observers.get(node)
        if obs is not None:
            obs(msg)


class RetrievalClient:
    """V_ego's side of the comfort retrieval, one area after the other."""

    def __init__(self, sim: Simulation, sc: Scenario, strategy: str, desc: ModelDescription):
        self.sim = sim
        self.sc = sc
        self.strategy = strategy
        self.desc = desc
        self.ego = sc.ego
        self.node = sim.topo.nodes[sc.ego]
        self.areas = list(sc.queries)
        self.idx = -1
        self.t_start = 0
        self.at_ms = 0
        self.pending: set[int] = set()
        self.mode = None
        self.samples: dict[str, ContentItem | None] = {}
        sim.observers[self.ego] = self.on_message

    @property
    def area(self) -> str:
        return self.areas[self.idx]

    def start(self):
        self.next_area()

    def _emit(self, kind: Kind, dst, body):
        msg = self.sim.factory.make(kind, self.ego, dst, body)
        self.sim.corr_area[msg.corr] = self.area
        self.sim.send(msg, self.ego)
        return msg

    def next_area(self):
        self.idx += 1
        if self.idx >= len(self.areas):
            return
        self.t_start = self.sim.now
        self.at_ms = self.sim.now
        self.sim.metrics.routes[self.area] = []
        if self.strategy == VKN:
            self.start_delegation()
        else:
            self.start_info()

    # -- delegated creation
    def start_delegation(self):
        self.mode = "create"
        body = CreateReq(self.sc.model_id, self.area, self.at_ms, self.ego)
        msg = self._emit(Kind.CREATE_REQ, RegionAddr(self.area), body)
        self.pending = {msg.corr}

    # -- information-centric baseline
    def start_info(self):
        if not self.node.kb.has_bytecode(self.sc.model_id):
            provider = self.sc.bytecode_provider
            if provider is None:
                raise ScenarioError(f"{self.ego} lacks {self.sc.model_id} and no bytecode_provider is set")
            self.mode = "download"
            msg = self._emit(Kind.BYTECODE_REQ, provider, BytecodeReq(self.sc.model_id, self.ego))
            self.pending = {msg.corr}
            self._route_to(provider)
            return
        self.request_inputs()

    def request_inputs(self):
        self.mode = "info"
        self.pending = set()
        server = self.sim.topo.area_server(self.area)
        self._route_to(server)
        for b in self.desc.inputs:
            body = InfoReq(str(b.type_name), self.area, self.at_ms, self.ego)
            msg = self._emit(Kind.INFO_REQ, RegionAddr(self.area), body)
            self.pending.add(msg.corr)

    def _route_to(self, node: str):
        self.sim.metrics.routes[self.area] = self.sim.topo.route(self.ego, node)

    def on_message(self, msg: VkqlMessage):
        if msg.corr not in self.pending:
            return
        k = msg.kind
        if self.mode == "create":
            self.pending.discard(msg.corr)
            if k == Kind.CREATE_RESP:
                self._route_to(msg.src)
                self.finish(msg.body.sample)
            elif k == Kind.ERROR and msg.body.code in (KNOWLEDGE_UNAVAILABLE, INPUTS_UNAVAILABLE):
                log.info("delegation for area %s failed (%s), falling back", self.area, msg.body.code)
                self.sim.metrics.fallbacks.append(self.area)
                self.start_info()
            else:
                raise ScenarioError(f"area {self.area}: unexpected {k.name} to CREATE_REQ")
        elif self.mode == "download":
            self.pending.discard(msg.corr)
            if k != Kind.BYTECODE_RESP or not self.node.kb.has_bytecode(self.sc.model_id):
                raise ScenarioError(f"bytecode download of {self.sc.model_id} from "
                                    f"{self.sc.bytecode_provider} failed: {getattr(msg.body, 'detail', k.name)}")
            self.request_inputs()
        elif self.mode == "info":
            if k == Kind.ERROR:
                raise ScenarioError(f"area {self.area}: information item unavailable: {msg.body.detail}")
            self.pending.discard(msg.corr)
            if not self.pending:
                self.compute_locally()

    def compute_locally(self):
        try:
            inputs = self.node.ldm.gather_inputs(self.desc, self.area, self.at_ms)
        except MissingInputs as exc:
            raise ScenarioError(f"area {self.area}: inputs {exc.params} unusable at {self.ego}") from None
        bc = self.node.kb.get_bytecode(self.sc.model_id)
        sample = execute(self.desc, bc, inputs, self.at_ms, bc.sample_size_bytes,
                         registry=self.node.ldm.registry)
        self.sim.at(self.sim.now + bc.compute_ms, lambda: self.finish(sample))

    def finish(self, sample: ContentItem):
        m = self.sim.metrics
        m.per_query_delay_ms[self.area] = self.sim.now - self.t_start
        self.samples[self.area] = sample
        self.mode = None
        self.next_area()


def run_strategy(topology: Topology, sc: Scenario, strategy: str) -> RunMetrics:
    if strategy not in (INFO_CENTRIC, VKN):
        raise ValueError(f"unknown strategy {strategy!r}")
    c: SimConstants = sc.constants
    metrics = RunMetrics(strategy)
    sim = Simulation(topology, SizeModel(c.header_bytes, c.request_bytes), metrics, c.horizon_ms)
    desc = topology.nodes[sc.ego].kb.lookup_description(sc.model_id)
    client = RetrievalClient(sim, sc, strategy, desc)
    sim.at(0, client.start)
    sim.run()
    for area in sc.queries:
        s = client.samples.get(area)
        metrics.area_comfort[area] = None if s is None else s.value
        metrics.per_area_bytes.setdefault(area, 0)
        metrics.per_area_message_bytes.setdefault(area, 0)
    metrics.per_query_delay_ms = {a: metrics.per_query_delay_ms[a] for a in sc.queries
                                  if a in metrics.per_query_delay_ms}
    metrics.per_area_bytes = {a: metrics.per_area_bytes[a] for a in sc.queries}
    metrics.per_area_message_bytes = {a: metrics.per_area_message_bytes[a] for a in sc.queries}
    metrics.decision = decide_route({a: client.samples.get(a) for a in sc.queries})
    return metrics


def run_strategy_info_centric(topology: Topology, sc: Scenario) -> RunMetrics:
    return run_strategy(topology, sc, INFO_CENTRIC)


def run_strategy_vkn(topology: Topology, sc: Scenario) -> RunMetrics:
    return run_strategy(topology, sc, VKN)


@dataclass
class ComparisonReport:
    info_centric: RunMetrics
    vkn: RunMetrics

    def deltas(self) -> dict[str, dict[str, int | None]]:
        """Per area savings of VKN over the baseline (positive means VKN is cheaper)."""
        out = {}
        for area in self.info_centric.per_area_bytes:
            di = self.info_centric.per_query_delay_ms.get(area)
            dv = self.vkn.per_query_delay_ms.get(area)
            out[area] = {
                "bytes_saved": self.info_centric.per_area_bytes[area] - self.vkn.per_area_bytes[area],
                "delay_saved_ms": None if di is None or dv is None else di - dv,
            }
        return out

    @property
    def bytes_saved(self) -> int:
        return self.info_centric.total_bytes - self.vkn.total_bytes

    def to_dict(self) -> dict:
        return {
            "info_centric": self.info_centric.to_dict(),
            "vkn": self.vkn.to_dict(),
            "deltas": {"total_bytes_saved": self.bytes_saved, "per_area": self.deltas()},
            "chosen": {INFO_CENTRIC: self.info_centric.decision.chosen, VKN: self.vkn.decision.chosen},
        }

    def trace_text(self) -> str:
        lines = [f"# {INFO_CENTRIC}", *self.info_centric.trace, f"# {VKN}", *self.vkn.trace]
        return "\n".join(lines) + "\n"


def run_comparison(sc: Scenario, registry: SemanticRegistry | None = None) -> ComparisonReport:
    """Run both strategies, each on its own freshly built copy of the scenario state."""
    info = run_strategy_info_centric(build_topology(sc, registry), sc)
    vkn = run_strategy_vkn(build_topology(sc, registry), sc)
    return ComparisonReport(info, vkn)
