"""Model execution and composition planning, plus the built-in comfort model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .ldm import KnowledgeBase, LdmStore, MissingInputs
from .semantic import (
    KNOWLEDGE_LAYER,
    ContentItem,
    Provenance,
    SemanticName,
    SemanticRegistry,
    Value,
    as_name,
    default_registry,
    make_item,
)
from .vkmd import ModelDescription, parse_vkmd

EvalFn = Callable[[Mapping[str, ContentItem]], Value]

COMFORT_MODEL_ID = "model.env_comfort"

COMFORT_VKMD = """\
model model.env_comfort
input traffic : Road.Traffic
input visibility : Road.Visibility
input twoWheelers : TwoWheelers.Concentration
output comfort : Road.ComfortLevel
"""


class ExecutionError(Exception):
    pass


class PreconditionViolated(ExecutionError):
    def __init__(self, param_id: str, detail: str = ""):
        super().__init__(f"precondition violated for {param_id}{': ' + detail if detail else ''}")
        self.param_id = param_id


class RegionMismatch(ExecutionError):
    pass


class EmptyValidityIntersection(ExecutionError):
    pass


class NoPlan(LookupError):
    pass


class PlanStepError(ExecutionError):
    def __init__(self, step: int, model_id: str, cause: Exception):
        super().__init__(f"step {step} ({model_id}): {cause}")
        self.step = step
        self.model_id = model_id
        self.cause = cause


@dataclass(frozen=True)
class ModelBytecode:
    """Executable half of a model: a native handler plus its transfer and run costs."""

    model_id: str
    size_bytes: int
    compute_ms: int
    eval: EvalFn
    sample_size_bytes: int = 128

    def __post_init__(self):
        if self.size_bytes < 1 or self.sample_size_bytes < 1 or self.compute_ms < 0:
            raise ValueError("bytecode sizes must be positive and compute_ms nonnegative")


def comfort_eval(c_tw: str, v: str, tr: str) -> str:
    if c_tw == "LOW" and v == "CLEAR" and tr == "FLUID":
        return "GOOD"
    elif c_tw == "HIGH":
        return "POOR"
    else:
        return "FAIR"


def _comfort_handler(inputs: Mapping[str, ContentItem]) -> str:
    # look inputs up by semantic type, so param ids are free to differ
    by_name = {str(it.name): it.value for it in inputs.values()}
    return comfort_eval(by_name["TwoWheelers.Concentration"], by_name["Road.Visibility"],
                        by_name["Road.Traffic"])


HANDLERS: dict[str, EvalFn] = {COMFORT_MODEL_ID: _comfort_handler}


def comfort_description() -> ModelDescription:
    return parse_vkmd(COMFORT_VKMD)


def make_bytecode(model_id: str, size_bytes: int = 65536, compute_ms: int = 0,
                  sample_size_bytes: int = 128) -> ModelBytecode:
    try:
        handler = HANDLERS[model_id]
    except KeyError:
        raise KeyError(f"no registered handler for {model_id!r}") from None
    return ModelBytecode(model_id, size_bytes, compute_ms, handler, sample_size_bytes)


def load_manifest(text: str) -> dict[str, ModelBytecode]:
    """Read ``<model_id> <bytecode_size> <compute_ms> <sample_size>`` lines."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4 or not all(p.isdigit() for p in parts[1:]):
            raise ValueError(f"manifest line {lineno}: expected '<model_id> <size> <compute_ms> <sample_size>'")
        mid = parts[0]
        if mid in out:
            raise ValueError(f"manifest line {lineno}: duplicate model {mid}")
        if mid not in HANDLERS:
            raise ValueError(f"manifest line {lineno}: no registered handler for {mid}")
        out[mid] = make_bytecode(mid, *(int(p) for p in parts[1:]))
    return out


def sample_id(model_id: str, region: str, at_ms: int, inputs: Iterable[ContentItem]) -> str:
    return f"{model_id}@{region}/{at_ms}<{'+'.join(it.item_id for it in inputs)}>"


def execute(
    desc: ModelDescription,
    bc: ModelBytecode,
    inputs: Mapping[str, ContentItem],
    at_ms: int,
    sample_size_bytes: int,
    *,
    registry: SemanticRegistry | None = None,
    item_id: str | None = None,
) -> ContentItem:
    """Run ``bc`` on ``inputs`` and wrap the result as a knowledge sample.

    The sample lives in the inputs' common region, for the intersection of
    their validities.
    """
    registry = registry if registry is not None else default_registry()
    missing = [b.param_id for b in desc.inputs if b.param_id not in inputs]
    if missing:
        raise MissingInputs(missing)
    ordered = [inputs[b.param_id] for b in desc.inputs]
    for b, item in zip(desc.inputs, ordered):
        if item.name != b.type_name:
            raise PreconditionViolated(b.param_id, f"expected {b.type_name}, got {item.name}")
        limit = desc.max_age(b.param_id)
        if limit is not None and at_ms - item.validity.start_ms > limit:
            raise PreconditionViolated(b.param_id, f"age {at_ms - item.validity.start_ms} ms > {limit} ms")

    regions = {it.region for it in ordered}
    if len(regions) != 1:
        raise RegionMismatch(f"inputs span regions {sorted(regions)}")
    validity = ordered[0].validity
    for it in ordered[1:]:
        validity = validity.intersect(it.validity)
        if validity is None:
            raise EmptyValidityIntersection(f"input validities of {desc.model_id} do not overlap")

    value = bc.eval(dict(inputs))
    region = regions.pop()
    if item_id is None:
        item_id = sample_id(desc.model_id, region, at_ms, ordered)
    return make_item(
        item_id, desc.outputs[0].type_name, value, region, validity,
        layer=KNOWLEDGE_LAYER, size_bytes=sample_size_bytes,
        provenance=Provenance(desc.model_id, tuple(it.item_id for it in ordered)),
        registry=registry,
    )


@dataclass(frozen=True)
class CompositionPlan:
    steps: tuple[str, ...]
    leaf_inputs: frozenset[SemanticName]

    def __len__(self):
        return len(self.steps)


def schedule(descs: Mapping[str, ModelDescription], chosen: Iterable[str],
             available: frozenset[SemanticName]) -> tuple[list[list[str]], frozenset[SemanticName]] | None:
    """Fire ``chosen`` models in rounds from ``available``.

    Returns (rounds, leaf names used) or None when some model can never fire.
    """
    pending = sorted(chosen)
    known = set(available)
    produced: set[SemanticName] = set()
    leaves: set[SemanticName] = set()
    rounds = []
    while pending:
        ready = [m for m in pending if set(descs[m].input_names()) <= known]
        if not ready:
            return None
        for m in ready:
            for n in descs[m].input_names():
                if n not in produced:
                    leaves.add(n)
        for m in ready:
            new = set(descs[m].output_names())
            known |= new
            produced |= new
        rounds.append(ready)
        pending = [m for m in pending if m not in ready]
    return rounds, frozenset(leaves)


def plan_composition(kb: KnowledgeBase, goal: SemanticName | str,
                     available: Iterable[SemanticName | str], max_depth: int = 8) -> CompositionPlan:
    """Backward-chain from ``goal`` to the fewest models reachable from ``available``.

    Ties between equally short plans go to the lexicographically smallest
    sorted model id sequence. ``max_depth`` bounds the number of firing rounds.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    goal = as_name(goal)
    avail = frozenset(as_name(n) for n in available)
    if goal in avail:
        return CompositionPlan((), frozenset())
    descs = kb.descriptions
    producers: dict[SemanticName, list[str]] = {}
    for mid in sorted(descs):
        for n in set(descs[mid].output_names()):
            producers.setdefault(n, []).append(mid)

    def unresolved(chosen: frozenset[str]) -> frozenset[SemanticName]:
        made = {n for m in chosen for n in descs[m].output_names()}
        need = {goal} | {n for m in chosen for n in descs[m].input_names()}
        return frozenset(need - made - avail)

    frontier = {frozenset()}
    seen = set(frontier)
    while frontier:
        solutions = []
        nxt = set()
        for chosen in frontier:
            open_names = unresolved(chosen)
            if not open_names:
                sched = schedule(descs, chosen, avail)
                if sched is not None and len(sched[0]) <= max_depth:
                    solutions.append((tuple(sorted(chosen)), sched))
                continue
            # any complete plan must include some producer of this name
            pick = min(open_names)
            for m in producers.get(pick, ()):
                grown = chosen | {m}
                if grown not in seen:
                    seen.add(grown)
                    nxt.add(grown)
        if solutions:
            _, (rounds, leaves) = min(solutions, key=lambda s: s[0])
            return CompositionPlan(tuple(m for r in rounds for m in r), leaves)
        frontier = nxt
    raise NoPlan(f"no plan produces {goal} from {sorted(map(str, avail))} within depth {max_depth}")


def plan_compute_ms(kb: KnowledgeBase, plan: CompositionPlan) -> int:
    return sum(kb.bytecodes[m].compute_ms for m in plan.steps)


def execute_plan(kb: KnowledgeBase, store: LdmStore, plan: CompositionPlan, region: str,
                 at_ms: int, sample_size_bytes: int) -> ContentItem:
    """Run plan steps in order, inserting each intermediate sample into ``store``."""
    if not plan.steps:
        raise ValueError("empty plan has nothing to execute")
    produced: dict[SemanticName, ContentItem] = {}
    sample = None
    for i, mid in enumerate(plan.steps, start=1):
        try:
            desc = kb.lookup_description(mid)
            bc = kb.get_bytecode(mid)
            if desc is None or bc is None:
                raise ExecutionError(f"no local bytecode for {mid}")
            inputs = {}
            missing = []
            for b in desc.inputs:
                item = produced.get(b.type_name) or store.query(b.type_name, region, at_ms)
                if item is None:
                    missing.append(b.param_id)
                else:
                    inputs[b.param_id] = item
            if missing:
                raise MissingInputs(missing)
            sample = execute(desc, bc, inputs, at_ms, sample_size_bytes, registry=store.registry)
            store.insert(sample)
        except Exception as exc:
            if isinstance(exc, PlanStepError):
                raise
            raise PlanStepError(i, mid, exc) from exc
        produced[sample.name] = sample
    return sample
