"""On-board storage: the layered Local Dynamic Map and the Knowledge Base."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .semantic import ContentItem, SemanticName, SemanticRegistry, as_name, default_registry, validate_value
from .vkmd import ModelDescription, serialize_vkmd

if TYPE_CHECKING:
    from .engine import ModelBytecode


class DuplicateId(KeyError):
    pass


class MissingInputs(LookupError):
    """Raised with every unsatisfied input param, in declaration order."""

    def __init__(self, params):
        self.params = list(params)
        super().__init__(f"missing inputs: {', '.join(self.params)}")


class ConflictingDescription(ValueError):
    pass


class UnknownModel(KeyError):
    pass


class LdmStore:
    """Append-only item store indexed by (name, region).

    Expired items are never evicted; they just stop matching queries.
    """

    def __init__(self, registry: SemanticRegistry | None = None, clock_ms: int = 0):
        self.registry = registry if registry is not None else default_registry()
        self.clock_ms = clock_ms
        self._by_key: dict[tuple[SemanticName, str], list[tuple[int, ContentItem]]] = defaultdict(list)
        self._by_id: dict[str, ContentItem] = {}
        self._seq = 0

    def insert(self, item: ContentItem) -> str:
        if item.item_id in self._by_id:
            raise DuplicateId(item.item_id)
        if not validate_value(self.registry, item.name, item.value):
            raise ValueError(f"value {item.value!r} not in domain of {item.name}")
        self._by_key[(item.name, item.region)].append((self._seq, item))
        self._by_id[item.item_id] = item
        self._seq += 1
        return item.item_id

    def query(self, name: SemanticName | str, region: str, at_ms: int) -> ContentItem | None:
        best = None
        best_key = None
        for seq, item in self._by_key.get((as_name(name), region), ()):
            if not item.validity.contains(at_ms):
                continue
            key = (item.validity.start_ms, seq)
            if best_key is None or key > best_key:
                best, best_key = item, key
        return best

    def get(self, item_id: str) -> ContentItem | None:
        return self._by_id.get(item_id)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def __len__(self):
        return len(self._by_id)

    def items(self) -> list[ContentItem]:
        """Items in insertion order."""
        return list(self._by_id.values())

    def gather_inputs(self, desc: ModelDescription, region: str, at_ms: int) -> dict[str, ContentItem]:
        found: dict[str, ContentItem] = {}
        missing = []
        for b in desc.inputs:
            item = self.query(b.type_name, region, at_ms)
            limit = desc.max_age(b.param_id)
            if item is None or (limit is not None and at_ms - item.validity.start_ms > limit):
                missing.append(b.param_id)
            else:
                found[b.param_id] = item
        if missing:
            raise MissingInputs(missing)
        return found

    def dump(self) -> str:
        rows = sorted(self._by_id.values(),
                      key=lambda it: (str(it.name), it.region, it.validity.start_ms, it.item_id))
        lines = []
        for it in rows:
            prov = ""
            if it.provenance is not None:
                prov = f" from {it.provenance.model_id}({','.join(it.provenance.input_ids)})"
            lines.append(
                f"{it.name} {it.region} [{it.validity.start_ms},{it.validity.end_ms}] "
                f"{it.item_id} {it.value} L{it.layer} {it.size_bytes}B {it.kind}{prov}"
            )
        return "\n".join(lines) + ("\n" if lines else "")


@dataclass
class KnowledgeBase:
    """Known model descriptions, plus bytecodes installed on this node.

    Descriptions may exist without bytecode; a bytecode never exists without
    its description.
    """

    descriptions: dict[str, ModelDescription] = field(default_factory=dict)
    bytecodes: dict[str, "ModelBytecode"] = field(default_factory=dict)

    def register_description(self, desc: ModelDescription) -> None:
        known = self.descriptions.get(desc.model_id)
        if known is not None and known != desc:
            raise ConflictingDescription(
                f"{desc.model_id} already registered with different content:\n"
                f"{serialize_vkmd(known)}---\n{serialize_vkmd(desc)}"
            )
        self.descriptions[desc.model_id] = desc

    def lookup_description(self, model_id: str) -> ModelDescription | None:
        return self.descriptions.get(model_id)

    def install_bytecode(self, bc: "ModelBytecode") -> None:
        if bc.model_id not in self.descriptions:
            raise UnknownModel(bc.model_id)
        self.bytecodes[bc.model_id] = bc

    def has_bytecode(self, model_id: str) -> bool:
        return model_id in self.bytecodes

    def get_bytecode(self, model_id: str) -> "ModelBytecode | None":
        return self.bytecodes.get(model_id)

    def producers(self, name: SemanticName | str) -> list[ModelDescription]:
        """Descriptions with an output of the given type, sorted by model id."""
        name = as_name(name)
        return [d for _, d in sorted(self.descriptions.items()) if name in d.output_names()]

    def match(self, query: str) -> list[ModelDescription]:
        """Descriptions whose model id equals ``query`` or that produce it."""
        out = []
        for mid, d in sorted(self.descriptions.items()):
            if mid == query or any(str(n) == query for n in d.output_names()):
                out.append(d)
        return out
