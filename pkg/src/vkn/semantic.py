"""Semantic names with their value domains, and the content items kept in the LDM."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

Value = Union[str, int, float]

SEGMENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
SYMBOL_RE = re.compile(r"[A-Z][A-Z0-9_]*\Z")

LAYERS = (1, 2, 3, 4)
KNOWLEDGE_LAYER = 3


class MalformedName(ValueError):
    pass


class UnknownName(KeyError):
    def __init__(self, name):
        super().__init__(str(name))
        self.name = name

    def __str__(self):
        return f"unknown semantic name {self.name}"


class RegistryError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvalidContent(ValueError):
    pass


@dataclass(frozen=True, order=True)
class SemanticName:
    path: tuple[str, ...]

    def __post_init__(self):
        if not self.path:
            raise MalformedName("semantic name needs at least one segment")
        for seg in self.path:
            if not isinstance(seg, str) or not SEGMENT_RE.match(seg):
                raise MalformedName(f"illegal segment {seg!r}")

    def __str__(self):
        return ".".join(self.path)

    def __repr__(self):
        return f"SemanticName({str(self)!r})"


def parse_semantic_name(text: str) -> SemanticName:
    if not isinstance(text, str) or text == "":
        raise MalformedName("empty name")
    segments = text.split(".")
    for seg in segments:
        if seg == "":
            raise MalformedName(f"empty segment in {text!r}")
        if not SEGMENT_RE.match(seg):
            raise MalformedName(f"illegal characters in segment {seg!r} of {text!r}")
    return SemanticName(tuple(segments))


def as_name(name: SemanticName | str) -> SemanticName:
    return name if isinstance(name, SemanticName) else parse_semantic_name(name)


@dataclass(frozen=True)
class ValueDomain:
    kind: str
    symbols: tuple[str, ...] = ()
    unit: str = ""

    def __post_init__(self):
        if self.kind == "symbolic":
            if len(self.symbols) < 2 or len(set(self.symbols)) != len(self.symbols):
                raise ValueError("symbolic domain needs >= 2 distinct symbols")
            for s in self.symbols:
                if not SYMBOL_RE.match(s):
                    raise ValueError(f"symbol {s!r} is not an uppercase literal")
        elif self.kind == "numeric":
            if self.symbols:
                raise ValueError("numeric domain carries no symbols")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def symbolic(cls, *symbols: str) -> "ValueDomain":
        return cls("symbolic", tuple(symbols))

    @classmethod
    def numeric(cls, unit: str) -> "ValueDomain":
        return cls("numeric", unit=unit)

    def contains(self, value: Value) -> bool:
        if self.kind == "symbolic":
            return isinstance(value, str) and value in self.symbols
        return isinstance(value, (int, float)) and not isinstance(value, bool)


class SemanticRegistry:
    """Names bound to value domains. Each name registers once."""

    def __init__(self, entries: Iterable[tuple[SemanticName | str, ValueDomain]] = ()):
        self._entries: dict[SemanticName, ValueDomain] = {}
        for name, dom in entries:
            self.register(name, dom)

    def register(self, name: SemanticName | str, domain: ValueDomain) -> None:
        name = as_name(name)
        if name in self._entries:
            raise ValueError(f"{name} already registered")
        self._entries[name] = domain

    def lookup(self, name: SemanticName | str) -> ValueDomain:
        name = as_name(name)
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownName(name) from None

    def __contains__(self, name) -> bool:
        try:
            return as_name(name) in self._entries
        except MalformedName:
            return False

    def __len__(self):
        return len(self._entries)

    def names(self) -> list[SemanticName]:
        return list(self._entries)

    def items(self):
        return self._entries.items()

    def __eq__(self, other):
        return isinstance(other, SemanticRegistry) and self._entries == other._entries

    def dumps(self) -> str:
        lines = []
        for name, dom in self._entries.items():
            if dom.kind == "symbolic":
                lines.append(f"{name} = {'|'.join(dom.symbols)}")
            else:
                lines.append(f"{name} : {dom.unit}")
        return "\n".join(lines) + "\n"


def validate_value(registry: SemanticRegistry, name: SemanticName | str, value: Value) -> bool:
    return registry.lookup(name).contains(value)


def default_registry() -> SemanticRegistry:
    return SemanticRegistry(
        [
            ("Road.Traffic", ValueDomain.symbolic("FLUID", "CONGESTED")),
            ("Road.Visibility", ValueDomain.symbolic("CLEAR", "OBSTRUCTED")),
            ("TwoWheelers.Concentration", ValueDomain.symbolic("HIGH", "MEDIUM", "LOW")),
            ("Road.ComfortLevel", ValueDomain.symbolic("GOOD", "FAIR", "POOR")),
        ]
    )


def load_registry(text: str) -> SemanticRegistry:
    """Parse the line format ``NAME = A|B`` (symbolic) or ``NAME : unit`` (numeric)."""
    reg = SemanticRegistry()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            name_txt, rest = (s.strip() for s in line.split("=", 1))
            symbols = tuple(s.strip() for s in rest.split("|"))
            make = lambda: ValueDomain.symbolic(*symbols)  # noqa: E731
        elif ":" in line:
            name_txt, unit = (s.strip() for s in line.split(":", 1))
            make = lambda: ValueDomain.numeric(unit)  # noqa: E731
        else:
            raise RegistryError(lineno, f"expected '=' or ':' in {line!r}")
        try:
            name = parse_semantic_name(name_txt)
            dom = make()
        except ValueError as exc:
            raise RegistryError(lineno, str(exc)) from None
        if name in reg:
            raise RegistryError(lineno, f"duplicate name {name}")
        reg.register(name, dom)
    return reg


@dataclass(frozen=True)
class TimeInterval:
    start_ms: int
    end_ms: int

    def __post_init__(self):
        if self.start_ms > self.end_ms:
            raise ValueError(f"interval start {self.start_ms} > end {self.end_ms}")

    def contains(self, t: int) -> bool:
        return self.start_ms <= t <= self.end_ms

    def intersect(self, other: "TimeInterval") -> "TimeInterval | None":
        lo, hi = max(self.start_ms, other.start_ms), min(self.end_ms, other.end_ms)
        return TimeInterval(lo, hi) if lo <= hi else None


@dataclass(frozen=True)
class Provenance:
    model_id: str
    input_ids: tuple[str, ...]


@dataclass(frozen=True)
class ContentItem:
    """A named, valued, space-time scoped piece of information or knowledge.

    Structural invariants are checked here; value conformance needs a registry,
    so build items through :func:`make_item`.
    """

    item_id: str
    name: SemanticName
    value: Value
    region: str
    validity: TimeInterval
    layer: int
    size_bytes: int
    provenance: Provenance | None = None

    def __post_init__(self):
        if not self.item_id:
            raise InvalidContent("item_id must be non-empty")
        if not self.region:
            raise InvalidContent("region must be non-empty")
        if self.layer not in LAYERS:
            raise InvalidContent(f"layer {self.layer} outside 1..4")
        if not isinstance(self.size_bytes, int) or self.size_bytes < 1:
            raise InvalidContent(f"size_bytes must be >= 1, got {self.size_bytes}")

    @property
    def kind(self) -> str:
        return "information" if self.provenance is None else "knowledge"


def make_item(
    item_id: str,
    name: SemanticName | str,
    value: Value,
    region: str,
    validity: TimeInterval | tuple[int, int],
    *,
    layer: int | None = None,
    size_bytes: int = 1,
    provenance: Provenance | None = None,
    registry: SemanticRegistry | None = None,
) -> ContentItem:
    """Build a ContentItem whose value conforms to its registered domain."""
    registry = registry if registry is not None else default_registry()
    name = as_name(name)
    if not validate_value(registry, name, value):
        raise InvalidContent(f"value {value!r} not in domain of {name}")
    if not isinstance(validity, TimeInterval):
        validity = TimeInterval(*validity)
    if layer is None:
        layer = KNOWLEDGE_LAYER if provenance is not None else 4
    return ContentItem(item_id, name, value, region, validity, layer, size_bytes, provenance)

