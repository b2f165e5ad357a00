"""VKMD: a line-oriented model description format.

Each VKMD file carries the same fields as an OWL-S process model::

    model model.env_comfort
    input traffic : Road.Traffic
    input visibility : Road.Visibility
    input twoWheelers : TwoWheelers.Concentration
    output comfort : Road.ComfortLevel
    precondition max_age traffic 60000

OWL-S mapping: ``AtomicProcess ID`` -> ``model``; ``Input ID`` with its
``parameterType`` -> ``input``; ``Output ID`` -> ``output``; input age
conditions -> ``precondition max_age``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .semantic import MalformedName, SemanticName, SemanticRegistry, parse_semantic_name

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
MODEL_ID_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*(\.[A-Za-z][A-Za-z0-9_]*)*\Z")

PRECONDITION_KINDS = ("max_age",)


class VkmdError(ValueError):
    line: int | None = None


class VkmdSyntaxError(VkmdError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class DuplicateParam(VkmdError):
    def __init__(self, param_id: str, line: int | None = None):
        where = f"{line}: " if line is not None else ""
        super().__init__(f"{where}duplicate param {param_id!r}")
        self.param_id = param_id
        self.line = line


class MissingSection(VkmdError):
    def __init__(self, section: str):
        super().__init__(f"missing {section} section")
        self.section = section


class DanglingPrecondition(VkmdError):
    def __init__(self, param_id: str, line: int | None = None):
        where = f"{line}: " if line is not None else ""
        super().__init__(f"{where}precondition references undeclared input {param_id!r}")
        self.param_id = param_id
        self.line = line


@dataclass(frozen=True)
class ParamBinding:
    param_id: str
    type_name: SemanticName


@dataclass(frozen=True)
class Precondition:
    kind: str
    param_id: str
    threshold_ms: int


@dataclass(frozen=True)
class ModelDescription:
    model_id: str
    inputs: tuple[ParamBinding, ...]
    outputs: tuple[ParamBinding, ...]
    preconditions: tuple[Precondition, ...] = ()

    def __post_init__(self):
        if not self.model_id or not MODEL_ID_RE.match(self.model_id):
            raise VkmdError(f"bad model id {self.model_id!r}")
        if not self.inputs:
            raise MissingSection("input")
        if not self.outputs:
            raise MissingSection("output")
        seen: set[str] = set()
        for b in self.inputs + self.outputs:
            if b.param_id in seen:
                raise DuplicateParam(b.param_id)
            seen.add(b.param_id)
        input_ids = {b.param_id for b in self.inputs}
        for pc in self.preconditions:
            if pc.param_id not in input_ids:
                raise DanglingPrecondition(pc.param_id)

    def input_names(self) -> tuple[SemanticName, ...]:
        return tuple(b.type_name for b in self.inputs)

    def output_names(self) -> tuple[SemanticName, ...]:
        return tuple(b.type_name for b in self.outputs)

    def max_age(self, param_id: str) -> int | None:
        limits = [pc.threshold_ms for pc in self.preconditions
                  if pc.kind == "max_age" and pc.param_id == param_id]
        return min(limits) if limits else None


@dataclass(frozen=True)
class ValidationIssue:
    param_id: str
    type_name: SemanticName
    reason: str = "UnknownTypeName"

    def __str__(self):
        return f"{self.reason}({self.type_name}) for param {self.param_id}"


def _tokens(line: str) -> list[tuple[int, str]]:
    """Split on runs of spaces, keeping 1-based columns."""
    return [(m.start() + 1, m.group()) for m in re.finditer(r"[^ ]+", line)]


def _binding(lineno: int, line: str, toks: list[tuple[int, str]]) -> ParamBinding:
    # accepts "input x : T", "input x: T" and "input x :T"
    rest_col = toks[1][0] if len(toks) > 1 else len(line) + 1
    rest = line[rest_col - 1:]
    if ":" not in rest:
        raise VkmdSyntaxError(lineno, rest_col, f"expected '<param_id> : <SemanticName>' after {toks[0][1]!r}")
    pid, tname = rest.split(":", 1)
    pid_s, tname_s = pid.strip(), tname.strip()
    if not IDENT_RE.match(pid_s):
        raise VkmdSyntaxError(lineno, rest_col, f"bad param id {pid_s!r}")
    type_col = rest_col + len(pid) + 1 + (len(tname) - len(tname.lstrip()))
    try:
        tn = parse_semantic_name(tname_s)
    except MalformedName as exc:
        raise VkmdSyntaxError(lineno, type_col, str(exc)) from None
    return ParamBinding(pid_s, tn)


def parse_vkmd(text: str) -> ModelDescription:
    model_id = None
    inputs: list[ParamBinding] = []
    outputs: list[ParamBinding] = []
    preconds: list[Precondition] = []
    seen: dict[str, int] = {}
    # section order: model(0) < input(1) < output(2) < precondition(3)
    stage = -1
    order = {"model": 0, "input": 1, "output": 2, "precondition": 3}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if "\t" in line:
            raise VkmdSyntaxError(lineno, line.index("\t") + 1, "tabs are not allowed")
        stripped = line.strip(" ")
        if not stripped or stripped.startswith("#"):
            continue
        toks = _tokens(line)
        col, kw = toks[0]
        if kw not in order:
            raise VkmdSyntaxError(lineno, col, f"unknown keyword {kw!r}")
        if order[kw] < stage or (kw == "model" and stage == 0):
            raise VkmdSyntaxError(lineno, col, f"{kw!r} line out of order")
        if stage == -1 and kw != "model":
            raise VkmdSyntaxError(lineno, col, "first line must be 'model <model_id>'")
        if kw == "output" and stage < 1:
            raise MissingSection("input")
        if kw == "precondition" and stage < 2:
            raise MissingSection("output")
        stage = order[kw]

        if kw == "model":
            if len(toks) != 2:
                raise VkmdSyntaxError(lineno, col, "expected 'model <model_id>'")
            mcol, mid = toks[1]
            if not MODEL_ID_RE.match(mid):
                raise VkmdSyntaxError(lineno, mcol, f"bad model id {mid!r}")
            model_id = mid
        elif kw in ("input", "output"):
            b = _binding(lineno, line, toks)
            if b.param_id in seen:
                raise DuplicateParam(b.param_id, lineno)
            seen[b.param_id] = lineno
            (inputs if kw == "input" else outputs).append(b)
        else:
            if len(toks) != 4:
                raise VkmdSyntaxError(lineno, col, "expected 'precondition <kind> <param_id> <threshold_ms>'")
            (kcol, kind), (pcol, pid), (tcol, thr) = toks[1:]
            if kind not in PRECONDITION_KINDS:
                raise VkmdSyntaxError(lineno, kcol, f"unknown precondition kind {kind!r}")
            if not IDENT_RE.match(pid):
                raise VkmdSyntaxError(lineno, pcol, f"bad param id {pid!r}")
            if not thr.isdigit() or int(thr) <= 0:
                raise VkmdSyntaxError(lineno, tcol, f"threshold must be a positive integer, got {thr!r}")
            if pid not in {b.param_id for b in inputs}:
                raise DanglingPrecondition(pid, lineno)
            preconds.append(Precondition(kind, pid, int(thr)))

    if model_id is None:
        raise MissingSection("model")
    if not inputs:
        raise MissingSection("input")
    if not outputs:
        raise MissingSection("output")
    return ModelDescription(model_id, tuple(inputs), tuple(outputs), tuple(preconds))


def serialize_vkmd(desc: ModelDescription) -> str:
    lines = [f"model {desc.model_id}"]
    lines += [f"input {b.param_id} : {b.type_name}" for b in desc.inputs]
    lines += [f"output {b.param_id} : {b.type_name}" for b in desc.outputs]
    lines += [f"precondition {p.kind} {p.param_id} {p.threshold_ms}" for p in desc.preconditions]
    return "\n".join(lines) + "\n"


def validate_description(desc: ModelDescription, registry: SemanticRegistry) -> list[ValidationIssue]:
    return [ValidationIssue(b.param_id, b.type_name)
            for b in desc.inputs + desc.outputs if b.type_name not in registry]
