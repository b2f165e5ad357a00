"""VKQL messages for description lookup and bytecode transfer, delegated creation and info retrieval.

Wire format (all integers big-endian)::

    header   msg_id u32 | kind u8 | corr u32 | size_bytes u32
             src: u8 length + utf-8
             dst: u8 tag (0 node, 1 region) | u8 length + utf-8
             zero padding up to header_bytes
    body     kind-specific fields, strings as u16 length + utf-8;
             request and ERROR bodies are zero-padded up to request_bytes

``corr`` is the id of the originating request; forwards and responses copy it.
Bytecode and item payloads are not shipped, only their declared sizes, so the
accounted ``size_bytes`` comes from the size model rather than the byte count.
"""

from __future__ import annotations

import enum
import itertools
import struct
from dataclasses import dataclass, field, replace
from typing import Union

from .engine import HANDLERS, ExecutionError, execute, make_bytecode
from .ldm import KnowledgeBase, LdmStore, MissingInputs
from .semantic import ContentItem, Provenance, TimeInterval, parse_semantic_name
from .vkmd import ModelDescription, parse_vkmd, serialize_vkmd


class Kind(enum.IntEnum):
    DESCRIBE_REQ = 1
    DESCRIBE_RESP = 2
    BYTECODE_REQ = 3
    BYTECODE_RESP = 4
    CREATE_REQ = 5
    CREATE_RESP = 6
    INFO_REQ = 7
    INFO_RESP = 8
    ERROR = 9


REQUEST_KINDS = frozenset({Kind.DESCRIBE_REQ, Kind.BYTECODE_REQ, Kind.CREATE_REQ, Kind.INFO_REQ})

NOT_FOUND = "NOT_FOUND"
INPUTS_UNAVAILABLE = "INPUTS_UNAVAILABLE"
KNOWLEDGE_UNAVAILABLE = "KNOWLEDGE_UNAVAILABLE"
ERROR_CODES = (NOT_FOUND, INPUTS_UNAVAILABLE, KNOWLEDGE_UNAVAILABLE)


class DecodeError(ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


@dataclass(frozen=True)
class RegionAddr:
    region: str

    def __str__(self):
        return f"region:{self.region}"


Address = Union[str, RegionAddr]


@dataclass(frozen=True)
class DescribeReq:
    query: str
    reply_to: str


@dataclass(frozen=True)
class DescribeResp:
    descriptions: tuple[ModelDescription, ...]


@dataclass(frozen=True)
class BytecodeReq:
    model_id: str
    reply_to: str


@dataclass(frozen=True)
class BytecodeResp:
    model_id: str
    size_bytes: int
    compute_ms: int
    sample_size_bytes: int


@dataclass(frozen=True)
class CreateReq:
    model_id: str
    target_region: str
    at_ms: int
    reply_to: str
    visited: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.model_id:
            raise ValueError("CreateReq.model_id must be non-empty")


@dataclass(frozen=True)
class CreateResp:
    sample: ContentItem


@dataclass(frozen=True)
class InfoReq:
    name: str
    region: str
    at_ms: int
    reply_to: str


@dataclass(frozen=True)
class InfoResp:
    item: ContentItem


@dataclass(frozen=True)
class ErrorBody:
    code: str
    detail: str = ""


BODY_TYPES = {
    Kind.DESCRIBE_REQ: DescribeReq,
    Kind.DESCRIBE_RESP: DescribeResp,
    Kind.BYTECODE_REQ: BytecodeReq,
    Kind.BYTECODE_RESP: BytecodeResp,
    Kind.CREATE_REQ: CreateReq,
    Kind.CREATE_RESP: CreateResp,
    Kind.INFO_REQ: InfoReq,
    Kind.INFO_RESP: InfoResp,
    Kind.ERROR: ErrorBody,
}


@dataclass(frozen=True)
class SizeModel:
    header_bytes: int = 32
    request_bytes: int = 64

    def message_size(self, kind: Kind, body) -> int:
        if kind == Kind.DESCRIBE_RESP:
            payload = sum(len(serialize_vkmd(d).encode()) for d in body.descriptions)
        elif kind == Kind.BYTECODE_RESP:
            payload = body.size_bytes
        elif kind == Kind.INFO_RESP:
            payload = body.item.size_bytes
        elif kind == Kind.CREATE_RESP:
            payload = body.sample.size_bytes
        else:
            payload = self.request_bytes
        return self.header_bytes + payload


DEFAULT_SIZES = SizeModel()


def message_size(kind: Kind, body, sizes: SizeModel = DEFAULT_SIZES) -> int:
    return sizes.message_size(kind, body)


@dataclass(frozen=True)
class VkqlMessage:
    msg_id: int
    kind: Kind
    src: str
    dst: Address
    body: object
    size_bytes: int
    corr: int = 0

    @property
    def reply_to(self) -> str | None:
        return getattr(self.body, "reply_to", None)


class MessageFactory:
    """Allocates message ids and stamps sizes from one size model."""

    def __init__(self, sizes: SizeModel = DEFAULT_SIZES, first_id: int = 1):
        self.sizes = sizes
        self._ids = itertools.count(first_id)

    def make(self, kind: Kind, src: str, dst: Address, body, corr: int | None = None) -> VkqlMessage:
        if not isinstance(body, BODY_TYPES[kind]):
            raise TypeError(f"{kind.name} needs a {BODY_TYPES[kind].__name__} body")
        mid = next(self._ids)
        return VkqlMessage(mid, kind, src, dst, body, self.sizes.message_size(kind, body),
                           mid if corr is None else corr)


# ---- codec -----------------------------------------------------------------

class _Writer:
    def __init__(self):
        self.buf = bytearray()

    def u8(self, v):
        self.buf += struct.pack(">B", v)

    def u16(self, v):
        self.buf += struct.pack(">H", v)

    def u32(self, v):
        self.buf += struct.pack(">I", v)

    def i64(self, v):
        self.buf += struct.pack(">q", v)

    def f64(self, v):
        self.buf += struct.pack(">d", v)

    def s8(self, s: str):
        b = s.encode()
        if len(b) > 0xFF:
            raise ValueError(f"header string too long: {s!r}")
        self.u8(len(b))
        self.buf += b

    def s16(self, s: str):
        b = s.encode()
        if len(b) > 0xFFFF:
            raise ValueError("string too long")
        self.u16(len(b))
        self.buf += b

    def pad_to(self, start: int, width: int):
        used = len(self.buf) - start
        if used < width:
            self.buf += bytes(width - used)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError(self.pos, f"need {n} bytes, have {len(self.data) - self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self):
        return self.take(1)[0]

    def u16(self):
        return struct.unpack(">H", self.take(2))[0]

    def u32(self):
        return struct.unpack(">I", self.take(4))[0]

    def i64(self):
        return struct.unpack(">q", self.take(8))[0]

    def f64(self):
        return struct.unpack(">d", self.take(8))[0]

    def _str(self, n: int) -> str:
        at = self.pos
        try:
            return self.take(n).decode()
        except UnicodeDecodeError:
            raise DecodeError(at, "invalid utf-8") from None

    def s8(self):
        return self._str(self.u8())

    def s16(self):
        return self._str(self.u16())

    def skip_to(self, start: int, width: int):
        used = self.pos - start
        if used < width:
            pad = self.take(width - used)
            if any(pad):
                raise DecodeError(self.pos - len(pad), "non-zero padding")


_VAL_SYMBOL, _VAL_INT, _VAL_FLOAT = 0, 1, 2


def _put_item(w: _Writer, it: ContentItem):
    w.s16(it.item_id)
    w.s16(str(it.name))
    if isinstance(it.value, str):
        w.u8(_VAL_SYMBOL)
        w.s16(it.value)
    elif isinstance(it.value, int):
        w.u8(_VAL_INT)
        w.i64(it.value)
    else:
        w.u8(_VAL_FLOAT)
        w.f64(it.value)
    w.s16(it.region)
    w.i64(it.validity.start_ms)
    w.i64(it.validity.end_ms)
    w.u8(it.layer)
    w.u32(it.size_bytes)
    if it.provenance is None:
        w.u8(0)
    else:
        w.u8(1)
        w.s16(it.provenance.model_id)
        w.u16(len(it.provenance.input_ids))
        for i in it.provenance.input_ids:
            w.s16(i)


def _get_item(r: _Reader) -> ContentItem:
    at = r.pos
    item_id = r.s16()
    name = r.s16()
    tag = r.u8()
    if tag == _VAL_SYMBOL:
        value = r.s16()
    elif tag == _VAL_INT:
        value = r.i64()
    elif tag == _VAL_FLOAT:
        value = r.f64()
    else:
        raise DecodeError(r.pos - 1, f"unknown value tag {tag}")
    region = r.s16()
    start, end = r.i64(), r.i64()
    layer = r.u8()
    size = r.u32()
    prov = None
    if r.u8():
        mid = r.s16()
        prov = Provenance(mid, tuple(r.s16() for _ in range(r.u16())))
    try:
        return ContentItem(item_id, parse_semantic_name(name), value, region,
                           TimeInterval(start, end), layer, size, prov)
    except ValueError as exc:
        raise DecodeError(at, f"invalid item: {exc}") from None


def encode(msg: VkqlMessage, sizes: SizeModel = DEFAULT_SIZES) -> bytes:
    w = _Writer()
    w.u32(msg.msg_id)
    w.u8(int(msg.kind))
    w.u32(msg.corr)
    w.u32(msg.size_bytes)
    w.s8(msg.src)
    if isinstance(msg.dst, RegionAddr):
        w.u8(1)
        w.s8(msg.dst.region)
    else:
        w.u8(0)
        w.s8(msg.dst)
    w.pad_to(0, sizes.header_bytes)
    body_start = len(w.buf)
    b = msg.body
    k = msg.kind
    if k == Kind.DESCRIBE_REQ:
        w.s16(b.query)
        w.s16(b.reply_to)
    elif k == Kind.DESCRIBE_RESP:
        w.u16(len(b.descriptions))
        for d in b.descriptions:
            w.s16(serialize_vkmd(d))
    elif k == Kind.BYTECODE_REQ:
        w.s16(b.model_id)
        w.s16(b.reply_to)
    elif k == Kind.BYTECODE_RESP:
        w.s16(b.model_id)
        w.u32(b.size_bytes)
        w.u32(b.compute_ms)
        w.u32(b.sample_size_bytes)
    elif k == Kind.CREATE_REQ:
        w.s16(b.model_id)
        w.s16(b.target_region)
        w.i64(b.at_ms)
        w.s16(b.reply_to)
        w.u8(len(b.visited))
        for v in b.visited:
            w.s16(v)
    elif k in (Kind.CREATE_RESP, Kind.INFO_RESP):
        _put_item(w, b.sample if k == Kind.CREATE_RESP else b.item)
    elif k == Kind.INFO_REQ:
        w.s16(b.name)
        w.s16(b.region)
        w.i64(b.at_ms)
        w.s16(b.reply_to)
    elif k == Kind.ERROR:
        w.s16(b.code)
        w.s16(b.detail)
    if k in REQUEST_KINDS or k == Kind.ERROR:
        w.pad_to(body_start, sizes.request_bytes)
    return bytes(w.buf)


def decode(data: bytes, sizes: SizeModel = DEFAULT_SIZES) -> VkqlMessage:
    r = _Reader(bytes(data))
    msg_id = r.u32()
    kind_raw = r.u8()
    try:
        kind = Kind(kind_raw)
    except ValueError:
        raise DecodeError(4, f"unknown message kind {kind_raw}") from None
    corr = r.u32()
    size = r.u32()
    src = r.s8()
    tag = r.u8()
    if tag not in (0, 1):
        raise DecodeError(r.pos - 1, f"unknown address tag {tag}")
    dst_s = r.s8()
    dst: Address = RegionAddr(dst_s) if tag == 1 else dst_s
    r.skip_to(0, sizes.header_bytes)
    body_start = r.pos
    if kind == Kind.DESCRIBE_REQ:
        body = DescribeReq(r.s16(), r.s16())
    elif kind == Kind.DESCRIBE_RESP:
        descs = []
        for _ in range(r.u16()):
            at = r.pos
            text = r.s16()
            try:
                descs.append(parse_vkmd(text))
            except ValueError as exc:
                raise DecodeError(at, f"bad VKMD payload: {exc}") from None
        body = DescribeResp(tuple(descs))
    elif kind == Kind.BYTECODE_REQ:
        body = BytecodeReq(r.s16(), r.s16())
    elif kind == Kind.BYTECODE_RESP:
        body = BytecodeResp(r.s16(), r.u32(), r.u32(), r.u32())
    elif kind == Kind.CREATE_REQ:
        mid, region, at_ms, reply = r.s16(), r.s16(), r.i64(), r.s16()
        visited = tuple(r.s16() for _ in range(r.u8()))
        try:
            body = CreateReq(mid, region, at_ms, reply, visited)
        except ValueError as exc:
            raise DecodeError(body_start, str(exc)) from None
    elif kind == Kind.CREATE_RESP:
        body = CreateResp(_get_item(r))
    elif kind == Kind.INFO_RESP:
        body = InfoResp(_get_item(r))
    elif kind == Kind.INFO_REQ:
        body = InfoReq(r.s16(), r.s16(), r.i64(), r.s16())
    else:
        body = ErrorBody(r.s16(), r.s16())
    if kind in REQUEST_KINDS or kind == Kind.ERROR:
        r.skip_to(body_start, sizes.request_bytes)
    if r.pos != len(r.data):
        raise DecodeError(r.pos, f"{len(r.data) - r.pos} trailing bytes")
    return VkqlMessage(msg_id, kind, src, dst, body, size, corr)


# ---- node behaviour --------------------------------------------------------

@dataclass
class NodeRole:
    """A network node with its on-board KB and LDM.

    ``peer_bytecodes`` maps the other nodes of this node's region to the model
    ids they hold; it is the static directory used to forward delegated work.
    """

    node_id: str
    region: str
    is_area_server: bool = False
    kb: KnowledgeBase = field(default_factory=KnowledgeBase)
    ldm: LdmStore = field(default_factory=LdmStore)
    peer_bytecodes: dict[str, frozenset[str]] = field(default_factory=dict)


def _error(factory: MessageFactory, node: NodeRole, msg: VkqlMessage, to: str, code: str,
           detail: str) -> VkqlMessage:
    return factory.make(Kind.ERROR, node.node_id, to, ErrorBody(code, detail), corr=msg.corr)


def handle_message(node: NodeRole, msg: VkqlMessage, now_ms: int,
                   factory: MessageFactory) -> list[tuple[VkqlMessage, int]]:
    """Process ``msg`` at ``node``; return outgoing messages with their send delays."""
    k, b, me = msg.kind, msg.body, node.node_id

    if k == Kind.DESCRIBE_REQ:
        found = tuple(node.kb.match(b.query))
        return [(factory.make(Kind.DESCRIBE_RESP, me, b.reply_to, DescribeResp(found), corr=msg.corr), 0)]

    if k == Kind.BYTECODE_REQ:
        bc = node.kb.get_bytecode(b.model_id)
        if bc is None:
            return [(_error(factory, node, msg, b.reply_to, NOT_FOUND, f"bytecode {b.model_id}"), 0)]
        body = BytecodeResp(bc.model_id, bc.size_bytes, bc.compute_ms, bc.sample_size_bytes)
        return [(factory.make(Kind.BYTECODE_RESP, me, b.reply_to, body, corr=msg.corr), 0)]

    if k == Kind.CREATE_REQ:
        bc = node.kb.get_bytecode(b.model_id)
        desc = node.kb.lookup_description(b.model_id)
        if bc is None or desc is None:
            visited = set(b.visited) | {me}
            peers = sorted(p for p, models in node.peer_bytecodes.items()
                           if b.model_id in models and p not in visited)
            if peers:
                fwd = replace(b, visited=b.visited + (me,))
                return [(factory.make(Kind.CREATE_REQ, me, peers[0], fwd, corr=msg.corr), 0)]
            return [(_error(factory, node, msg, b.reply_to, KNOWLEDGE_UNAVAILABLE,
                            f"{b.model_id} in {b.target_region}"), 0)]
        try:
            inputs = node.ldm.gather_inputs(desc, b.target_region, b.at_ms)
            sample = execute(desc, bc, inputs, b.at_ms, bc.sample_size_bytes, registry=node.ldm.registry)
        except MissingInputs as exc:
            return [(_error(factory, node, msg, b.reply_to, INPUTS_UNAVAILABLE, ",".join(exc.params)), 0)]
        except ExecutionError as exc:
            return [(_error(factory, node, msg, b.reply_to, INPUTS_UNAVAILABLE, str(exc)), 0)]
        if sample.item_id not in node.ldm:
            node.ldm.insert(sample)
        resp = factory.make(Kind.CREATE_RESP, me, b.reply_to, CreateResp(sample), corr=msg.corr)
        return [(resp, bc.compute_ms)]

    if k == Kind.INFO_REQ:
        item = node.ldm.query(b.name, b.region, b.at_ms)
        if item is None:
            return [(_error(factory, node, msg, b.reply_to, NOT_FOUND, f"{b.name} in {b.region}"), 0)]
        return [(factory.make(Kind.INFO_RESP, me, b.reply_to, InfoResp(item), corr=msg.corr), 0)]

    # responses terminate here; keep what they carry
    if k == Kind.DESCRIBE_RESP:
        for d in b.descriptions:
            node.kb.register_description(d)
    elif k == Kind.BYTECODE_RESP:
        if b.model_id in HANDLERS and node.kb.lookup_description(b.model_id) is not None:
            node.kb.install_bytecode(
                make_bytecode(b.model_id, b.size_bytes, b.compute_ms, b.sample_size_bytes))
    elif k == Kind.INFO_RESP:
        if b.item.item_id not in node.ldm:
            node.ldm.insert(b.item)
    elif k == Kind.CREATE_RESP:
        if b.sample.item_id not in node.ldm:
            node.ldm.insert(b.sample)
    return []

