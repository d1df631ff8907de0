"""EQB-1: a big-endian, length-prefixed binary equity order feed.

Frame layout::

    u16 payload_length
    u8  type            one of A E X D U P
    u64 timestamp_ns
    ... type-specific fields (table below)

    A  add           u64 order_id, c side, u32 shares, 8s symbol, u32 price
    E  execute       u64 order_id, u32 executed_shares, u64 match_id
    X  cancel        u64 order_id, u32 canceled_shares
    D  delete        u64 order_id
    U  replace       u64 order_id, u64 new_order_id, u32 new_shares, u32 new_price
    P  hidden trade  u64 order_id, c side, u32 shares, 8s symbol, u32 price, u64 match_id

Prices are in 1e-4 dollars, sides are ``b'B'``/``b'S'``, symbols are ASCII
right-padded with spaces to 8 bytes.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator, Union

from ..errors import IncompleteFrame, MalformedMessage, UnknownMessage

BID = "B"
ASK = "S"

_LEN = struct.Struct(">H")
_HEAD = struct.Struct(">cQ")


@dataclass(frozen=True, slots=True)
class AddOrder:
    ts: int
    order_id: int
    side: str
    shares: int
    symbol: str
    price: int


@dataclass(frozen=True, slots=True)
class OrderExecuted:
    ts: int
    order_id: int
    executed_shares: int
    match_id: int


@dataclass(frozen=True, slots=True)
class OrderCancel:
    ts: int
    order_id: int
    canceled_shares: int


@dataclass(frozen=True, slots=True)
class OrderDelete:
    ts: int
    order_id: int


@dataclass(frozen=True, slots=True)
class OrderReplace:
    ts: int
    order_id: int
    new_order_id: int
    new_shares: int
    new_price: int


@dataclass(frozen=True, slots=True)
class HiddenTrade:
    ts: int
    order_id: int
    side: str
    shares: int
    symbol: str
    price: int
    match_id: int


EquityMessage = Union[AddOrder, OrderExecuted, OrderCancel, OrderDelete, OrderReplace, HiddenTrade]

# type byte -> (class, body struct, field names in wire order)
_LAYOUT = {
    b"A": (AddOrder, struct.Struct(">QcI8sI"),
           ("order_id", "side", "shares", "symbol", "price")),
    b"E": (OrderExecuted, struct.Struct(">QIQ"), ("order_id", "executed_shares", "match_id")),
    b"X": (OrderCancel, struct.Struct(">QI"), ("order_id", "canceled_shares")),
    b"D": (OrderDelete, struct.Struct(">Q"), ("order_id",)),
    b"U": (OrderReplace, struct.Struct(">QQII"),
           ("order_id", "new_order_id", "new_shares", "new_price")),
    b"P": (HiddenTrade, struct.Struct(">QcI8sIQ"),
           ("order_id", "side", "shares", "symbol", "price", "match_id")),
}
_TYPE_OF = {cls: tb for tb, (cls, _, _) in _LAYOUT.items()}
PAYLOAD_SIZE = {tb: _HEAD.size + body.size for tb, (_, body, _) in _LAYOUT.items()}


def _pack_symbol(sym: str) -> bytes:
    raw = sym.encode("ascii")
    if len(raw) > 8:
        raise MalformedMessage(f"symbol too long: {sym!r}")
    return raw.ljust(8, b" ")


def _unpack_symbol(raw: bytes) -> str:
    if any(b < 0x20 or b > 0x7E for b in raw):
        raise MalformedMessage(f"malformed symbol bytes {raw!r}")
    return raw.decode("ascii").rstrip(" ")


def encode(msg: EquityMessage) -> bytes:
    """Serialise one message as a complete frame."""
    tb = _TYPE_OF[type(msg)]
    _, body, names = _LAYOUT[tb]
    vals = []
    for name in names:
        v = getattr(msg, name)
        if name == "side":
            if v not in (BID, ASK):
                raise MalformedMessage(f"bad side {v!r}")
            v = v.encode("ascii")
        elif name == "symbol":
            v = _pack_symbol(v)
        vals.append(v)
    try:
        payload = _HEAD.pack(tb, msg.ts) + body.pack(*vals)
    except struct.error as exc:
        raise MalformedMessage(str(exc)) from None
    return _LEN.pack(len(payload)) + payload


def decode(buf: bytes | memoryview, offset: int = 0) -> tuple[EquityMessage, int]:
    """Decode the frame starting at ``offset``; returns ``(message, bytes_consumed)``."""
    if len(buf) - offset < _LEN.size:
        raise IncompleteFrame()
    (plen,) = _LEN.unpack_from(buf, offset)
    if len(buf) - offset - _LEN.size < plen:
        raise IncompleteFrame()
    if plen < 1:
        raise MalformedMessage("empty payload")
    tb = bytes(buf[offset + 2:offset + 3])
    layout = _LAYOUT.get(tb)
    if layout is None:
        raise UnknownMessage(tb)
    cls, body, names = layout
    if plen != PAYLOAD_SIZE[tb]:
        raise MalformedMessage(f"type {tb!r} frame length {plen}, expected {PAYLOAD_SIZE[tb]}")
    _, ts = _HEAD.unpack_from(buf, offset + 2)
    vals = body.unpack_from(buf, offset + 2 + _HEAD.size)
    kw = {"ts": ts}
    for name, v in zip(names, vals):
        if name == "side":
            if v not in (b"B", b"S"):
                raise MalformedMessage(f"bad side byte {v!r}")
            v = v.decode("ascii")
        elif name == "symbol":
            v = _unpack_symbol(v)
        kw[name] = v
    return cls(**kw), _LEN.size + plen


def iter_messages(buf: bytes | memoryview) -> Iterator[EquityMessage]:
    """Decode every frame in ``buf``; a trailing partial frame raises IncompleteFrame."""
    view = memoryview(buf)
    off = 0
    n = len(view)
    while off < n:
        msg, used = decode(view, off)
        off += used
        yield msg


def decode_all(buf: bytes | memoryview) -> list[EquityMessage]:
    return list(iter_messages(buf))


def encode_all(msgs) -> bytes:
    return b"".join(encode(m) for m in msgs)
