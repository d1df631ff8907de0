"""Displayed-depth limit order book built from EQB-1 messages."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import NS_PER_MS
from ..errors import OrphanMessage, Overfill
from .eqb import (
    ASK,
    BID,
    AddOrder,
    EquityMessage,
    HiddenTrade,
    OrderCancel,
    OrderDelete,
    OrderExecuted,
    OrderReplace,
)


@dataclass(frozen=True, slots=True)
class BookDelta:
    ts: int  # ns
    side: str
    price: int
    signed_share_change: int


@dataclass
class LimitOrderBook:
    """Open orders and per-level displayed depth for one symbol.

    ``apply`` mutates the book and returns the per-level depth changes.
    Messages for other symbols are ignored. Messages referencing unknown
    orders are counted in ``orphans`` and skipped.
    """

    symbol: str
    open_orders: dict[int, list] = field(default_factory=dict)  # id -> [side, price, shares]
    depth: dict[tuple[str, int], int] = field(default_factory=dict)
    orphans: int = 0
    strict: bool = False
    _foreign: set = field(default_factory=set, repr=False)

    def _change(self, ts, side, price, delta, out):
        key = (side, price)
        new = self.depth.get(key, 0) + delta
        if new:
            self.depth[key] = new
        else:
            self.depth.pop(key, None)
        out.append(BookDelta(ts, side, price, delta))

    def _lookup(self, order_id):
        order = self.open_orders.get(order_id)
        if order is None:
            if order_id in self._foreign:
                return None
            if self.strict:
                raise OrphanMessage(order_id)
            self.orphans += 1
        return order

    def _reduce(self, ts, order_id, order, qty, out):
        if qty > order[2]:
            raise Overfill(order_id, qty, order[2])
        if qty == 0:
            return
        order[2] -= qty
        self._change(ts, order[0], order[1], -qty, out)
        if order[2] == 0:
            del self.open_orders[order_id]

    def apply(self, msg: EquityMessage) -> list[BookDelta]:
        out: list[BookDelta] = []
        if isinstance(msg, AddOrder):
            if msg.symbol != self.symbol:
                self._foreign.add(msg.order_id)
                return out
            if msg.shares <= 0:
                raise ValueError("add with nonpositive shares")
            self.open_orders[msg.order_id] = [msg.side, msg.price, msg.shares]
            self._change(msg.ts, msg.side, msg.price, msg.shares, out)
        elif isinstance(msg, OrderExecuted):
            order = self._lookup(msg.order_id)
            if order is not None:
                self._reduce(msg.ts, msg.order_id, order, msg.executed_shares, out)
        elif isinstance(msg, OrderCancel):
            order = self._lookup(msg.order_id)
            if order is not None:
                self._reduce(msg.ts, msg.order_id, order, msg.canceled_shares, out)
        elif isinstance(msg, OrderDelete):
            order = self._lookup(msg.order_id)
            if order is not None:
                self._reduce(msg.ts, msg.order_id, order, order[2], out)
        elif isinstance(msg, OrderReplace):
            order = self._lookup(msg.order_id)
            if order is None and msg.order_id in self._foreign:
                self._foreign.add(msg.new_order_id)
            elif order is not None:
                if msg.new_shares <= 0:
                    raise ValueError("replace with nonpositive shares")
                side = order[0]
                self._reduce(msg.ts, msg.order_id, order, order[2], out)
                self.open_orders[msg.new_order_id] = [side, msg.new_price, msg.new_shares]
                self._change(msg.ts, side, msg.new_price, msg.new_shares, out)
        elif isinstance(msg, HiddenTrade):
            pass  # hidden liquidity never touches displayed depth
        return out

    def depth_at(self, side: str, price: int) -> int:
        return self.depth.get((side, price), 0)


def apply_to_book(book: LimitOrderBook, msg: EquityMessage) -> list[BookDelta]:
    return book.apply(msg)


@dataclass
class DeltaColumns:
    """Book deltas for one symbol-day as parallel arrays.

    ``liq`` is the liquidity-signed change: shares added to the bid count
    positive, shares added to the ask count negative (so removals from the
    ask count positive).
    """

    ms: np.ndarray
    price: np.ndarray
    liq: np.ndarray

    def __len__(self):
        return len(self.ms)

    @classmethod
    def from_deltas(cls, deltas) -> "DeltaColumns":
        n = len(deltas)
        ms = np.empty(n, dtype=np.int64)
        price = np.empty(n, dtype=np.int64)
        liq = np.empty(n, dtype=np.int64)
        for i, d in enumerate(deltas):
            ms[i] = d.ts // NS_PER_MS
            price[i] = d.price
            liq[i] = d.signed_share_change if d.side == BID else -d.signed_share_change
        return cls(ms, price, liq)


def build_book(messages, symbol: str) -> tuple[LimitOrderBook, list[BookDelta]]:
    """Replay ``messages`` into a fresh book for ``symbol``."""
    book = LimitOrderBook(symbol)
    deltas: list[BookDelta] = []
    for m in messages:
        deltas.extend(book.apply(m))
    return book, deltas


__all__ = [
    "ASK", "BID", "BookDelta", "DeltaColumns", "LimitOrderBook", "apply_to_book", "build_book",
]
