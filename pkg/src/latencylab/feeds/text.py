"""FDF-1 futures-trade and TTF-1 consolidated-tape CSV feeds."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, TextIO

from ..core import MS_PER_DAY
from ..errors import FeedFormatError

FDF_HEADER = ["ms", "kind", "price_ticks", "size"]
TTF_HEADER = ["ms", "symbol", "price_e4", "size"]


@dataclass(frozen=True, slots=True)
class FuturesTrade:
    ts: int  # ms
    price: int  # contract ticks
    size: int


@dataclass(frozen=True, slots=True)
class TapeTrade:
    ts: int  # ms
    symbol: str
    price: int  # 1e-4 dollars
    size: int


def _int(field, name, line):
    try:
        return int(field)
    except ValueError:
        raise FeedFormatError(line, f"{name} is not an integer: {field!r}") from None


def _check_common(ms, size, line):
    if not 0 <= ms < MS_PER_DAY:
        raise FeedFormatError(line, f"ms out of range: {ms}")
    if size <= 0:
        raise FeedFormatError(line, f"size must be positive: {size}")


def _rows(stream: Iterable[str], header):
    for line, row in enumerate(csv.reader(stream), start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if line == 1 and [c.strip() for c in row] == header:
            continue
        if len(row) != len(header):
            raise FeedFormatError(line, f"expected {len(header)} fields, got {len(row)}")
        yield line, [c.strip() for c in row]


def parse_futures_feed(stream: Iterable[str]) -> list[FuturesTrade]:
    """Parse FDF-1 rows ``ms,kind,price_ticks,size``. The header row is optional."""
    out = []
    for line, (ms, kind, price, size) in _rows(stream, FDF_HEADER):
        if kind != "TRADE":
            raise FeedFormatError(line, f"unknown kind {kind!r}")
        ms, price, size = _int(ms, "ms", line), _int(price, "price_ticks", line), _int(size, "size", line)
        _check_common(ms, size, line)
        out.append(FuturesTrade(ms, price, size))
    return out


def parse_trade_tape(stream: Iterable[str]) -> list[TapeTrade]:
    """Parse TTF-1 rows ``ms,symbol,price_e4,size``. The header row is optional."""
    out = []
    for line, (ms, symbol, price, size) in _rows(stream, TTF_HEADER):
        if not symbol:
            raise FeedFormatError(line, "empty symbol")
        ms, price, size = _int(ms, "ms", line), _int(price, "price_e4", line), _int(size, "size", line)
        _check_common(ms, size, line)
        out.append(TapeTrade(ms, symbol, price, size))
    return out


def write_futures_feed(trades: Iterable[FuturesTrade], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(FDF_HEADER)
    for t in trades:
        w.writerow([t.ts, "TRADE", t.price, t.size])


def write_trade_tape(trades: Iterable[TapeTrade], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(TTF_HEADER)
    for t in trades:
        w.writerow([t.ts, t.symbol, t.price, t.size])
