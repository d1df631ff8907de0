"""Futures price-event screening and equity response curves.

A price event is a millisecond whose in-force (last) futures trade price
differs from the previous millisecond's in-force price. For each event,
equity activity is binned by integer lag ``k = msg_ms - event_ms`` over
``[-30, +30]`` and signed by the event direction. Per-event contribution
rows are kept so that bootstrap errors can be drawn over events.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from ._io import atomic_write, dump_json
from .core import CENT_E4
from .errors import UnsortedInput
from .feeds.book import BookDelta, DeltaColumns
from .feeds.text import FuturesTrade, TapeTrade

LAG_MIN = -30
LAG_MAX = 30
N_LAGS = LAG_MAX - LAG_MIN + 1
DEFAULT_RESAMPLES = 200


@dataclass(frozen=True, slots=True)
class PriceEvent:
    ms: int
    direction: int
    in_force_price: int
    ref_equity_price: int | None = None


@dataclass
class ResponseCurve:
    """Mean signed response per event at each lag, with bootstrap 1-sigma errors.

    Bin ``i`` covers lags ``[lag_origin + i, lag_origin + i + 1)``; for a
    freshly measured curve ``lag_origin = -30`` so bin ``i`` holds messages
    stamped ``event_ms + (i - 30)``.
    """

    value: np.ndarray
    sigma: np.ndarray
    n_events: int
    kind: str
    lag_origin: float = float(LAG_MIN)
    seed: int | None = None
    n_resamples: int = 0
    skipped: dict = field(default_factory=dict)
    contributions: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.value.shape != self.sigma.shape:
            raise ValueError("value and sigma must have the same shape")
        if np.any(self.sigma < 0):
            raise ValueError("sigma must be nonnegative")

    @property
    def empty(self) -> bool:
        return self.n_events == 0

    @property
    def lags(self) -> np.ndarray:
        return self.lag_origin + np.arange(len(self.value))

    def at(self, lag: int) -> float:
        """Value of the bin starting at integer ``lag``."""
        i = int(round(lag - self.lag_origin))
        return float(self.value[i])

    def scaled(self, factor: float) -> "ResponseCurve":
        return ResponseCurve(self.value * factor, self.sigma * abs(factor), self.n_events,
                             self.kind, self.lag_origin, self.seed, self.n_resamples,
                             dict(self.skipped))

    @classmethod
    def empty_curve(cls, kind, seed=None, n_resamples=0, skipped=None):
        z = np.zeros(N_LAGS)
        return cls(z, z.copy(), 0, kind, float(LAG_MIN), seed, n_resamples, dict(skipped or {}))

    # -- serialisation ------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lag_ms", "value", "sigma"])
        for lag, v, s in zip(self.lags, self.value, self.sigma):
            lag_s = str(int(lag)) if float(lag).is_integer() else repr(float(lag))
            w.writerow([lag_s, repr(float(v)), repr(float(s))])
        return buf.getvalue()

    def sidecar(self, **extra) -> dict:
        return {
            "n_events": self.n_events,
            "kind": self.kind,
            "seed": self.seed,
            "n_resamples": self.n_resamples,
            "empty": self.empty,
            "skipped": dict(self.skipped),
            **extra,
        }

    def write(self, csv_path, **extra) -> None:
        atomic_write(csv_path, self.to_csv())
        atomic_write(str(csv_path).removesuffix(".csv") + ".json", dump_json(self.sidecar(**extra)))

    @classmethod
    def read(cls, csv_path) -> "ResponseCurve":
        csv_path = str(csv_path)
        with open(csv_path) as fh:
            rows = list(csv.DictReader(fh))
        with open(csv_path.removesuffix(".csv") + ".json") as fh:
            meta = json.load(fh)
        value = np.array([float(r["value"]) for r in rows])
        sigma = np.array([float(r["sigma"]) for r in rows])
        origin = float(rows[0]["lag_ms"]) if rows else float(LAG_MIN)
        return cls(value, sigma, int(meta["n_events"]), meta["kind"], origin,
                   meta.get("seed"), int(meta.get("n_resamples", 0)), meta.get("skipped", {}))


# -- event screening ---------------------------------------------------------

def in_force_series(trades: Sequence[FuturesTrade]) -> dict[int, int]:
    """Last trade price in each millisecond that has at least one trade."""
    out: dict[int, int] = {}
    prev = -1
    for t in trades:
        if t.ts < prev:
            raise UnsortedInput(f"futures trades out of order at ms {t.ts}")
        prev = t.ts
        out[t.ts] = t.price
    return out


def screen_price_events(series: dict[int, int], seed_price: int | None = None) -> list[PriceEvent]:
    """One event per millisecond whose in-force price moved.

    The first in-force price of the day seeds the comparator and emits no
    event, unless ``seed_price`` supplies a prior in-force price.
    """
    events = []
    last = seed_price
    for ms, price in series.items():
        if last is not None and price != last:
            events.append(PriceEvent(ms, 1 if price > last else -1, price))
        last = price
    return events


def events_from_trades(trades: Sequence[FuturesTrade]) -> list[PriceEvent]:
    return screen_price_events(in_force_series(trades))


# -- tape helpers --------------------------------------------------------------

def _tape_arrays(tape: Sequence[TapeTrade], symbol: str):
    rows = [(t.ts, t.price, t.size) for t in tape if t.symbol == symbol]
    if not rows:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy(), z.copy()
    arr = np.array(rows, dtype=np.int64)
    if np.any(np.diff(arr[:, 0]) < 0):
        raise UnsortedInput(f"tape for {symbol} is not time-ordered")
    return arr[:, 0], arr[:, 1], arr[:, 2]


def reference_prices(events: Sequence[PriceEvent], tape: Sequence[TapeTrade], symbol: str) -> np.ndarray:
    """Last traded price at or before the end of each event millisecond; -1 if none."""
    ms, px, _ = _tape_arrays(tape, symbol)
    ev_ms = np.array([e.ms for e in events], dtype=np.int64)
    idx = np.searchsorted(ms, ev_ms, side="right") - 1
    out = np.full(len(events), -1, dtype=np.int64)
    ok = idx >= 0
    out[ok] = px[idx[ok]]
    return out


def tape_price_changes(tape: Sequence[TapeTrade], symbol: str):
    """``(ms, delta_price)`` for tape trades whose price differs from the previous trade."""
    ms, px, _ = _tape_arrays(tape, symbol)
    if len(ms) < 2:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy()
    d = np.diff(px)
    keep = d != 0
    return ms[1:][keep], d[keep]


# -- bootstrap -----------------------------------------------------------------

def resample_indices(n: int, n_resamples: int, seed: int) -> np.ndarray:
    """Event indices for each resample, one child seed per resample.

    Child streams come from ``SeedSequence(seed).spawn`` so resample ``r``
    is the same regardless of how many others are drawn or in which order.
    """
    children = np.random.SeedSequence(seed).spawn(n_resamples)
    idx = np.empty((n_resamples, n), dtype=np.int64)
    for r, ss in enumerate(children):
        idx[r] = np.random.default_rng(ss).integers(0, n, size=n)
    return idx


def bootstrap_errors(contributions: np.ndarray, n_resamples: int = DEFAULT_RESAMPLES,
                     seed: int = 0) -> np.ndarray:
    """Per-lag standard deviation of event-resampled mean curves."""
    if n_resamples < 2:
        raise ValueError("n_resamples must be >= 2")
    contributions = np.asarray(contributions, dtype=np.float64)
    n = contributions.shape[0]
    if n == 0:
        return np.zeros(contributions.shape[1] if contributions.ndim == 2 else N_LAGS)
    means = kernels.bootstrap_means(contributions, resample_indices(n, n_resamples, seed))
    sigma = means.std(axis=0, ddof=1)
    # identical rows can leave float dust from the summation order
    spread = contributions.max(axis=0) - contributions.min(axis=0)
    sigma[spread == 0] = 0.0
    return sigma


def _curve(contrib, kind, n_resamples, seed, skipped) -> ResponseCurve:
    n = contrib.shape[0]
    if n == 0:
        c = ResponseCurve.empty_curve(kind, seed, n_resamples, skipped)
        c.contributions = contrib
        return c
    value = contrib.mean(axis=0)
    sigma = bootstrap_errors(contrib, n_resamples, seed)
    return ResponseCurve(value, sigma, n, kind, float(LAG_MIN), seed, n_resamples,
                         skipped, contrib)


def _with_reference(events, tape, symbol):
    ref = reference_prices(events, tape, symbol)
    keep = ref >= 0
    ev_ms = np.array([e.ms for e in events], dtype=np.int64)[keep]
    ev_dir = np.array([e.direction for e in events], dtype=np.int64)[keep]
    skipped = {"no_reference_price": int((~keep).sum())}
    return ev_ms, ev_dir, ref[keep], skipped


# -- responses ---------------------------------------------------------------

def liquidity_contributions(events, deltas, tape, symbol, level_band=CENT_E4):
    """Per-event liquidity contribution rows and the skip counters.

    A row is ``direction * (shares added to bid - shares added to ask)`` at
    prices within ``level_band`` of the event's frozen reference price.
    """
    if not isinstance(deltas, DeltaColumns):
        deltas = DeltaColumns.from_deltas(list(deltas))
    ev_ms, ev_dir, ref, skipped = _with_reference(events, tape, symbol)
    ms, price, liq = deltas.ms, deltas.price, deltas.liq
    if len(ms) and np.any(np.diff(ms) < 0):
        order = np.argsort(ms, kind="stable")
        ms, price, liq = ms[order], price[order], liq[order]
    contrib = kernels.lag_contributions(ev_ms, ev_dir, ref, ms, price, liq,
                                        LAG_MIN, LAG_MAX, level_band)
    return contrib, skipped


def liquidity_response(events: Sequence[PriceEvent], deltas: DeltaColumns | Sequence[BookDelta],
                       tape: Sequence[TapeTrade], symbol: str,
                       n_resamples: int = DEFAULT_RESAMPLES, seed: int = 0) -> ResponseCurve:
    """Mean net bid-add plus ask-removal at the three levels around the last trade.

    Price-decreasing events contribute with flipped sign. Events before the
    first tape trade in ``symbol`` have no reference price and are skipped.
    """
    contrib, skipped = liquidity_contributions(events, deltas, tape, symbol)
    return _curve(contrib, "liquidity", n_resamples, seed, skipped)


def trade_contributions(events, tape, symbol):
    ev_ms, ev_dir, ref, skipped = _with_reference(events, tape, symbol)
    ch_ms, ch_dp = tape_price_changes(tape, symbol)
    contrib = kernels.lag_contributions(ev_ms, ev_dir, ref, ch_ms, ch_dp, ch_dp,
                                        LAG_MIN, LAG_MAX, -1)
    return contrib, skipped


def trade_response(events: Sequence[PriceEvent], tape: Sequence[TapeTrade], symbol: str,
                   n_resamples: int = DEFAULT_RESAMPLES, seed: int = 0) -> ResponseCurve:
    """Mean signed traded-price change (1e-4 dollars) of ``symbol`` at each lag."""
    contrib, skipped = trade_contributions(events, tape, symbol)
    return _curve(contrib, "trade", n_resamples, seed, skipped)


def volume_response(events: Sequence[PriceEvent], tape: Sequence[TapeTrade], symbol: str,
                    n_resamples: int = DEFAULT_RESAMPLES, seed: int = 0,
                    session: tuple[int, int] | None = None) -> ResponseCurve:
    """Excess tape volume per event at each lag, unsigned.

    The baseline is the mean per-millisecond volume over milliseconds that
    fall in no event's window; it is subtracted from every bin.
    """
    ms, _, size = _tape_arrays(tape, symbol)
    ev_ms = np.array([e.ms for e in events], dtype=np.int64)
    ones = np.ones(len(ev_ms), dtype=np.int64)
    contrib = kernels.lag_contributions(ev_ms, ones, ones, ms, size, size, LAG_MIN, LAG_MAX, -1)
    if len(ms) and len(ev_ms):
        lo, hi = session if session else (int(ms[0]), int(ms[-1]) + 1)
        covered = np.zeros(hi - lo, dtype=bool)
        for e in ev_ms:
            a, b = max(e + LAG_MIN - lo, 0), min(e + LAG_MAX + 1 - lo, hi - lo)
            if a < b:
                covered[a:b] = True
        in_sess = (ms >= lo) & (ms < hi)
        free_vol = size[in_sess][~covered[ms[in_sess] - lo]].sum()
        n_free = int((~covered).sum())
        baseline = free_vol / n_free if n_free else 0.0
        contrib = contrib - baseline
    else:
        baseline = 0.0
    curve = _curve(contrib, "volume", n_resamples, seed, {"no_reference_price": 0})
    curve.skipped["baseline_per_ms"] = float(baseline)
    return curve
