"""Synthetic futures-drive / equity-response market with known ground truth.

The futures leg is a one-tick random walk whose price changes arrive as a
Bernoulli process on the millisecond grid, each at a uniform offset inside
its millisecond. Equity responders keep a five-level quote ladder around a
centre price and, on learning of a futures move after their latency, lean
the ladder one cent in the move's direction: join the new touch, lift or
hit the stale opposite quote (printing a tape trade), extend the far side
and pull the stale far level. The net three-level liquidity change at the
reference price is therefore twice the per-level size, signed by the move.
"""
from __future__ import annotations

import heapq
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import CENT_E4, NS_PER_MS, SESSION_CLOSE_MS, SESSION_OPEN_MS
from .errors import InfeasibleConfig
from .feeds import eqb
from .feeds.eqb import ASK, BID
from .feeds.text import FuturesTrade, TapeTrade, write_futures_feed, write_trade_tape

LADDER_LEVELS = 5
PRESIGNAL_HOLD_MS = 40.0


@dataclass
class SimConfig:
    """Parameters for one simulated session.

    ``latency`` is a mixture of ``(latency_ms, weight)`` components; each
    component is an independent responder carrying ``weight`` of the
    response size. ``jitter_ms`` adds a half-normal delay of that scale to
    every responder arrival. Background rates are per second.
    """

    seed: int = 0
    session: tuple[int, int] = (SESSION_OPEN_MS, SESSION_CLOSE_MS)
    drive_rate: float = 0.427
    latency: tuple[tuple[float, float], ...] = ((4.85, 1.0),)
    jitter_ms: float = 0.0
    presignal_fraction: float = 0.0
    presignal_lead_ms: float = 2.0
    presignal_shares: int = 400
    response_shares: int = 800
    fill_prob: float = 1.0
    noise_order_rate: float = 0.0
    noise_order_life_ms: float = 200.0
    noise_trade_rate: float = 0.0
    futures_noise_rate: float = 0.0
    tape_jitter: bool = False
    symbol: str = "SPY"
    equity_start_e4: int = 1_300_000
    futures_start_ticks: int = 5_200

    def __post_init__(self):
        self.latency = tuple((float(lat), float(w)) for lat, w in self.latency)
        if not self.latency:
            raise InfeasibleConfig("latency mixture is empty")
        if abs(sum(w for _, w in self.latency) - 1.0) > 1e-9:
            raise InfeasibleConfig("latency weights must sum to 1")
        if any(lat < 0 or w < 0 for lat, w in self.latency):
            raise InfeasibleConfig("latencies and weights must be nonnegative")
        for name in ("drive_rate", "jitter_ms", "noise_order_rate", "noise_trade_rate",
                     "futures_noise_rate", "noise_order_life_ms"):
            if getattr(self, name) < 0:
                raise InfeasibleConfig(f"{name} must be nonnegative")
        if not 0.0 <= self.presignal_fraction <= 1.0:
            raise InfeasibleConfig("presignal_fraction must lie in [0, 1]")
        if not 0.0 <= self.fill_prob <= 1.0:
            raise InfeasibleConfig("fill_prob must lie in [0, 1]")
        if self.drive_rate >= 1000:
            raise InfeasibleConfig("drive_rate must be below one event per ms")
        if self.presignal_fraction > 0 and self.min_latency - self.presignal_lead_ms < 0:
            raise InfeasibleConfig("presignal lead exceeds the fastest latency")
        lo, hi = self.session
        if not 0 <= lo < hi:
            raise InfeasibleConfig("empty session")
        if self.response_shares < 2:
            raise InfeasibleConfig("response_shares must be >= 2")

    @property
    def min_latency(self) -> float:
        return min(lat for lat, _ in self.latency)

    @classmethod
    def desk(cls, **kw) -> "SimConfig":
        """Preset with about 1e5 background equity messages per session."""
        base = dict(noise_order_rate=1.8, noise_trade_rate=0.5, futures_noise_rate=0.5,
                    tape_jitter=False)
        base.update(kw)
        return cls(**base)


@dataclass
class TruthEvent:
    ms: int
    offset: float
    direction: int
    arrivals: list[float]  # absolute ms, one per latency component
    presignal_ms: float | None = None

    @property
    def time_ms(self) -> float:
        return self.ms + self.offset


@dataclass
class SimGroundTruth:
    events: list[TruthEvent] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"config": self.config,
                           "events": [asdict(e) for e in self.events]}, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SimGroundTruth":
        obj = json.loads(text)
        return cls([TruthEvent(**e) for e in obj["events"]], obj["config"])

    def arrival_lags(self) -> np.ndarray:
        """``arrival - event time`` for every (event, responder) pair."""
        return np.array([a - e.time_ms for e in self.events for a in e.arrivals])


@dataclass
class SimOutput:
    futures_csv: str
    equity_bin: bytes
    tape_csv: str
    truth: SimGroundTruth

    def __iter__(self):
        return iter((self.futures_csv, self.equity_bin, self.tape_csv, self.truth))


def _event_ms(rng, lo, hi, rate_per_s):
    p = rate_per_s / 1000.0
    if p <= 0:
        return np.zeros(0, dtype=np.int64)
    span = hi - lo
    out = []
    t = lo
    while True:
        n = int(span * p * 1.1) + 64
        t_chunk = t + np.cumsum(rng.geometric(p, size=n))
        out.append(t_chunk[t_chunk < hi])
        if t_chunk[-1] >= hi:
            break
        t = int(t_chunk[-1])
    return np.concatenate(out).astype(np.int64)


def _poisson_times(rng, lo, hi, rate_per_s):
    n = rng.poisson(rate_per_s * (hi - lo) / 1000.0)
    return np.sort(rng.uniform(lo, hi, size=n))


class _Writer:
    """Accumulates equity messages, tape prints and order ids."""

    def __init__(self, symbol, tape_jitter, rng, hi_ms):
        self.symbol = symbol
        self.frames: list[bytes] = []
        self.tape: list[TapeTrade] = []
        self.next_id = 1
        self.next_match = 1
        self.tape_jitter = tape_jitter
        self.rng = rng
        self.hi_ms = hi_ms
        self.n_messages = 0

    @staticmethod
    def ns(t_ms):
        return int(math.floor(t_ms * NS_PER_MS))

    def emit(self, msg):
        self.frames.append(eqb.encode(msg))
        self.n_messages += 1

    def add(self, t, side, shares, price):
        oid = self.next_id
        self.next_id += 1
        self.emit(eqb.AddOrder(self.ns(t), oid, side, shares, self.symbol, price))
        return oid

    def delete(self, t, oid):
        self.emit(eqb.OrderDelete(self.ns(t), oid))

    def print_tape(self, t, price, shares):
        if self.tape_jitter:
            t = t + self.rng.uniform(0.0, 2.0)
        self.tape.append(TapeTrade(min(int(math.floor(t)), self.hi_ms), self.symbol, price, shares))

    def execute(self, t, oid, shares, price):
        self.emit(eqb.OrderExecuted(self.ns(t), oid, shares, self.next_match))
        self.next_match += 1
        self.print_tape(t, price, shares)

    def hidden(self, t, side, shares, price):
        oid = self.next_id
        self.next_id += 1
        self.emit(eqb.HiddenTrade(self.ns(t), oid, side, shares, self.symbol, price, self.next_match))
        self.next_match += 1
        self.print_tape(t, price, shares)


class _Ladder:
    """One responder's quotes: ``levels`` bids below and asks above ``centre``."""

    def __init__(self, w: _Writer, t, centre, size):
        self.w = w
        self.centre = centre
        self.size = size
        self.bids = {centre - k * CENT_E4: w.add(t, BID, size, centre - k * CENT_E4)
                     for k in range(1, LADDER_LEVELS + 1)}
        self.asks = {centre + k * CENT_E4: w.add(t, ASK, size, centre + k * CENT_E4)
                     for k in range(1, LADDER_LEVELS + 1)}

    def lean(self, t, direction, fill):
        w, c, q = self.w, self.centre, self.size
        if direction > 0:
            near, far, join_side, ext_side = self.asks, self.bids, BID, ASK
        else:
            near, far, join_side, ext_side = self.bids, self.asks, ASK, BID
        d = direction * CENT_E4
        # join the new touch at the old centre
        (self.bids if join_side == BID else self.asks)[c] = w.add(t, join_side, q, c)
        # take out the stale opposite quote
        oid = near.pop(c + d)
        if fill:
            w.execute(t, oid, q, c + d)
        else:
            w.delete(t, oid)
        # extend the far side and pull the stale far level
        ext = c + (LADDER_LEVELS + 1) * d
        (self.asks if ext_side == ASK else self.bids)[ext] = w.add(t, ext_side, q, ext)
        w.delete(t, far.pop(c - LADDER_LEVELS * d))
        self.centre = c + d


def simulate_session(config: SimConfig) -> SimOutput:
    """Generate one session's futures feed, equity feed, tape and ground truth.

    Output is a deterministic function of ``config``.
    """
    cfg = config
    root = np.random.SeedSequence(cfg.seed)
    r_ev, r_lat, r_ps, r_noise, r_fut, r_tape = (np.random.default_rng(s) for s in root.spawn(6))
    lo, hi = cfg.session

    ev_ms = _event_ms(r_ev, lo, hi, cfg.drive_rate)
    n_ev = len(ev_ms)
    offsets = r_ev.uniform(0.0, 1.0, size=n_ev)
    dirs = np.where(r_ev.random(n_ev) < 0.5, 1, -1)
    fills = r_ev.random((n_ev, len(cfg.latency))) < cfg.fill_prob
    lat = np.array([x for x, _ in cfg.latency])
    jit = np.abs(r_lat.normal(0.0, cfg.jitter_ms, size=(n_ev, len(lat)))) if cfg.jitter_ms > 0 \
        else np.zeros((n_ev, len(lat)))
    t_ev = ev_ms + offsets
    arrivals = t_ev[:, None] + lat[None, :] + jit
    ps_mask = r_ps.random(n_ev) < cfg.presignal_fraction
    ps_time = t_ev + cfg.min_latency - cfg.presignal_lead_ms

    # futures: a seed print at the open, one print per event, same-price background prints
    fut: list[FuturesTrade] = [FuturesTrade(lo, cfg.futures_start_ticks, 1)]
    prices = cfg.futures_start_ticks + np.cumsum(dirs)
    bg = np.unique(np.floor(_poisson_times(r_fut, lo + 1, hi, cfg.futures_noise_rate)).astype(np.int64))
    sizes = r_fut.integers(1, 20, size=n_ev + len(bg))
    k = 0
    for j, ms in enumerate(bg):
        while k < n_ev and ev_ms[k] < ms:
            fut.append(FuturesTrade(int(ev_ms[k]), int(prices[k]), int(sizes[k])))
            k += 1
        cur = prices[k - 1] if k else cfg.futures_start_ticks
        fut.append(FuturesTrade(int(ms), int(cur), int(sizes[n_ev + j])))  # precedes any move in ms
    for kk in range(k, n_ev):
        fut.append(FuturesTrade(int(ev_ms[kk]), int(prices[kk]), int(sizes[kk])))

    # equity: a time-ordered action queue over responders, presignal and noise agents
    w = _Writer(cfg.symbol, cfg.tape_jitter, r_tape, hi + 60)
    q = cfg.response_shares // 2
    ladders = [_Ladder(w, lo, cfg.equity_start_e4, max(1, round(q * wt))) for _, wt in cfg.latency]
    w.hidden(lo, BID, 100, cfg.equity_start_e4)  # opening print seeds the reference price

    queue: list[tuple] = []
    for i in range(n_ev):
        for c in range(len(lat)):
            queue.append((float(arrivals[i, c]), 0, i, c))
        if ps_mask[i]:
            queue.append((float(ps_time[i]), 1, i, 0))
            queue.append((float(t_ev[i] + PRESIGNAL_HOLD_MS), 2, i, 0))
    n_noise = 0
    for t in _poisson_times(r_noise, lo, hi, cfg.noise_order_rate):
        queue.append((float(t), 3, n_noise, 0))
        life = r_noise.exponential(cfg.noise_order_life_ms)
        queue.append((float(t + life), 4, n_noise, 0))
        n_noise += 1
    for t in _poisson_times(r_noise, lo, hi, cfg.noise_trade_rate):
        queue.append((float(t), 5, 0, 0))
    heapq.heapify(queue)

    presig_ids: dict[int, int] = {}
    noise_ids: dict[int, int] = {}
    noise_rng = r_noise
    market = ladders[0]
    while queue:
        t, kind, i, c = heapq.heappop(queue)
        if kind == 0:
            ladders[c].lean(t, int(dirs[i]), bool(fills[i, c]))
        elif kind == 1:
            side = BID if dirs[i] > 0 else ASK
            presig_ids[i] = w.add(t, side, cfg.presignal_shares, market.centre)
        elif kind == 2:
            w.delete(t, presig_ids.pop(i))
        elif kind == 3:
            side = BID if noise_rng.random() < 0.5 else ASK
            price = market.centre + CENT_E4 * int(noise_rng.integers(-1, 2))
            noise_ids[i] = w.add(t, side, int(noise_rng.integers(1, 5)) * 100, price)
        elif kind == 4:
            w.delete(t, noise_ids.pop(i))
        else:
            up = noise_rng.random() < 0.5
            w.hidden(t, ASK if up else BID, int(noise_rng.integers(1, 5)) * 100,
                     market.centre + (CENT_E4 if up else -CENT_E4))

    tape = sorted(w.tape, key=lambda tr: tr.ts)  # stable: jitter may reorder stamps
    fbuf, tbuf = io.StringIO(), io.StringIO()
    write_futures_feed(fut, fbuf)
    write_trade_tape(tape, tbuf)

    truth_cfg = asdict(cfg)
    truth_cfg["latency"] = [list(x) for x in cfg.latency]
    truth_cfg["session"] = list(cfg.session)
    truth = SimGroundTruth(
        [TruthEvent(int(ev_ms[i]), float(offsets[i]), int(dirs[i]),
                    [float(a) for a in arrivals[i]],
                    float(ps_time[i]) if ps_mask[i] else None) for i in range(n_ev)],
        truth_cfg,
    )
    return SimOutput(fbuf.getvalue(), b"".join(w.frames), tbuf.getvalue(), truth)


@dataclass
class DayCurves:
    liquidity: "object"
    trade: "object"
    volume: "object"
    n_events: int


def measure(output: SimOutput, symbol: str = "SPY", n_resamples: int = 200, seed: int = 0,
            with_volume: bool = False) -> DayCurves:
    """Run the measurement pipeline on simulated feeds, parsing them from their wire forms."""
    from .feeds import build_book, decode_all, parse_futures_feed, parse_trade_tape
    from .feeds.book import DeltaColumns
    from .response import events_from_trades, liquidity_response, trade_response, volume_response

    fut = parse_futures_feed(io.StringIO(output.futures_csv))
    tape = parse_trade_tape(io.StringIO(output.tape_csv))
    _, deltas = build_book(decode_all(output.equity_bin), symbol)
    events = events_from_trades(fut)
    cols = DeltaColumns.from_deltas(deltas)
    liq = liquidity_response(events, cols, tape, symbol, n_resamples, seed)
    trd = trade_response(events, tape, symbol, n_resamples, seed)
    vol = volume_response(events, tape, symbol, n_resamples, seed) if with_volume else None
    return DayCurves(liq, trd, vol, len(events))
