"""Latency statistics and multi-day aggregation of response curves.

All times are lags in ms. The cumulative response of a curve is taken as
piecewise linear, with the mass of each bin spread uniformly over the bin,
so quantiles and significance crossings interpolate linearly inside bins.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateUncertainty, NoEventsError, UndefinedQuantile
from .response import LAG_MIN, N_LAGS, ResponseCurve

DEFAULT_XS = (0.05, 0.15, 0.50)
DEFAULT_SIGMAS = (3, 5, 10, 25)
MAD_SCALE = 1.4826


def _cumulative(curve: ResponseCurve, t: float) -> float:
    x = t - curve.lag_origin
    n = len(curve.value)
    if x <= 0:
        return 0.0
    if x >= n:
        return float(curve.value.sum())
    i = int(math.floor(x))
    return float(curve.value[:i].sum() + (x - i) * curve.value[i])


def _breakpoints(curve: ResponseCurve, t0: float, tf: float) -> list[float]:
    o = curve.lag_origin
    first = math.floor(t0 - o) + 1
    pts = [t0]
    i = first
    while o + i < tf:
        pts.append(o + i)
        i += 1
    pts.append(tf)
    return pts


def total_response(curve: ResponseCurve, t0: float = 0.0, tf: float = 30.0) -> float:
    """Integrated response over ``[t0, tf]``."""
    if curve.empty:
        raise NoEventsError()
    return _cumulative(curve, tf) - _cumulative(curve, t0)


def latency_quantile(curve: ResponseCurve, x: float, t0: float = 0.0, tf: float = 30.0) -> float:
    """Smallest lag by which fraction ``x`` of the total response has accumulated."""
    if not 0.0 < x < 1.0:
        raise ValueError("x must lie in (0, 1)")
    total = total_response(curve, t0, tf)
    if total <= 0:
        raise UndefinedQuantile()
    base = _cumulative(curve, t0)
    target = base + x * total
    pts = _breakpoints(curve, t0, tf)
    ca = base
    for a, b in zip(pts, pts[1:]):
        cb = _cumulative(curve, b)
        if ca < target <= cb:
            return a + (target - ca) / (cb - ca) * (b - a)
        ca = cb
    return tf  # unreachable for total > 0 barring float dust


def _significance_profile(curve, t0, tf):
    pts = _breakpoints(curve, t0, tf)
    o = curve.lag_origin
    base = _cumulative(curve, t0)
    s = [0.0]
    any_sigma = False
    any_signal = False
    for b in pts[1:]:
        t_acc = _cumulative(curve, b) - base
        lo = max(int(math.floor(t0 - o)), 0)
        hi = min(int(math.ceil(b - o)), len(curve.value))
        var = float((curve.sigma[lo:hi] ** 2).sum())
        any_sigma |= var > 0
        any_signal |= t_acc != 0
        if var > 0:
            s.append(t_acc / math.sqrt(var))
        elif t_acc == 0:
            s.append(0.0)
        else:
            s.append(math.copysign(math.inf, t_acc))
    if any_signal and not any_sigma:
        raise DegenerateUncertainty()
    return pts, s


def significance_time(curve: ResponseCurve, sigma_level: float, t0: float = 0.0,
                      tf: float = 30.0) -> float | None:
    """First lag at which accumulated response / quadrature error reaches ``sigma_level``.

    Returns None when the level is never reached within ``[t0, tf]``.
    """
    if curve.empty:
        raise NoEventsError()
    pts, s = _significance_profile(curve, t0, tf)
    for a, b, sa, sb in zip(pts, pts[1:], s, s[1:]):
        if sa < sigma_level <= sb:
            if math.isinf(sb):
                return a
            return a + (sigma_level - sa) / (sb - sa) * (b - a)
    return None


def aggregate_median(curves: Sequence[ResponseCurve]) -> ResponseCurve:
    """Per-lag median across non-empty curves; sigma is the scaled MAD."""
    live = [c for c in curves if not c.empty]
    if not live:
        raise NoEventsError("all curves empty")
    origins = {c.lag_origin for c in live}
    if len(origins) != 1 or len({len(c.value) for c in live}) != 1:
        raise ValueError("curves must share a lag grid; resample first")
    stack = np.vstack([c.value for c in live])
    med = np.median(stack, axis=0)
    mad = np.median(np.abs(stack - med), axis=0)
    return ResponseCurve(med, MAD_SCALE * mad, sum(c.n_events for c in live), live[0].kind,
                         live[0].lag_origin)


def resample_to_grid(curve: ResponseCurve, origin: float = float(LAG_MIN),
                     n_bins: int = N_LAGS) -> ResponseCurve:
    """Re-bin onto ``[origin + j, origin + j + 1)`` by differencing the cumulative."""
    edges = origin + np.arange(n_bins + 1)
    cum = np.array([_cumulative(curve, e) for e in edges])
    value = np.diff(cum)
    # variance re-binned by overlap fraction
    var = np.zeros(n_bins)
    src_lo = curve.lag_origin + np.arange(len(curve.value))
    for j in range(n_bins):
        ov = np.clip(np.minimum(src_lo + 1, edges[j + 1]) - np.maximum(src_lo, edges[j]), 0, 1)
        var[j] = float((ov * curve.sigma**2).sum())
    return ResponseCurve(value, np.sqrt(var), curve.n_events, curve.kind, float(origin),
                         curve.seed, curve.n_resamples, dict(curve.skipped))


def normalize_shape(curve: ResponseCurve, lo: int = 0, hi: int = 20) -> ResponseCurve:
    """Scale to unit sum over lags ``lo..hi`` and shift so ``t_50`` sits at lag 0.

    The result keeps its bins and carries a fractional ``lag_origin``; use
    ``resample_to_grid`` to put several shapes on a common integer grid.
    """
    lags = curve.lags
    sel = (lags >= lo) & (lags <= hi)
    norm = float(curve.value[sel].sum())
    if norm <= 0:
        raise ValueError("nonpositive normaliser")
    scaled = curve.scaled(1.0 / norm)
    t50 = latency_quantile(scaled, 0.5)
    scaled.lag_origin = curve.lag_origin - t50
    scaled.skipped = {**scaled.skipped, "shift_ms": t50}
    return scaled


def median_filter(series: Sequence[float], window: int = 10) -> np.ndarray:
    """Centred rolling median, truncated at the ends.

    The window covers ``[i - window // 2, i + window - 1 - window // 2]``.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    back = window // 2
    fwd = window - 1 - back
    out = np.empty(n)
    for i in range(n):
        out[i] = np.median(x[max(0, i - back):min(n, i + fwd + 1)])
    return out


def heatmap_matrix(curves: Sequence[ResponseCurve], t0: float = 0.0,
                   tf: float = 30.0) -> tuple[np.ndarray, np.ndarray]:
    """Rows of ``curve / T``; rows with ``T <= 0`` (or no events) are zero and flagged."""
    if not curves:
        raise ValueError("empty curve set")
    mat = np.zeros((len(curves), len(curves[0].value)))
    flags = np.zeros(len(curves), dtype=bool)
    for r, c in enumerate(curves):
        total = 0.0 if c.empty else total_response(c, t0, tf)
        if total <= 0:
            flags[r] = True
            continue
        mat[r] = c.value / total
    return mat, flags


@dataclass
class LatencyStat:
    day: str
    kind: str
    total: float | None
    t_x: dict[float, float | None] = field(default_factory=dict)
    t_sigma: dict[float, float | None] = field(default_factory=dict)


@dataclass
class DailyCurveSet:
    kind: str
    days: list[tuple[str, ResponseCurve]] = field(default_factory=list)

    def __post_init__(self):
        dates = [d for d, _ in self.days]
        if any(a >= b for a, b in zip(dates, dates[1:])):
            raise ValueError("dates must be strictly increasing")

    @property
    def curves(self) -> list[ResponseCurve]:
        return [c for _, c in self.days]


def latency_stats(day: str, curve: ResponseCurve, xs=DEFAULT_XS, sigmas=DEFAULT_SIGMAS,
                  t0: float = 0.0, tf: float = 30.0) -> LatencyStat:
    if curve.empty:
        return LatencyStat(day, curve.kind, None, {x: None for x in xs}, {s: None for s in sigmas})
    total = total_response(curve, t0, tf)
    t_x = {x: (latency_quantile(curve, x, t0, tf) if total > 0 else None) for x in xs}
    t_sigma = {}
    for s in sigmas:
        try:
            t_sigma[s] = significance_time(curve, s, t0, tf)
        except DegenerateUncertainty:
            t_sigma[s] = None
    return LatencyStat(day, curve.kind, total, t_x, t_sigma)


def _fmt(v):
    return "" if v is None else f"{v:.6f}"


def stats_csv(rows: Sequence[LatencyStat], xs=DEFAULT_XS, sigmas=DEFAULT_SIGMAS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "kind", "T"] + [f"t{round(x * 100)}" for x in xs]
               + [f"tsig{s:g}" for s in sigmas])
    for r in rows:
        w.writerow([r.day, r.kind, _fmt(r.total)] + [_fmt(r.t_x.get(x)) for x in xs]
                   + [_fmt(r.t_sigma.get(s)) for s in sigmas])
    return buf.getvalue()


def heatmap_csv(days: Sequence[str], matrix: np.ndarray, flags: np.ndarray,
                lags: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "flag"] + [str(int(k)) for k in lags])
    for d, row, f in zip(days, matrix, flags):
        w.writerow([d, "zero_T" if f else ""] + [f"{v:.6g}" for v in row])
    return buf.getvalue()
