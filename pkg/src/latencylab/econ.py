"""Closed-form trading-economics estimators."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import UndefinedQuantile
from .stats import latency_quantile, total_response

REFERENCE_VOLUME = 5e9  # shares per day
REFERENCE_REVENUE = 12.5e9  # dollars per year at REFERENCE_VOLUME and f_c = 1


@dataclass(frozen=True)
class EconParams:
    f_c: float = 0.1
    volume: float = 5e9
    emini_price: float = 65_000.0
    emini_tick: float = 12.5
    equity_price: float = 130.0
    response_volume: float = 2e10

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v < 0:
                raise ValueError(f"{k} must be nonnegative")
        if self.f_c > 1:
            raise ValueError("f_c must not exceed 1")


def hft_revenue_estimate(f_c: float, volume: float) -> float:
    """Yearly equity-trading revenue (dollars) for captured spread fraction ``f_c``."""
    if not 0.0 <= f_c <= 1.0 or volume < 0:
        raise ValueError("need 0 <= f_c <= 1 and volume >= 0")
    return f_c * (volume / REFERENCE_VOLUME) * REFERENCE_REVENUE


def tick_fungibility(emini_price: float, emini_tick: float, equity_price: float) -> float:
    """Equity price move (dollars/share) equivalent to one futures tick."""
    if emini_price <= 0:
        raise ValueError("emini_price must be positive")
    return emini_tick / emini_price * equity_price


def response_pnl(response_volume: float, per_share_move: float) -> float:
    if response_volume < 0 or per_share_move < 0:
        raise ValueError("inputs must be nonnegative")
    return response_volume * per_share_move


def latency_capture(excess_volume_curve, f: float, tf: float = 30.0) -> float:
    """One-way latency (ms) that arrives ahead of fraction ``f`` of the excess volume."""
    if not 0.0 < f < 1.0:
        raise ValueError("f must lie in (0, 1)")
    if total_response(excess_volume_curve, 0.0, tf) <= 0:
        raise UndefinedQuantile("zero total excess volume")
    return latency_quantile(excess_volume_curve, 1.0 - f, 0.0, tf)


def econ_report(p: EconParams) -> dict:
    move = tick_fungibility(p.emini_price, p.emini_tick, p.equity_price)
    return {
        "inputs": asdict(p),
        "hft_revenue_usd_per_year": hft_revenue_estimate(p.f_c, p.volume),
        "tick_fungibility_usd_per_share": move,
        "response_pnl_usd": response_pnl(p.response_volume, move),
    }
