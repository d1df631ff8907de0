"""Shared primitives: timestamps, prices, geodesy and propagation media.

Timestamps are plain integers (milliseconds or nanoseconds since midnight
in the exchange's GPS-synchronised day frame); the helpers here validate
and convert them. Prices are integers too: equities in units of 1e-4
dollars, futures in contract ticks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NewType

EARTH_RADIUS_KM = 6371.0
C_KM_PER_S = 299_792.458

MS_PER_DAY = 86_400_000
NS_PER_MS = 1_000_000
NS_PER_DAY = MS_PER_DAY * NS_PER_MS

MsTimestamp = NewType("MsTimestamp", int)
NsTimestamp = NewType("NsTimestamp", int)
PriceE4 = NewType("PriceE4", int)
FuturesPrice = NewType("FuturesPrice", int)

CENT_E4 = 100  # one cent in PriceE4 units; also the SPY tick
EMINI_TICK_POINTS = 0.25
EMINI_TICK_DOLLARS = 12.5

SESSION_OPEN_MS = 34_200_000  # 09:30 ET
SESSION_CLOSE_MS = 57_600_000  # 16:00 ET


def check_ms(v: int) -> MsTimestamp:
    if not 0 <= v < MS_PER_DAY:
        raise ValueError(f"millisecond timestamp out of range: {v}")
    return MsTimestamp(int(v))


def check_ns(v: int) -> NsTimestamp:
    if not 0 <= v < NS_PER_DAY:
        raise ValueError(f"nanosecond timestamp out of range: {v}")
    return NsTimestamp(int(v))


def ns_to_ms(v: int) -> MsTimestamp:
    return MsTimestamp(v // NS_PER_MS)


def dollars_to_e4(d: float) -> PriceE4:
    return PriceE4(round(d * 10_000))


def e4_to_dollars(p: int) -> float:
    return p / 10_000


@dataclass(frozen=True, slots=True)
class GeoPoint:
    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat_deg}")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon_deg}")


AURORA = GeoPoint(41.80, -88.24)  # CME Globex matching engine
CARTERET = GeoPoint(40.58, -74.25)  # Nasdaq matching engine


@dataclass(frozen=True, slots=True)
class PropagationMedium:
    kind: str
    n: float = 1.0

    def __post_init__(self):
        if self.kind not in ("vacuum-air", "fiber"):
            raise ValueError(f"unknown medium kind {self.kind!r}")
        if self.n < 1.0:
            raise ValueError("refractive index must be >= 1")


VACUUM_AIR = PropagationMedium("vacuum-air", 1.0)
FIBER = PropagationMedium("fiber", 1.4)


def great_circle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in km on a sphere of radius 6371 km."""
    p1, p2 = math.radians(a.lat_deg), math.radians(b.lat_deg)
    dp = p2 - p1
    dl = math.radians(b.lon_deg - a.lon_deg)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, h)))


def light_time(d_km: float, medium: PropagationMedium = VACUUM_AIR) -> float:
    """One-way travel time in milliseconds over ``d_km`` through ``medium``."""
    if d_km < 0:
        raise ValueError("distance must be nonnegative")
    return medium.n * d_km / C_KM_PER_S * 1e3


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Initial great-circle azimuth from ``a`` to ``b`` in radians, [0, 2*pi).

    North is 0 and east is pi/2.
    """
    if a == b:
        raise ValueError("undefined bearing")
    p1, p2 = math.radians(a.lat_deg), math.radians(b.lat_deg)
    dl = math.radians(b.lon_deg - a.lon_deg)
    y = math.sin(dl) * math.cos(p2)
    x = math.cos(p1) * math.sin(p2) - math.sin(p1) * math.cos(p2) * math.cos(dl)
    if x == 0.0 and y == 0.0:
        raise ValueError("undefined bearing")
    return math.atan2(y, x) % (2 * math.pi)


def destination(a: GeoPoint, bearing: float, d_km: float) -> GeoPoint:
    """Point reached travelling ``d_km`` from ``a`` along initial ``bearing``."""
    p1 = math.radians(a.lat_deg)
    l1 = math.radians(a.lon_deg)
    dd = d_km / EARTH_RADIUS_KM
    p2 = math.asin(
        math.sin(p1) * math.cos(dd) + math.cos(p1) * math.sin(dd) * math.cos(bearing)
    )
    l2 = l1 + math.atan2(
        math.sin(bearing) * math.sin(dd) * math.cos(p1),
        math.cos(dd) - math.sin(p1) * math.sin(p2),
    )
    lon = (math.degrees(l2) + 540.0) % 360.0 - 180.0
    return GeoPoint(math.degrees(p2), lon)
