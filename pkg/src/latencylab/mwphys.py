"""Microwave hop and route physics.

Clearance (Fresnel radius plus earth bulge plus obstructions), hop-length
limits, radio buffering latency, excess-distance geometry, and the per-route
latency budget printed in the route table.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

from .core import C_KM_PER_S, GeoPoint, great_circle_distance

US_PER_KM = 1e6 / C_KM_PER_S  # free-space latency per km, in microseconds

CABLE_KM_PER_TOWER = 0.150
CABLE_US_PER_TOWER = 0.75


@dataclass(frozen=True)
class RadioProfile:
    f_ghz: float = 6.0
    l_rad_us: float = 10.0
    buffer_bytes: int = 64
    bitrate_mbps: float = 155.0

    def __post_init__(self):
        if self.f_ghz <= 0:
            raise ValueError("frequency must be positive")
        if self.l_rad_us < 0:
            raise ValueError("radio latency must be nonnegative")


@dataclass(frozen=True)
class AtmosphereModel:
    k: float = 4.0 / 3.0

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("K must be positive")


@dataclass(frozen=True)
class Tower:
    id: int
    position: GeoPoint
    height_m: float
    availability_p: float = 1.0
    klass: str = "endpoint"

    def __post_init__(self):
        if self.height_m <= 0:
            raise ValueError("tower height must be positive")
        if not 0.0 <= self.availability_p <= 1.0:
            raise ValueError("availability must lie in [0, 1]")


@dataclass(frozen=True)
class Route:
    towers: tuple[Tower, ...]

    def __post_init__(self):
        if len(self.towers) < 2:
            raise ValueError("route needs at least 2 towers")
        for a, b in zip(self.towers, self.towers[1:]):
            if a.position == b.position:
                raise ValueError("consecutive towers must be distinct")

    @property
    def a(self) -> Tower:
        return self.towers[0]

    @property
    def b(self) -> Tower:
        return self.towers[-1]

    @property
    def n_hops(self) -> int:
        return len(self.towers) - 1

    def hop_lengths(self) -> list[float]:
        return [
            great_circle_distance(p.position, q.position)
            for p, q in zip(self.towers, self.towers[1:])
        ]


@dataclass(frozen=True)
class RouteMetrics:
    """One row of the route table. Distances in km, latencies in us."""

    n_hops: int
    d_geo_km: float
    d_tot_km: float
    l_rad_us: float
    cabling: bool = False
    d_ex_override_km: float | None = field(default=None, compare=False)

    @property
    def d_ex_km(self) -> float:
        if self.d_ex_override_km is not None:
            return self.d_ex_override_km
        return self.d_tot_km - self.d_geo_km

    @property
    def l_d_us(self) -> float:
        return self.d_ex_km * US_PER_KM

    @property
    def l_equip_us(self) -> float:
        return self.n_hops * self.l_rad_us

    @property
    def l_ex_us(self) -> float:
        return self.l_equip_us + self.l_d_us

    @property
    def l_cable_us(self) -> float:
        if not self.cabling:
            return 0.0
        return CABLE_US_PER_TOWER * max(self.n_hops - 1, 0)

    @property
    def d_cable_km(self) -> float:
        if not self.cabling:
            return 0.0
        return CABLE_KM_PER_TOWER * max(self.n_hops - 1, 0)

    @property
    def l_min_ms(self) -> float:
        return (self.d_geo_km * US_PER_KM + self.l_ex_us + self.l_cable_us) / 1e3


def fresnel_radius(d_km: float, f_ghz: float) -> float:
    """First Fresnel-zone radius in metres at the midpoint of a hop."""
    if d_km < 0 or f_ghz <= 0:
        raise ValueError("need D >= 0 and f > 0")
    return 8.7 * math.sqrt(d_km) / math.sqrt(f_ghz)


def earth_bulge(d_km: float, k: float = 4.0 / 3.0) -> float:
    """Midpoint earth bulge in metres for effective-radius factor ``k``."""
    if d_km < 0 or k <= 0:
        raise ValueError("need D >= 0 and K > 0")
    if math.isinf(k):
        return 0.0
    return d_km * d_km / 50.0 / k


def clearance_needed(d_km, profile: RadioProfile, atmosphere: AtmosphereModel, h_obs_m):
    return fresnel_radius(d_km, profile.f_ghz) + earth_bulge(d_km, atmosphere.k) + h_obs_m


def hop_feasible(
    d_km: float,
    profile: RadioProfile,
    atmosphere: AtmosphereModel,
    h_tow_a: float,
    h_tow_b: float,
    h_obs: float = 10.0,
) -> bool:
    # the shorter tower bounds the ray height at midpoint (conservative)
    return min(h_tow_a, h_tow_b) > clearance_needed(d_km, profile, atmosphere, h_obs)


def max_hop_length(
    profile: RadioProfile,
    atmosphere: AtmosphereModel,
    h_tow: float,
    h_obs: float = 10.0,
    tol_km: float = 0.01,
) -> float:
    """Longest feasible flat-terrain hop for equal tower heights, by bisection."""
    if h_tow <= h_obs:
        raise ValueError("no feasible hop: tower not above obstructions")
    lo, hi = 0.0, 1.0
    while hop_feasible(hi, profile, atmosphere, h_tow, h_tow, h_obs):
        lo, hi = hi, hi * 2
        if hi > 1e5:
            raise ValueError("clearance equation has no root")
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if hop_feasible(mid, profile, atmosphere, h_tow, h_tow, h_obs):
            lo = mid
        else:
            hi = mid
    return lo


def radio_buffer_latency(buffer_bytes: float, bitrate_mbps: float) -> float:
    """Microseconds to buffer and read out ``buffer_bytes`` at ``bitrate_mbps``."""
    if buffer_bytes <= 0 or bitrate_mbps <= 0:
        raise ValueError("buffer size and bitrate must be positive")
    return 10.24 * (buffer_bytes / 64.0) / (bitrate_mbps / 100.0)


def bend_excess(delta_alpha: float, d_km: float, geometry: str = "two-hop") -> float:
    """Small-angle excess path length (km) from a heading change ``delta_alpha``."""
    if abs(delta_alpha) > 0.3:
        warnings.warn(
            f"bend_excess: |delta_alpha|={abs(delta_alpha):.3f} rad is outside the small-angle regime",
            stacklevel=2,
        )
    if geometry == "two-hop":
        return d_km * delta_alpha**2 / 8.0
    if geometry == "three-hop":
        return d_km * delta_alpha**2 / 4.0
    raise ValueError(f"unknown geometry {geometry!r}")


def route_metrics(route: Route, profile: RadioProfile, include_cabling: bool = False) -> RouteMetrics:
    d_tot = sum(route.hop_lengths())
    d_geo = great_circle_distance(route.a.position, route.b.position)
    return RouteMetrics(route.n_hops, d_geo, d_tot, profile.l_rad_us, include_cabling)


def greedy_excess_estimate(n_near: float, d_tot_km: float) -> float:
    """Expected excess distance of hop-by-hop planning with ``n_near`` live links."""
    if n_near < 1:
        raise ValueError("n_near must be >= 1")
    if math.isinf(n_near):
        return 0.0
    return 0.25 * (math.pi / n_near) ** 2 * d_tot_km


# --- route table I/O --------------------------------------------------------

TABLE_COLUMNS = ["licensee", "N", "D_geo", "D_tot", "D_ex", "L_D", "N_L_rad", "L_ex", "bitrate"]


@dataclass(frozen=True)
class RouteSummary:
    """Per-route inputs as printed in a route table."""

    licensee: str
    n_hops: int
    d_geo_km: float
    d_tot_km: float
    bitrate: str = ""
    d_ex_km: float | None = None

    def metrics(self, l_rad_us: float, use_printed_d_ex: bool = False) -> RouteMetrics:
        override = self.d_ex_km if use_printed_d_ex else None
        return RouteMetrics(self.n_hops, self.d_geo_km, self.d_tot_km, l_rad_us,
                            d_ex_override_km=override)


@dataclass(frozen=True)
class PublishedRow:
    summary: RouteSummary
    files: int
    first_file: str
    d_ex: int
    l_d: int
    n_l_rad: int
    l_ex: int


def load_published_table() -> list[PublishedRow]:
    """The fifteen licensed Chicago-NJ routes with their printed figures."""
    text = resources.files("latencylab").joinpath("data/licensed_routes.csv").read_text()
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        s = RouteSummary(r["licensee"], int(r["N"]), float(r["D_geo"]), float(r["D_tot"]),
                         r["bitrate"], float(r["D_ex"]))
        rows.append(PublishedRow(s, int(r["files"]), r["first_file"], int(r["D_ex"]),
                                 int(r["L_D"]), int(r["N_L_rad"]), int(r["L_ex"])))
    return rows


def read_route_summaries(stream) -> list[RouteSummary]:
    """Parse ``licensee,N,D_geo,D_tot[,D_ex][,bitrate]`` rows."""
    reader = csv.DictReader(stream)
    missing = {"licensee", "N", "D_geo", "D_tot"} - set(reader.fieldnames or [])
    if missing:
        raise ValueError(f"route summary CSV missing columns: {sorted(missing)}")
    out = []
    for r in reader:
        d_ex = r.get("D_ex")
        out.append(RouteSummary(
            r["licensee"], int(r["N"]), float(r["D_geo"]), float(r["D_tot"]),
            r.get("bitrate") or "", float(d_ex) if d_ex not in (None, "") else None,
        ))
    return out


def write_metrics_table(rows: Sequence[tuple[str, RouteMetrics, str]], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for name, m, bitrate in rows:
        w.writerow([
            name, m.n_hops, f"{m.d_geo_km:.1f}", f"{m.d_tot_km:.1f}", f"{m.d_ex_km:.1f}",
            round(m.l_d_us), round(m.l_equip_us), round(m.l_ex_us), bitrate,
        ])
