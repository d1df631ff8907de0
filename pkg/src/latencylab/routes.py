"""Tower fields, feasibility graphs, route planning and license-record reconstruction."""
from __future__ import annotations

import csv
import datetime as dt
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .core import AURORA, CARTERET, GeoPoint, destination, great_circle_distance, initial_bearing
from .errors import CycleDetected, FeedFormatError, GreedyStuck, NoConnectivity
from .mwphys import (
    US_PER_KM,
    AtmosphereModel,
    RadioProfile,
    Route,
    RouteMetrics,
    Tower,
    max_hop_length,
    route_metrics,
)

# --- tower fields -----------------------------------------------------------


@dataclass(frozen=True)
class TowerClass:
    name: str
    fraction: float
    h_min_m: float
    h_max_m: float
    availability_p: float


DEFAULT_CLASSES = (
    TowerClass("tall", 0.25, 80.0, 130.0, 0.5),
    TowerClass("medium", 0.45, 40.0, 80.0, 0.7),
    TowerClass("short", 0.30, 15.0, 40.0, 0.9),
)


@dataclass(frozen=True)
class CorridorSpec:
    """A band of ``half_width_km`` either side of the great circle from ``a`` to ``b``."""

    a: GeoPoint = AURORA
    b: GeoPoint = CARTERET
    half_width_km: float = 70.0
    density_per_km2: float = 0.02
    classes: tuple[TowerClass, ...] = DEFAULT_CLASSES
    endpoint_height_m: float = 120.0

    def __post_init__(self):
        if self.density_per_km2 < 0:
            raise ValueError("density must be nonnegative")
        if abs(sum(c.fraction for c in self.classes) - 1.0) > 1e-9:
            raise ValueError("class fractions must sum to 1")

    @property
    def length_km(self) -> float:
        return great_circle_distance(self.a, self.b)

    @property
    def area_km2(self) -> float:
        return self.length_km * 2.0 * self.half_width_km


@dataclass
class TowerField:
    spec: CorridorSpec
    seed: int
    towers: list[Tower]  # interior towers only, ids 1..n

    @property
    def endpoints(self) -> tuple[Tower, Tower]:
        h = self.spec.endpoint_height_m
        return (Tower(0, self.spec.a, h), Tower(len(self.towers) + 1, self.spec.b, h))

    def all_towers(self) -> list[Tower]:
        a, b = self.endpoints
        return [a, *self.towers, b]


def generate_tower_field(spec: CorridorSpec = CorridorSpec(), seed: int = 0) -> TowerField:
    """Poisson-scatter towers uniformly over the corridor, drawing class and height per tower."""
    if spec.area_km2 <= 0:
        raise ValueError("corridor has zero area")
    rng = np.random.default_rng(seed)
    n = int(rng.poisson(spec.density_per_km2 * spec.area_km2))
    length = spec.length_km
    along = rng.uniform(0.0, length, n)
    across = rng.uniform(-spec.half_width_km, spec.half_width_km, n)
    klass = rng.choice(len(spec.classes), size=n, p=[c.fraction for c in spec.classes])
    u = rng.random(n)
    b0 = initial_bearing(spec.a, spec.b)
    towers = []
    for i in range(n):
        foot = destination(spec.a, b0, float(along[i]))
        # perpendicular offset from the local track direction
        local = initial_bearing(foot, spec.b) if along[i] < length - 1e-6 else b0
        pos = destination(foot, local + math.pi / 2, float(across[i]))
        c = spec.classes[klass[i]]
        h = c.h_min_m + u[i] * (c.h_max_m - c.h_min_m)
        towers.append(Tower(i + 1, pos, float(h), c.availability_p, c.name))
    return TowerField(spec, seed, towers)


def cross_track_km(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> float:
    """Signed distance of ``p`` from the great circle through ``a`` and ``b``."""
    from .core import EARTH_RADIUS_KM

    d13 = great_circle_distance(a, p) / EARTH_RADIUS_KM
    if d13 == 0:
        return 0.0
    t13 = initial_bearing(a, p)
    t12 = initial_bearing(a, b)
    return math.asin(math.sin(d13) * math.sin(t13 - t12)) * EARTH_RADIUS_KM


# --- feasibility graph --------------------------------------------------------


@dataclass
class FeasibilityGraph:
    """Undirected hop graph over available towers; node 0 and node ``n-1`` are the endpoints."""

    nodes: list[Tower]
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_km: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    weights_us: np.ndarray
    hop_km: np.ndarray  # per CSR entry
    profile: RadioProfile
    atmosphere: AtmosphereModel

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def source(self) -> int:
        return 0

    @property
    def target(self) -> int:
        return len(self.nodes) - 1

    def neighbours(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.indptr[u], self.indptr[u + 1]
        return self.indices[s:e], self.hop_km[s:e]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in zip(self.edge_i, self.edge_j)}


def _csr(n, ei, ej, d, l_rad):
    src = np.concatenate([ei, ej])
    dst = np.concatenate([ej, ei])
    dd = np.concatenate([d, d])
    order = np.lexsort((dst, src))
    src, dst, dd = src[order], dst[order], dd[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, dst.astype(np.int64), dd * US_PER_KM + l_rad, dd


def build_feasibility_graph(tower_field: TowerField | Sequence[Tower],
                            profile: RadioProfile = RadioProfile(),
                            atmosphere: AtmosphereModel = AtmosphereModel(),
                            availability_seed: int = 0, h_obs: float = 10.0,
                            availability: float | None = None) -> FeasibilityGraph:
    """Keep each interior tower with its availability probability, then link feasible hops.

    ``tower_field`` may also be a plain tower sequence whose first and last
    entries are the endpoints. ``availability`` overrides every tower's own
    probability; the same uniform draw is used per tower, so a higher
    override always keeps a superset of towers.
    """
    towers = tower_field.all_towers() if isinstance(tower_field, TowerField) else list(tower_field)
    if len(towers) < 2:
        raise ValueError("need at least the two endpoints")
    a, *mid, b = towers
    u = np.random.default_rng(availability_seed).random(len(mid))
    kept = [t for t, x in zip(mid, u) if x < (t.availability_p if availability is None else availability)]
    nodes = [a, *kept, b]
    lat = np.array([t.position.lat_deg for t in nodes])
    lon = np.array([t.position.lon_deg for t in nodes])
    h = np.array([t.height_m for t in nodes])
    h_top = float(np.max(h))
    max_km = max_hop_length(profile, atmosphere, h_top, h_obs) + 1.0 if h_top > h_obs else 0.0
    ei, ej, d = kernels.feasible_pairs(lat, lon, h, profile.f_ghz, atmosphere.k, h_obs, max_km)
    indptr, indices, w, hop = _csr(len(nodes), ei, ej, d, profile.l_rad_us)
    g = FeasibilityGraph(nodes, ei, ej, d, indptr, indices, w, hop, profile, atmosphere)
    if indptr[1] == indptr[0] or indptr[-1] == indptr[-2]:
        raise NoConnectivity()
    return g


# --- planning -----------------------------------------------------------------


@dataclass
class PlannedRoute:
    route: Route
    metrics: RouteMetrics
    latency_us: float
    node_path: list[int]
    n_near: float | None = None
    fallbacks: int = 0


def _planned(graph: FeasibilityGraph, path: list[int], **kw) -> PlannedRoute:
    route = Route(tuple(graph.nodes[i] for i in path))
    m = route_metrics(route, graph.profile)
    lat_us = m.d_tot_km * US_PER_KM + m.n_hops * graph.profile.l_rad_us
    return PlannedRoute(route, m, lat_us, path, **kw)


def plan_optimal_route(graph: FeasibilityGraph) -> PlannedRoute:
    """Minimum-latency path (propagation plus per-hop radio latency)."""
    dist, pred = kernels.dijkstra(graph.indptr, graph.indices, graph.weights_us, graph.source)
    if not math.isfinite(dist[graph.target]):
        raise NoConnectivity()
    path = [graph.target]
    while path[-1] != graph.source:
        path.append(int(pred[path[-1]]))
    return _planned(graph, path[::-1])


def _bearings(graph: FeasibilityGraph, u: int, vs: np.ndarray) -> np.ndarray:
    p = graph.nodes[u].position
    lat1 = math.radians(p.lat_deg)
    lat2 = np.radians([graph.nodes[v].position.lat_deg for v in vs])
    dlon = np.radians([graph.nodes[v].position.lon_deg - p.lon_deg for v in vs])
    y = np.sin(dlon) * np.cos(lat2)
    x = math.cos(lat1) * np.sin(lat2) - math.sin(lat1) * np.cos(lat2) * np.cos(dlon)
    return np.arctan2(y, x)


def plan_greedy_route(graph: TowerField | FeasibilityGraph, profile: RadioProfile = RadioProfile(),
                      atmosphere: AtmosphereModel = AtmosphereModel(), *,
                      min_hop_km: float = 45.0, max_steps: int | None = None,
                      availability_seed: int = 0) -> PlannedRoute:
    """Hop-by-hop planning toward the far endpoint.

    At each tower, jump straight to the destination if that hop is live.
    Otherwise consider live, unvisited neighbours in the forward half-plane
    (heading within pi/2 of the bearing to the destination) at least
    ``min_hop_km`` away, falling back to any forward neighbour, and take the
    one closest in heading. ``n_near`` on the result is the mean size of the
    long-hop candidate set over the towers visited.
    """
    if isinstance(graph, TowerField):
        graph = build_feasibility_graph(graph, profile, atmosphere, availability_seed)
    tgt = graph.target
    dest = graph.nodes[tgt].position
    cur = graph.source
    path = [cur]
    visited = {cur}
    near_counts = []
    fallbacks = 0
    limit = max_steps if max_steps is not None else graph.n_nodes
    for step in range(limit):
        nb, km = graph.neighbours(cur)
        if np.any(nb == tgt):
            path.append(tgt)
            return _planned(graph, path, n_near=float(np.mean(near_counts)) if near_counts else None,
                            fallbacks=fallbacks)
        if len(nb) == 0:
            raise GreedyStuck(cur, step)
        want = initial_bearing(graph.nodes[cur].position, dest)
        dev = np.abs((_bearings(graph, cur, nb) - want + math.pi) % (2 * math.pi) - math.pi)
        fwd = (dev < math.pi / 2) & np.array([v not in visited for v in nb])
        cand = fwd & (km >= min_hop_km)
        near_counts.append(int(cand.sum()))
        if not cand.any():
            cand = fwd
            fallbacks += 1
        if not cand.any():
            raise GreedyStuck(cur, step)
        idx = np.nonzero(cand)[0]
        pick = idx[np.lexsort((nb[idx], dev[idx]))[0]]
        cur = int(nb[pick])
        path.append(cur)
        visited.add(cur)
    raise GreedyStuck(cur, limit)


@dataclass
class EnsembleRow:
    seed: int
    optimal: PlannedRoute | None
    greedy: PlannedRoute | None
    n_towers: int


def route_ensemble(spec: CorridorSpec, seeds: Iterable[int], profile: RadioProfile = RadioProfile(),
                   atmosphere: AtmosphereModel = AtmosphereModel(), greedy: bool = True,
                   min_hop_km: float = 45.0) -> list[EnsembleRow]:
    """Optimal and greedy routes per seed; failures are recorded as None."""
    rows = []
    for s in seeds:
        f = generate_tower_field(spec, s)
        try:
            g = build_feasibility_graph(f, profile, atmosphere, availability_seed=s)
            opt = plan_optimal_route(g)
        except NoConnectivity:
            rows.append(EnsembleRow(s, None, None, len(f.towers)))
            continue
        gr = None
        if greedy:
            try:
                gr = plan_greedy_route(g, min_hop_km=min_hop_km)
            except GreedyStuck:
                gr = None
        rows.append(EnsembleRow(s, opt, gr, len(f.towers)))
    return rows


# --- license records ----------------------------------------------------------

LICENSE_COLUMNS = ["licensee", "tx_lat", "tx_lon", "rx_lat", "rx_lon", "freq_ghz", "bitrate_mbps", "filed"]


@dataclass(frozen=True)
class LicenseRecord:
    licensee: str
    tx: GeoPoint
    rx: GeoPoint
    freq_ghz: float
    bitrate_mbps: float
    filed: dt.date

    def __post_init__(self):
        if self.tx == self.rx:
            raise ValueError("tx and rx coincide")

    @property
    def length_km(self) -> float:
        return great_circle_distance(self.tx, self.rx)


@dataclass
class LicenseIngest:
    records: list[LicenseRecord]
    duplicates: dict[tuple, int] = field(default_factory=dict)  # key -> extra copies dropped
    malformed: list[tuple[int, str]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def ingest_license_records(stream: Iterable[str]) -> LicenseIngest:
    """Parse a license CSV, collecting malformed rows by line number and collapsing duplicates."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise FeedFormatError(1, "empty license file")
    header = [h.strip() for h in header]
    missing = [c for c in LICENSE_COLUMNS if c not in header]
    if missing:
        raise FeedFormatError(1, f"missing columns: {', '.join(missing)}")
    col = {c: header.index(c) for c in LICENSE_COLUMNS}
    out = LicenseIngest([])
    seen: dict[tuple, int] = {}
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            if len(row) < len(header):
                raise ValueError(f"expected {len(header)} fields, got {len(row)}")
            get = lambda c: row[col[c]].strip()  # noqa: E731
            rec = LicenseRecord(
                get("licensee"),
                GeoPoint(float(get("tx_lat")), float(get("tx_lon"))),
                GeoPoint(float(get("rx_lat")), float(get("rx_lon"))),
                float(get("freq_ghz")), float(get("bitrate_mbps")),
                dt.date.fromisoformat(get("filed")),
            )
            if not rec.licensee:
                raise ValueError("empty licensee")
        except ValueError as exc:
            out.malformed.append((line, str(exc)))
            continue
        key = (rec.tx, rec.rx, rec.licensee)
        if key in seen:
            out.duplicates[key] = out.duplicates.get(key, 0) + 1
            continue
        seen[key] = line
        out.records.append(rec)
    return out


def write_license_records(records: Iterable[LicenseRecord], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(LICENSE_COLUMNS)
    for r in records:
        w.writerow([r.licensee, repr(r.tx.lat_deg), repr(r.tx.lon_deg), repr(r.rx.lat_deg),
                    repr(r.rx.lon_deg), f"{r.freq_ghz:g}", f"{r.bitrate_mbps:g}", r.filed.isoformat()])


def export_route_records(route: Route | Sequence[GeoPoint], licensee: str, freq_ghz: float = 6.0,
                         bitrate_mbps: float = 155.0, filed: dt.date = dt.date(2012, 1, 1),
                         rng: np.random.Generator | None = None) -> list[LicenseRecord]:
    """One license record per hop; with ``rng``, hop order and link direction are scrambled."""
    pts = [t.position for t in route.towers] if isinstance(route, Route) else list(route)
    recs = []
    for a, b in zip(pts, pts[1:]):
        if rng is not None and rng.random() < 0.5:
            a, b = b, a
        recs.append(LicenseRecord(licensee, a, b, freq_ghz, bitrate_mbps, filed))
    if rng is not None:
        recs = [recs[i] for i in rng.permutation(len(recs))]
    return recs


@dataclass
class ReconstructedRoute:
    licensee: str
    sites: list[GeoPoint]  # ordered west to east
    chain: list[LicenseRecord]  # hop i joins sites[i] and sites[i+1]
    residue: list[LicenseRecord]
    metrics: RouteMetrics | None

    @property
    def n_hops(self) -> int:
        return len(self.chain)

    def hop_rows(self) -> list[tuple[int, float, float, float, float]]:
        """``(seq, lat, lon, hop_km, bearing_rad)`` per site; the first site has hop 0."""
        rows = []
        for k, p in enumerate(self.sites):
            if k == 0:
                hop, brg = 0.0, 0.0
            else:
                hop = self.chain[k - 1].length_km
                brg = initial_bearing(self.sites[k - 1], p)
            rows.append((k, p.lat_deg, p.lon_deg, hop, brg))
        return rows


def _cluster(points: list[GeoPoint], tol_km: float) -> list[int]:
    parent = list(range(len(points)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    order = sorted(range(len(points)), key=lambda i: points[i].lat_deg)
    # latitude sweep: 1 degree of latitude is ~111 km
    dlat = tol_km / 111.0 + 1e-9
    for a_pos, i in enumerate(order):
        for j in order[a_pos + 1:]:
            if points[j].lat_deg - points[i].lat_deg > dlat:
                break
            if great_circle_distance(points[i], points[j]) <= tol_km:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    return [find(i) for i in range(len(points))]


def _farthest(adj, start):
    dist = {start: 0}
    prev = {start: None}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v, _ in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    prev[v] = u
                    nxt.append(v)
        frontier = nxt
    far = max(sorted(dist), key=lambda n: dist[n])
    return far, prev


def _reconstruct_one(licensee, recs, tol_km, min_hops, l_rad_us):
    pts = [p for r in recs for p in (r.tx, r.rx)]
    root = _cluster(pts, tol_km)
    site_of: dict[int, GeoPoint] = {}
    for i, r in enumerate(root):
        p = pts[i]
        if r not in site_of or (p.lat_deg, p.lon_deg) < (site_of[r].lat_deg, site_of[r].lon_deg):
            site_of[r] = p
    residue: list[LicenseRecord] = []
    best: dict[tuple[int, int], LicenseRecord] = {}
    for k, rec in enumerate(recs):
        u, v = root[2 * k], root[2 * k + 1]
        if u == v:
            residue.append(rec)
            continue
        key = (min(u, v), max(u, v))
        if key in best:
            keep, drop = sorted((best[key], rec), key=lambda r: r.length_km)
            best[key] = keep
            residue.append(drop)
        else:
            best[key] = rec
    adj: dict[int, list] = defaultdict(list)
    for (u, v), rec in best.items():
        adj[u].append((v, rec))
        adj[v].append((u, rec))
    seen: set[int] = set()
    routes = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp, stack = {start}, [start]
        while stack:
            u = stack.pop()
            for v, _ in adj[u]:
                if v not in comp:
                    comp.add(v)
                    stack.append(v)
        seen |= comp
        n_edges = sum(len(adj[u]) for u in comp) // 2
        if n_edges != len(comp) - 1:
            raise CycleDetected(licensee)
        end1, _ = _farthest(adj, min(comp))
        end2, prev = _farthest(adj, end1)
        node_path = [end2]
        while prev[node_path[-1]] is not None:
            node_path.append(prev[node_path[-1]])
        path_edges = {(min(a, b), max(a, b)) for a, b in zip(node_path, node_path[1:])}
        comp_edges = [k for k in best if k[0] in comp]
        if len(path_edges) < min_hops:
            residue.extend(best[k] for k in comp_edges)
            continue
        residue.extend(best[k] for k in comp_edges if k not in path_edges)
        sites = [site_of[n] for n in node_path]
        chain = [best[(min(a, b), max(a, b))] for a, b in zip(node_path, node_path[1:])]
        if sites[0].lon_deg > sites[-1].lon_deg:
            sites.reverse()
            chain.reverse()
        d_tot = sum(r.length_km for r in chain)
        m = RouteMetrics(len(chain), great_circle_distance(sites[0], sites[-1]), d_tot, l_rad_us)
        routes.append(ReconstructedRoute(licensee, sites, chain, [], m))
    routes.sort(key=lambda r: (r.sites[0].lon_deg, r.sites[0].lat_deg))
    if not routes:
        return [ReconstructedRoute(licensee, [], [], residue, None)]
    routes[0].residue = residue
    return routes


def reconstruct_routes(records: Iterable[LicenseRecord], tolerance_m: float = 100.0,
                       min_hops: int = 3, l_rad_us: float = 10.0) -> list[ReconstructedRoute]:
    """Chain each licensee's links into routes by endpoint coincidence.

    Endpoints within ``tolerance_m`` are merged into one site. Of parallel
    links between the same two sites the shorter is kept. Each tree of links
    yields its longest chain, provided it has at least ``min_hops`` hops;
    everything else is returned as residue on the licensee's first route.
    """
    by_lic: dict[str, list[LicenseRecord]] = defaultdict(list)
    for r in records:
        by_lic[r.licensee].append(r)
    out = []
    for lic in sorted(by_lic):
        out.extend(_reconstruct_one(lic, by_lic[lic], tolerance_m / 1000.0, min_hops, l_rad_us))
    return out


def hop_list_csv(route: ReconstructedRoute | PlannedRoute) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seq", "lat", "lon", "hop_km", "bearing_rad"])
    if isinstance(route, PlannedRoute):
        pts = [t.position for t in route.route.towers]
        rows = [(0, pts[0].lat_deg, pts[0].lon_deg, 0.0, 0.0)]
        for k in range(1, len(pts)):
            rows.append((k, pts[k].lat_deg, pts[k].lon_deg, great_circle_distance(pts[k - 1], pts[k]),
                         initial_bearing(pts[k - 1], pts[k])))
    else:
        rows = route.hop_rows()
    for seq, lat, lon, hop, brg in rows:
        w.writerow([seq, f"{lat:.6f}", f"{lon:.6f}", f"{hop:.4f}", f"{brg:.6f}"])
    return buf.getvalue()
