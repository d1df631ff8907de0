import datetime as dt
import io
import math

import numpy as np
import pytest

from latencylab.core import AURORA, CARTERET, GeoPoint, destination, great_circle_distance, initial_bearing
from latencylab.errors import CycleDetected, FeedFormatError, GreedyStuck, NoConnectivity
from latencylab.mwphys import Tower
from latencylab.routes import (
    CorridorSpec,
    LicenseRecord,
    build_feasibility_graph,
    cross_track_km,
    export_route_records,
    generate_tower_field,
    hop_list_csv,
    ingest_license_records,
    plan_greedy_route,
    plan_optimal_route,
    reconstruct_routes,
    route_ensemble,
    write_license_records,
)

SPEC = CorridorSpec()


def _line_towers(n, hop_km, start=GeoPoint(40.0, -80.0), brg=math.pi / 2, h=100.0):
    pts = [destination(start, brg, k * hop_km) if k else start for k in range(n + 1)]
    return [Tower(i, p, h) for i, p in enumerate(pts)]


def test_zero_density_gives_only_endpoints():
    f = generate_tower_field(CorridorSpec(density_per_km2=0.0), seed=1)
    assert f.towers == [] and len(f.all_towers()) == 2


@pytest.mark.parametrize("seed", range(5))
def test_tower_count_and_corridor(seed):
    f = generate_tower_field(SPEC, seed)
    lam = SPEC.density_per_km2 * SPEC.area_km2
    assert abs(len(f.towers) - lam) <= 4 * math.sqrt(lam)
    xt = np.array([cross_track_km(t.position, SPEC.a, SPEC.b) for t in f.towers])
    assert np.all(np.abs(xt) <= SPEC.half_width_km + 1e-6)
    # both sides populated roughly evenly
    assert abs(np.mean(xt > 0) - 0.5) < 0.1
    fracs = {c.name: c.fraction for c in SPEC.classes}
    for name, frac in fracs.items():
        assert abs(np.mean([t.klass == name for t in f.towers]) - frac) < 0.06


def test_pair_feasibility_by_distance():
    near = build_feasibility_graph(_line_towers(1, 40.0))
    assert near.edge_set() == {(0, 1)}
    with pytest.raises(NoConnectivity):
        build_feasibility_graph(_line_towers(1, 80.0))


def test_availability_zero_leaves_endpoints():
    f = generate_tower_field(SPEC, 0)
    with pytest.raises(NoConnectivity):
        build_feasibility_graph(f, availability=0.0)


def test_collinear_chain_greedy_equals_optimal():
    towers = _line_towers(8, 40.0)
    g = build_feasibility_graph(towers)
    opt = plan_optimal_route(g)
    gr = plan_greedy_route(g, min_hop_km=45.0)
    assert opt.node_path == gr.node_path == list(range(9))
    assert opt.metrics.d_ex_km == pytest.approx(0.0, abs=1e-6)
    assert gr.fallbacks == 7  # the final hop jumps straight to the destination


def test_greedy_stuck_when_no_forward_link():
    # endpoint links only to a tower behind it
    a = GeoPoint(40.0, -80.0)
    behind = Tower(1, destination(a, -math.pi / 2, 30.0), 100.0)
    far = Tower(2, destination(a, math.pi / 2, 300.0), 100.0)
    g = build_feasibility_graph([Tower(0, a, 100.0), behind, Tower(3, destination(far.position, 0, 1), 100.0),
                                 far])
    with pytest.raises((GreedyStuck, NoConnectivity)):
        plan_greedy_route(g)


def test_edge_set_deterministic():
    f = generate_tower_field(SPEC, 3)
    g1 = build_feasibility_graph(f, availability_seed=3)
    g2 = build_feasibility_graph(generate_tower_field(SPEC, 3), availability_seed=3)
    assert g1.edge_set() == g2.edge_set()


def test_optimizer_dominates_greedy():
    for row in route_ensemble(SPEC, range(6)):
        assert row.optimal is not None and row.greedy is not None
        assert row.optimal.latency_us <= row.greedy.latency_us + 1e-9
        assert row.optimal.route.a.position == AURORA and row.optimal.route.b.position == CARTERET


def test_excess_weakly_decreasing_in_availability():
    means = []
    for p in (0.5, 0.75, 1.0):
        dex = []
        for s in range(20):
            g = build_feasibility_graph(generate_tower_field(SPEC, s), availability_seed=s, availability=p)
            dex.append(plan_optimal_route(g).metrics.d_ex_km)
        means.append(np.mean(dex))
    assert means[0] >= means[1] >= means[2]


def test_optimal_superset_monotone_per_seed():
    # a superset of towers can never make the optimum worse
    f = generate_tower_field(SPEC, 11)
    lo = plan_optimal_route(build_feasibility_graph(f, availability_seed=11, availability=0.6))
    hi = plan_optimal_route(build_feasibility_graph(f, availability_seed=11, availability=0.9))
    assert hi.latency_us <= lo.latency_us + 1e-9


# --- license records ----------------------------------------------------------

HEADER = "licensee,tx_lat,tx_lon,rx_lat,rx_lon,freq_ghz,bitrate_mbps,filed\n"


def test_ingest_single_and_duplicates_and_malformed():
    row = "Acme,40.0,-80.0,40.0,-79.5,6,155,2012-03-01\n"
    bad = "Acme,40.0,xx,40.0,-79.5,6,155,2012-03-01\n"
    short = "Acme,40.0\n"
    ing = ingest_license_records(io.StringIO(HEADER + row + row + bad + short))
    assert len(ing) == 1
    rec = ing.records[0]
    assert rec.filed == dt.date(2012, 3, 1) and rec.freq_ghz == 6.0
    assert sum(ing.duplicates.values()) == 1
    assert [ln for ln, _ in ing.malformed] == [4, 5]


def test_ingest_missing_column():
    with pytest.raises(FeedFormatError):
        ingest_license_records(io.StringIO("licensee,tx_lat\nA,1\n"))


def test_record_rejects_coincident_ends():
    p = GeoPoint(40.0, -80.0)
    with pytest.raises(ValueError):
        LicenseRecord("A", p, p, 6, 155, dt.date(2012, 1, 1))


def test_write_ingest_round_trip():
    pts = [t.position for t in _line_towers(4, 40.0)]
    recs = export_route_records(pts, "Acme")
    buf = io.StringIO()
    write_license_records(recs, buf)
    assert ingest_license_records(io.StringIO(buf.getvalue())).records == recs


def test_reconstruct_three_links():
    pts = [t.position for t in _line_towers(3, 40.0)]
    (r,) = reconstruct_routes(export_route_records(pts, "Acme"))
    assert r.n_hops == 3 and r.residue == []
    assert r.sites == pts
    assert r.metrics.d_ex_km == pytest.approx(0.0, abs=1e-6)


def test_reconstruct_tolerates_small_displacement():
    pts = [t.position for t in _line_towers(3, 40.0)]
    recs = export_route_records(pts, "Acme")
    # shift one end of the second link 50 m north
    moved = destination(recs[1].tx, 0.0, 0.05)
    recs[1] = LicenseRecord("Acme", moved, recs[1].rx, 6, 155, recs[1].filed)
    (r,) = reconstruct_routes(recs, tolerance_m=100)
    assert r.n_hops == 3
    (split, ) = reconstruct_routes(recs, tolerance_m=10)
    assert split.n_hops == 0 and len(split.residue) == 3


def test_reconstruct_scrambled_route_with_decoys():
    f = generate_tower_field(SPEC, 0)
    plan = plan_optimal_route(build_feasibility_graph(f, availability_seed=0))
    recs = export_route_records(plan.route, "Acme", rng=np.random.default_rng(5))
    # an isolated short link and a spur off an interior site
    iso_a = GeoPoint(35.0, -100.0)
    spur_from = plan.route.towers[5].position
    decoys = [
        LicenseRecord("Acme", iso_a, destination(iso_a, 1.0, 20.0), 6, 155, dt.date(2013, 1, 1)),
        LicenseRecord("Acme", spur_from, destination(spur_from, 0.0, 15.0), 6, 155, dt.date(2013, 1, 1)),
    ]
    (r,) = reconstruct_routes(recs + decoys)
    assert r.n_hops == plan.metrics.n_hops
    assert r.sites == [t.position for t in plan.route.towers]
    assert sorted(r.residue, key=lambda x: x.tx.lat_deg) == sorted(decoys, key=lambda x: x.tx.lat_deg)
    assert r.metrics.d_tot_km == pytest.approx(plan.metrics.d_tot_km, rel=1e-12)


def test_parallel_links_keep_shorter():
    pts = [t.position for t in _line_towers(3, 40.0)]
    recs = export_route_records(pts, "Acme")
    alt = LicenseRecord("Acme", destination(pts[0], 0.0, 0.06), pts[1], 6, 155, dt.date(2013, 1, 1))
    (r,) = reconstruct_routes(recs + [alt])
    assert r.n_hops == 3 and len(r.residue) == 1
    kept = r.chain[0]
    assert kept.length_km <= alt.length_km or kept is alt


def test_cycle_detected():
    a = GeoPoint(40.0, -80.0)
    b = destination(a, math.pi / 2, 30.0)
    c = destination(a, 0.0, 30.0)
    recs = [LicenseRecord("Loop", x, y, 6, 155, dt.date(2012, 1, 1)) for x, y in ((a, b), (b, c), (c, a))]
    with pytest.raises(CycleDetected):
        reconstruct_routes(recs)


def test_short_chain_goes_to_residue():
    pts = [t.position for t in _line_towers(2, 40.0)]
    (r,) = reconstruct_routes(export_route_records(pts, "Tiny"))
    assert r.chain == [] and len(r.residue) == 2 and r.metrics is None


def test_hop_list_idempotent_and_header():
    f = generate_tower_field(SPEC, 2)
    plan = plan_optimal_route(build_feasibility_graph(f, availability_seed=2))
    csv1 = hop_list_csv(plan)
    assert csv1.splitlines()[0] == "seq,lat,lon,hop_km,bearing_rad"
    (r,) = reconstruct_routes(export_route_records(plan.route, "X", rng=np.random.default_rng(0)))
    assert hop_list_csv(r) == csv1
    (r2,) = reconstruct_routes(export_route_records(r.sites, "X", rng=np.random.default_rng(1)))
    assert hop_list_csv(r2) == csv1
    rows = [ln.split(",") for ln in csv1.splitlines()[1:]]
    total = sum(float(x[3]) for x in rows)
    assert total == pytest.approx(plan.metrics.d_tot_km, abs=1e-3 * len(rows))
    assert float(rows[1][4]) == pytest.approx(initial_bearing(plan.route.towers[0].position,
                                                              plan.route.towers[1].position), abs=1e-6)
    assert great_circle_distance(AURORA, CARTERET) == pytest.approx(plan.metrics.d_geo_km)
