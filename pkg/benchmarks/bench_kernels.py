"""Time the compiled kernels against the numpy fallback on desk-sized inputs.

Run with ``python benchmarks/bench_kernels.py``.
"""
import timeit

import numpy as np

from latencylab import _kernels_py as py
from latencylab import kernels
from latencylab.routes import CorridorSpec, build_feasibility_graph, generate_tower_field

try:
    from latencylab import _kernels as cy
except ImportError:
    cy = None


def cases(rng):
    n_ev, n_msg = 10_000, 140_000
    ev_ms = np.sort(rng.integers(0, 23_400_000, n_ev)) + 34_200_000
    msg_ms = np.sort(rng.integers(0, 23_400_000, n_msg)) + 34_200_000
    lag = ((ev_ms, rng.choice([-1, 1], n_ev), np.full(n_ev, 1_300_000), msg_ms,
            1_300_000 + 100 * rng.integers(-3, 4, n_msg), rng.normal(0, 100, n_msg), -30, 30, 100),)
    contrib = rng.normal(size=(n_ev, 61))
    boot = (contrib, rng.integers(0, n_ev, size=(200, n_ev)))
    towers = generate_tower_field(CorridorSpec(), 0).all_towers()
    lat = np.array([t.position.lat_deg for t in towers])
    lon = np.array([t.position.lon_deg for t in towers])
    h = np.array([t.height_m for t in towers])
    pairs = (lat, lon, h, 6.0, 4 / 3, 10.0, 70.0)
    g = build_feasibility_graph(generate_tower_field(CorridorSpec(), 0))
    dij = (g.indptr, g.indices, g.weights_us, 0)
    return {"lag_contributions": lag[0], "bootstrap_means": boot, "feasible_pairs": pairs,
            "dijkstra": dij}


def main(repeat=3):
    rng = np.random.default_rng(0)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<20}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, args in cases(rng).items():
        t_py = min(timeit.repeat(lambda: getattr(py, name)(*args), number=1, repeat=repeat))
        if cy is None:
            print(f"{name:<20}{t_py:>12.4f}{'n/a':>12}{'':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: getattr(cy, name)(*args), number=1, repeat=repeat))
        print(f"{name:<20}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
