"""Pure-Python/numpy versions of the hot kernels.

These are the reference implementations; ``_kernels.pyx`` mirrors them
loop for loop and must return identical results (up to float summation
order in ``bootstrap_means``).
"""
from __future__ import annotations

import heapq
import math

import numpy as np

EARTH_RADIUS_KM = 6371.0


def lag_contributions(ev_ms, ev_dir, ev_ref, msg_ms, msg_price, msg_val,
                      lag_min, lag_max, level_band):
    """Per-event signed sums of ``msg_val`` binned by ``msg_ms - ev_ms``.

    ``msg_ms`` must be sorted. When ``level_band >= 0`` only messages with
    ``|msg_price - ev_ref| <= level_band`` count. Returns an
    ``(n_events, lag_max - lag_min + 1)`` float64 array.
    """
    ev_ms = np.asarray(ev_ms, dtype=np.int64)
    ev_dir = np.asarray(ev_dir, dtype=np.int64)
    ev_ref = np.asarray(ev_ref, dtype=np.int64)
    msg_ms = np.asarray(msg_ms, dtype=np.int64)
    nb = lag_max - lag_min + 1
    out = np.zeros((len(ev_ms), nb), dtype=np.float64)
    if len(ev_ms) == 0 or len(msg_ms) == 0:
        return out
    lo = np.searchsorted(msg_ms, ev_ms + lag_min, side="left")
    hi = np.searchsorted(msg_ms, ev_ms + lag_max, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return out
    ev_idx = np.repeat(np.arange(len(ev_ms)), counts)
    starts = np.repeat(lo - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
    msg_idx = starts + np.arange(total)
    if level_band >= 0:
        keep = np.abs(np.asarray(msg_price)[msg_idx] - ev_ref[ev_idx]) <= level_band
        ev_idx, msg_idx = ev_idx[keep], msg_idx[keep]
    bins = msg_ms[msg_idx] - ev_ms[ev_idx] - lag_min
    vals = ev_dir[ev_idx] * np.asarray(msg_val, dtype=np.int64)[msg_idx]
    np.add.at(out, (ev_idx, bins), vals.astype(np.float64))
    return out


def bootstrap_means(contrib, idx):
    """Mean curve for each row of resample indices ``idx`` (shape R x n)."""
    contrib = np.asarray(contrib, dtype=np.float64)
    idx = np.asarray(idx, dtype=np.int64)
    n = contrib.shape[0]
    out = np.empty((idx.shape[0], contrib.shape[1]), dtype=np.float64)
    for r in range(idx.shape[0]):
        w = np.bincount(idx[r], minlength=n).astype(np.float64)
        out[r] = w @ contrib / idx.shape[1]
    return out


def _hav(lat1, lon1, lat2, lon2):
    dp = lat2 - lat1
    dl = lon2 - lon1
    a = np.sin(dp / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dl / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.minimum(a, 1.0)))


def feasible_pairs(lat_deg, lon_deg, height_m, f_ghz, k, h_obs, max_km):
    """All tower pairs ``i < j`` whose hop clears Fresnel + bulge + obstructions.

    Returns ``(i, j, d_km)`` arrays in row-major ``(i, j)`` order.
    """
    lat = np.radians(np.asarray(lat_deg, dtype=np.float64))
    lon = np.radians(np.asarray(lon_deg, dtype=np.float64))
    h = np.asarray(height_m, dtype=np.float64)
    n = len(lat)
    ii, jj, dd = [], [], []
    for i in range(n - 1):
        d = _hav(lat[i], lon[i], lat[i + 1:], lon[i + 1:])
        need = 8.7 * np.sqrt(d / f_ghz) + d * d / 50.0 / k + h_obs
        ok = (d <= max_km) & (np.minimum(h[i], h[i + 1:]) > need)
        js = np.nonzero(ok)[0]
        ii.append(np.full(len(js), i, dtype=np.int64))
        jj.append(js + i + 1)
        dd.append(d[js])
    if not ii:
        return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))
    return np.concatenate(ii), np.concatenate(jj).astype(np.int64), np.concatenate(dd)


def dijkstra(indptr, indices, weights, source):
    """Single-source shortest paths over a CSR graph with nonnegative weights.

    Ties are broken toward the smaller node id, both in pop order and in
    predecessor choice. Returns ``(dist, pred)``; unreachable nodes have
    ``dist = inf`` and ``pred = -1``.
    """
    n = len(indptr) - 1
    dist = np.full(n, math.inf)
    pred = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if done[v]:
                continue
            nd = d + weights[e]
            if nd < dist[v] or (nd == dist[v] and u < pred[v]):
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred
