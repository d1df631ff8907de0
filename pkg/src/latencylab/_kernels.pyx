# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Semantics match ``_kernels_py`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, asin, sqrt, fabs
from libc.stdlib cimport malloc, free, realloc

cnp.import_array()

cdef double EARTH_RADIUS_KM = 6371.0


cdef inline Py_ssize_t _lower(const long long[:] a, long long x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def lag_contributions(ev_ms, ev_dir, ev_ref, msg_ms, msg_price, msg_val,
                      long long lag_min, long long lag_max, long long level_band):
    cdef const long long[:] e_ms = np.ascontiguousarray(ev_ms, dtype=np.int64)
    cdef const long long[:] e_dir = np.ascontiguousarray(ev_dir, dtype=np.int64)
    cdef const long long[:] e_ref = np.ascontiguousarray(ev_ref, dtype=np.int64)
    cdef const long long[:] m_ms = np.ascontiguousarray(msg_ms, dtype=np.int64)
    cdef const long long[:] m_px = np.ascontiguousarray(msg_price, dtype=np.int64)
    cdef const long long[:] m_val = np.ascontiguousarray(msg_val, dtype=np.int64)
    cdef Py_ssize_t ne = e_ms.shape[0], nm = m_ms.shape[0]
    cdef Py_ssize_t nb = lag_max - lag_min + 1
    out_arr = np.zeros((ne, nb), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef long long t0, t1, dp
    if ne == 0 or nm == 0:
        return out_arr
    with nogil:
        for i in range(ne):
            t0 = e_ms[i] + lag_min
            t1 = e_ms[i] + lag_max
            j = _lower(m_ms, t0)
            while j < nm and m_ms[j] <= t1:
                if level_band >= 0:
                    dp = m_px[j] - e_ref[i]
                    if dp < 0:
                        dp = -dp
                    if dp > level_band:
                        j += 1
                        continue
                out[i, m_ms[j] - t0] += <double>(e_dir[i] * m_val[j])
                j += 1
    return out_arr


def bootstrap_means(contrib, idx):
    cdef const double[:, ::1] c = np.ascontiguousarray(contrib, dtype=np.float64)
    cdef const long long[:, ::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t R = ix.shape[0], n = ix.shape[1], nb = c.shape[1], n_rows = c.shape[0]
    out_arr = np.zeros((R, nb), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    counts_arr = np.zeros(n_rows, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    cdef Py_ssize_t r, t, k, row
    cdef double w, inv = 1.0 / n if n > 0 else 0.0
    with nogil:
        for r in range(R):
            # multiplicity of each row in this resample, then one weighted pass
            for t in range(n):
                counts[ix[r, t]] += 1
            for row in range(n_rows):
                if counts[row] == 0:
                    continue
                w = counts[row] * inv
                counts[row] = 0
                for k in range(nb):
                    out[r, k] += w * c[row, k]
    return out_arr


cdef void* _grow(void *p, size_t size) except NULL:
    cdef void *q = realloc(p, size)
    if q == NULL:
        raise MemoryError()
    return q


def feasible_pairs(lat_deg, lon_deg, height_m, double f_ghz, double k, double h_obs,
                   double max_km):
    cdef const double[:] la = np.radians(np.ascontiguousarray(lat_deg, dtype=np.float64))
    cdef const double[:] lo = np.radians(np.ascontiguousarray(lon_deg, dtype=np.float64))
    cdef const double[:] h = np.ascontiguousarray(height_m, dtype=np.float64)
    cdef Py_ssize_t n = la.shape[0], i, j, m = 0, cap = 1024
    cdef long long *bi = <long long *> malloc(cap * sizeof(long long))
    cdef long long *bj = <long long *> malloc(cap * sizeof(long long))
    cdef double *bd = <double *> malloc(cap * sizeof(double))
    cdef double dp, dl, a, d, need, hmin, cos_i
    cdef double dlat_max = max_km / EARTH_RADIUS_KM
    try:
        for i in range(n - 1):
            cos_i = cos(la[i])
            for j in range(i + 1, n):
                dp = la[j] - la[i]
                if fabs(dp) > dlat_max:
                    continue
                dl = lo[j] - lo[i]
                a = sin(dp / 2) ** 2 + cos_i * cos(la[j]) * sin(dl / 2) ** 2
                if a > 1.0:
                    a = 1.0
                d = 2.0 * EARTH_RADIUS_KM * asin(sqrt(a))
                if d > max_km:
                    continue
                need = 8.7 * sqrt(d / f_ghz) + d * d / 50.0 / k + h_obs
                hmin = h[i] if h[i] < h[j] else h[j]
                if hmin > need:
                    if m == cap:
                        cap *= 2
                        bi = <long long *> _grow(bi, cap * sizeof(long long))
                        bj = <long long *> _grow(bj, cap * sizeof(long long))
                        bd = <double *> _grow(bd, cap * sizeof(double))
                    bi[m] = i
                    bj[m] = j
                    bd[m] = d
                    m += 1
        oi = np.empty(m, dtype=np.int64)
        oj = np.empty(m, dtype=np.int64)
        od = np.empty(m, dtype=np.float64)
        for i in range(m):
            oi[i] = bi[i]
            oj[i] = bj[i]
            od[i] = bd[i]
        return oi, oj, od
    finally:
        free(bi)
        free(bj)
        free(bd)


# binary heap keyed on (dist, node)
cdef inline bint _less(double da, long long na, double db, long long nb) noexcept nogil:
    return da < db or (da == db and na < nb)


def dijkstra(indptr, indices, weights, long long source):
    cdef const long long[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const long long[:] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[:] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    dist_arr = np.full(n, np.inf)
    pred_arr = np.full(n, -1, dtype=np.int64)
    done_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] dist = dist_arr
    cdef long long[::1] pred = pred_arr
    cdef unsigned char[::1] done = done_arr
    cdef Py_ssize_t cap = ix.shape[0] + 2, size = 0, pos, child, parent
    cdef double *hk = <double *> malloc(cap * sizeof(double))
    cdef long long *hn = <long long *> malloc(cap * sizeof(long long))
    cdef double d, nd, kd
    cdef long long u, v, kn, e
    if hk == NULL or hn == NULL:
        free(hk)
        free(hn)
        raise MemoryError()
    try:
        with nogil:
            dist[source] = 0.0
            hk[0] = 0.0
            hn[0] = source
            size = 1
            while size > 0:
                d = hk[0]
                u = hn[0]
                size -= 1
                if size > 0:
                    kd = hk[size]
                    kn = hn[size]
                    pos = 0
                    while True:
                        child = 2 * pos + 1
                        if child >= size:
                            break
                        if child + 1 < size and _less(hk[child + 1], hn[child + 1], hk[child], hn[child]):
                            child += 1
                        if _less(hk[child], hn[child], kd, kn):
                            hk[pos] = hk[child]
                            hn[pos] = hn[child]
                            pos = child
                        else:
                            break
                    hk[pos] = kd
                    hn[pos] = kn
                if done[u]:
                    continue
                done[u] = 1
                for e in range(ip[u], ip[u + 1]):
                    v = ix[e]
                    if done[v]:
                        continue
                    nd = d + w[e]
                    if nd < dist[v] or (nd == dist[v] and u < pred[v]):
                        dist[v] = nd
                        pred[v] = u
                        pos = size
                        size += 1
                        while pos > 0:
                            parent = (pos - 1) >> 1
                            if _less(nd, v, hk[parent], hn[parent]):
                                hk[pos] = hk[parent]
                                hn[pos] = hn[parent]
                                pos = parent
                            else:
                                break
                        hk[pos] = nd
                        hn[pos] = v
        return dist_arr, pred_arr
    finally:
        free(hk)
        free(hn)
