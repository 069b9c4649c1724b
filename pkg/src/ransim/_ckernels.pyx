# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels. See ``_kernels_py`` for semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, hypot, log10, fmod, INFINITY, M_PI

cnp.import_array()


cdef inline double _pl(double d, double freq_term) nogil:
    if d < 10.0:
        d = 10.0
    return 128.1 + 37.6 * log10(d / 1000.0) + freq_term


cdef inline double _gain(double az, double bore, double bw, double peak, double ftb) nogil:
    cdef double off = fmod(az - bore + 180.0, 360.0)
    if off < 0:
        off += 360.0
    off -= 180.0
    cdef double att = 12.0 * (off / bw) * (off / bw)
    if att > ftb:
        att = ftb
    return peak - att


def pair_ci_db(tx, rx, tx_az, rx_az, double beamwidth, double peak_db, double ftb_db,
               double carrier_ghz):
    cdef cnp.float64_t[:, ::1] t = np.ascontiguousarray(tx, dtype=np.float64).reshape(-1, 2)
    cdef cnp.float64_t[:, ::1] r = np.ascontiguousarray(rx, dtype=np.float64).reshape(-1, 2)
    cdef cnp.float64_t[::1] taz = np.ascontiguousarray(tx_az, dtype=np.float64)
    cdef cnp.float64_t[::1] raz = np.ascontiguousarray(rx_az, dtype=np.float64)
    cdef Py_ssize_t n = t.shape[0]
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef double freq_term = 20.0 * log10(carrier_ghz / 2.0)
    cdef double deg = 180.0 / M_PI
    cdef Py_ssize_t i, j
    cdef double c, dx, dy, d, gi
    with nogil:
        for i in range(n):
            c = 2.0 * peak_db - _pl(hypot(r[i, 0] - t[i, 0], r[i, 1] - t[i, 1]), freq_term)
            for j in range(n):
                if i == j:
                    out[i, j] = INFINITY
                    continue
                dx = r[i, 0] - t[j, 0]
                dy = r[i, 1] - t[j, 1]
                d = hypot(dx, dy)
                gi = (_gain(atan2(dy, dx) * deg, taz[j], beamwidth, peak_db, ftb_db)
                      + _gain(atan2(-dy, -dx) * deg, raz[i], beamwidth, peak_db, ftb_db)
                      - _pl(d, freq_term))
                out[i, j] = c - gi
    return out_arr


def slotted_interfered(i_over_c, start, end, double threshold_lin):
    cdef cnp.float64_t[:, ::1] ioc = np.ascontiguousarray(i_over_c, dtype=np.float64)
    s_arr = np.ascontiguousarray(start, dtype=np.float64)
    e_arr = np.ascontiguousarray(end, dtype=np.float64)
    cdef cnp.float64_t[::1] s = s_arr
    cdef cnp.float64_t[::1] e = e_arr
    cdef Py_ssize_t n = s.shape[0]
    bad_arr = np.zeros(n, dtype=np.float64)
    cdef cnp.float64_t[::1] bad = bad_arr
    if n == 0:
        return bad_arr
    cuts_arr = np.unique(np.concatenate([s_arr, e_arr, [0.0, 1.0]]))
    cdef cnp.float64_t[::1] cuts = cuts_arr
    act_arr = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] act = act_arr
    cdef Py_ssize_t k, i, j, m, na
    cdef double a, b, agg
    with nogil:
        for k in range(cuts.shape[0] - 1):
            a = cuts[k]
            b = cuts[k + 1]
            na = 0
            for i in range(n):
                if s[i] <= a and a < e[i]:
                    act[na] = i
                    na += 1
            if na < 2:
                continue
            for i in range(na):
                agg = 0.0
                for j in range(na):
                    if j != i:
                        agg += ioc[act[i], act[j]]
                if agg * threshold_lin > 1.0:
                    bad[act[i]] += b - a
        for i in range(n):
            bad[i] /= (e[i] - s[i])
    return bad_arr


def rb_sinr(rx_mw, assign, double noise_mw):
    cdef cnp.float64_t[:, ::1] p = np.ascontiguousarray(rx_mw, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] a = np.ascontiguousarray(assign, dtype=np.int64)
    cdef Py_ssize_t n_nodes = a.shape[0], n_rb = a.shape[1]
    out_arr = np.zeros((n_nodes, n_rb), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t r, n, m
    cdef long long u, v
    cdef double sig, intf
    with nogil:
        for r in range(n_rb):
            for n in range(n_nodes):
                u = a[n, r]
                if u < 0:
                    continue
                sig = 0.0
                intf = 0.0
                for m in range(n_nodes):
                    v = a[m, r]
                    if v < 0:
                        continue
                    if v == u:
                        sig += p[u, m]
                    else:
                        intf += p[u, m]
                out[n, r] = sig / (intf + noise_mw)
    return out_arr
