# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops; see _pykernels for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, INFINITY

cnp.import_array()

NAME = "cython"

from ._pykernels import smo_bias, smo_reconstruct


def nearest_centroid(const double[:, ::1] X, const double[:, ::1] C):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], k = C.shape[0]
    cdef Py_ssize_t i, c, j, best
    cdef double s, t, bd
    labels_arr = np.empty(n, dtype=np.int64)
    dist_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef double[::1] dist = dist_arr
    with nogil:
        for i in range(n):
            best = 0
            bd = 0.0
            for c in range(k):
                s = 0.0
                for j in range(d):
                    t = X[i, j] - C[c, j]
                    s = s + t * t
                if c == 0 or s < bd:
                    bd = s
                    best = c
            labels[i] = best
            dist[i] = bd
    return labels_arr, dist_arr


def dpmeans_sweep(const double[:, ::1] X, const cnp.int64_t[::1] order,
                  const double[:, ::1] C, double lam2):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], k0 = C.shape[0]
    cdef Py_ssize_t k = k0, p, idx, c, j, best
    cdef double s, t, bd
    cent_arr = np.empty((k0 + n, d), dtype=np.float64)
    cent_arr[:k0] = C
    labels_arr = np.empty(n, dtype=np.int64)
    cdef double[:, ::1] cent = cent_arr
    cdef cnp.int64_t[::1] labels = labels_arr
    with nogil:
        for p in range(order.shape[0]):
            idx = order[p]
            best = 0
            bd = 0.0
            for c in range(k):
                s = 0.0
                for j in range(d):
                    t = X[idx, j] - cent[c, j]
                    s = s + t * t
                if c == 0 or s < bd:
                    bd = s
                    best = c
            if bd > lam2:
                for j in range(d):
                    cent[k, j] = X[idx, j]
                labels[idx] = k
                k += 1
            else:
                labels[idx] = best
    return labels_arr, cent_arr[:k].copy()


cdef inline double _sigmoid(double z) nogil:
    cdef double e
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


def sga_epochs(const double[:, ::1] X, const double[::1] y, theta_in,
               const cnp.int64_t[:, ::1] orders, double lr):
    cdef Py_ssize_t d = X.shape[1], e, p, i, j
    cdef double z, g
    theta_arr = np.array(theta_in, dtype=np.float64)
    cdef double[::1] theta = theta_arr
    with nogil:
        for e in range(orders.shape[0]):
            for p in range(orders.shape[1]):
                i = orders[e, p]
                z = 0.0
                for j in range(d):
                    z = z + theta[j] * X[i, j]
                g = lr * (y[i] - _sigmoid(z))
                for j in range(d):
                    theta[j] = theta[j] + g * X[i, j]
    return theta_arr


cdef double TAU = 1e-12
cdef Py_ssize_t SHRINK_EVERY = 1000
CACHE_BYTES = 32 * 1024 * 1024


cdef class _Smo:
    """State of one SMO run; mirrors _pykernels.smo.

    The active samples live in compact arrays indexed by position, with the
    features stored transposed so kernel rows are computed over contiguous
    memory. Kernel rows (one sample against every active position) are kept
    in a small LRU cache that is compacted with the active set.
    """
    cdef object X_obj
    cdef object y_obj
    cdef const double[:, ::1] X
    cdef const double[::1] y
    cdef const double[::1] qd
    cdef const cnp.int64_t[::1] order
    cdef double[::1] alpha
    cdef double[::1] G
    cdef double[::1] w
    # compact active state
    cdef double[:, ::1] XT
    cdef cnp.int64_t[::1] idx
    cdef double[::1] ya
    cdef double[::1] aa
    cdef double[::1] Ga
    cdef double[::1] qda
    cdef Py_ssize_t n, d, n_active
    cdef double C, gap_tol
    # kernel row cache
    cdef double[:, ::1] rows
    cdef cnp.int64_t[::1] slot_of
    cdef cnp.int64_t[::1] owner
    cdef cnp.int64_t[::1] stamp
    cdef Py_ssize_t n_slots, clock

    def __init__(self, X, y, double C, double tol, order, alpha0):
        self.X_obj = X
        self.y_obj = y
        self.X = X
        self.y = y
        self.n = X.shape[0]
        self.d = X.shape[1]
        self.qd = np.einsum("ij,ij->i", X, X)
        self.order = order
        self.alpha = np.zeros(self.n) if alpha0 is None else np.array(alpha0, dtype=np.float64)
        self.XT = np.zeros((self.d, self.n))
        self.idx = np.zeros(self.n, dtype=np.int64)
        self.ya = np.zeros(self.n)
        self.aa = np.zeros(self.n)
        self.Ga = np.zeros(self.n)
        self.qda = np.zeros(self.n)
        self.n_slots = max(2, min(self.n, CACHE_BYTES // (8 * self.n)))
        self.rows = np.zeros((self.n_slots, self.n))
        self.slot_of = np.full(self.n, -1, dtype=np.int64)
        self.owner = np.full(self.n_slots, -1, dtype=np.int64)
        self.stamp = np.zeros(self.n_slots, dtype=np.int64)
        self.clock = 0
        self.C = C
        self.gap_tol = 2.0 * tol
        self.reconstruct()

    cdef void reconstruct(self):
        """Rebuild w and G exactly from alpha and reactivate every sample."""
        cdef Py_ssize_t p, t, k
        w, G = smo_reconstruct(self.X_obj, self.y_obj, np.asarray(self.alpha))
        self.w = w
        self.G = G
        for p in range(self.n):
            t = self.order[p]
            self.idx[p] = t
            self.ya[p] = self.y[t]
            self.aa[p] = self.alpha[t]
            self.Ga[p] = self.G[t]
            self.qda[p] = self.qd[t]
            for k in range(self.d):
                self.XT[k, p] = self.X[t, k]
        self.n_active = self.n
        for p in range(self.n_slots):
            if self.owner[p] >= 0:
                self.slot_of[self.owner[p]] = -1
                self.owner[p] = -1

    cdef inline bint in_up(self, Py_ssize_t p) noexcept nogil:
        return (self.ya[p] > 0 and self.aa[p] < self.C) or (self.ya[p] < 0 and self.aa[p] > 0.0)

    cdef inline bint in_low(self, Py_ssize_t p) noexcept nogil:
        return (self.ya[p] > 0 and self.aa[p] > 0.0) or (self.ya[p] < 0 and self.aa[p] < self.C)

    cdef double* kernel_row(self, Py_ssize_t t) noexcept nogil:
        """x_t . x_p for every active position p, summed in feature order."""
        cdef Py_ssize_t slot = self.slot_of[t], s, p, k, na = self.n_active
        cdef double* out
        cdef const double* col
        cdef double v
        self.clock += 1
        if slot >= 0:
            self.stamp[slot] = self.clock
            return &self.rows[slot, 0]
        slot = 0
        for s in range(self.n_slots):
            if self.owner[s] < 0:
                slot = s
                break
            if self.stamp[s] < self.stamp[slot]:
                slot = s
        if self.owner[slot] >= 0:
            self.slot_of[self.owner[slot]] = -1
        self.owner[slot] = t
        self.slot_of[t] = slot
        self.stamp[slot] = self.clock
        out = &self.rows[slot, 0]
        for p in range(na):
            out[p] = 0.0
        for k in range(self.d):
            v = self.X[t, k]
            col = &self.XT[k, 0]
            for p in range(na):
                out[p] = out[p] + col[p] * v
        return out

    cdef bint select(self, Py_ssize_t* pi, Py_ssize_t* pj, double* pquad) noexcept nogil:
        cdef Py_ssize_t p, i = -1, j = -1
        cdef double g_max = -INFINITY, g_max2 = -INFINITY, v, gd, quad, obj, best = INFINITY, best_quad = 0.0
        cdef double* ki
        for p in range(self.n_active):
            if self.in_up(p):
                v = -self.ya[p] * self.Ga[p]
                if v > g_max:
                    g_max = v
                    i = p
        if i < 0:
            return False
        ki = self.kernel_row(self.idx[i])
        for p in range(self.n_active):
            if self.in_low(p):
                v = self.ya[p] * self.Ga[p]
                if v > g_max2:
                    g_max2 = v
                gd = g_max + v
                if gd > 0.0:
                    quad = self.qda[i] + self.qda[p] - 2.0 * ki[p]
                    if quad <= 0.0:
                        quad = TAU
                    obj = -(gd * gd) / quad
                    if obj < best:
                        best = obj
                        j = p
                        best_quad = quad
        if g_max + g_max2 < self.gap_tol or j < 0:
            return False
        pi[0] = i
        pj[0] = j
        pquad[0] = best_quad
        return True

    cdef void shrink(self, bint* unshrunk):
        cdef Py_ssize_t p, k, s, keep
        cdef double g1 = -INFINITY, g2 = -INFINITY, v, g
        cdef bint drop
        for p in range(self.n_active):
            if self.in_up(p):
                v = -self.ya[p] * self.Ga[p]
                if v > g1:
                    g1 = v
            if self.in_low(p):
                v = self.ya[p] * self.Ga[p]
                if v > g2:
                    g2 = v
        if not unshrunk[0] and g1 + g2 <= 10.0 * self.gap_tol:
            unshrunk[0] = True
            self.reconstruct()
        keep = 0
        for p in range(self.n_active):
            g = self.Ga[p]
            drop = False
            if self.aa[p] >= self.C:
                drop = (-g > g1) if self.ya[p] > 0 else (-g > g2)
            elif self.aa[p] <= 0.0:
                drop = (g > g2) if self.ya[p] > 0 else (g > g1)
            if drop:
                continue
            if keep != p:
                self.idx[keep] = self.idx[p]
                self.ya[keep] = self.ya[p]
                self.aa[keep] = self.aa[p]
                self.Ga[keep] = g
                self.qda[keep] = self.qda[p]
                for k in range(self.d):
                    self.XT[k, keep] = self.XT[k, p]
                for s in range(self.n_slots):
                    if self.owner[s] >= 0:
                        self.rows[s, keep] = self.rows[s, p]
            keep += 1
        self.n_active = keep

    def run(self, Py_ssize_t max_passes, bint record):
        cdef Py_ssize_t counter = min(self.n, SHRINK_EVERY)
        cdef Py_ssize_t steps = 0, max_steps = max_passes * self.n
        cdef Py_ssize_t i = -1, j = -1, p, k, ti, tj
        cdef double quad = 0.0, ai, aj, yi, yj, delta, diff, total, di, dj, ci, cj, ww
        cdef double* ki
        cdef double* kj
        cdef double C = self.C
        cdef double sum_alpha = float(np.asarray(self.alpha).sum())
        cdef bint unshrunk = False, converged = False
        trace = []
        while steps < max_steps:
            counter -= 1
            if counter == 0:
                counter = min(self.n, SHRINK_EVERY)
                self.shrink(&unshrunk)
            if not self.select(&i, &j, &quad):
                self.reconstruct()
                if not self.select(&i, &j, &quad):
                    converged = True
                    break
                counter = 1
            ai = self.aa[i]
            aj = self.aa[j]
            yi = self.ya[i]
            yj = self.ya[j]
            if yi != yj:
                delta = (-self.Ga[i] - self.Ga[j]) / quad
                diff = ai - aj
                ai += delta
                aj += delta
                if diff > 0.0:
                    if aj < 0.0:
                        aj = 0.0
                        ai = diff
                elif ai < 0.0:
                    ai = 0.0
                    aj = -diff
                if diff > 0.0:
                    if ai > C:
                        ai = C
                        aj = C - diff
                elif aj > C:
                    aj = C
                    ai = C + diff
            else:
                delta = (self.Ga[i] - self.Ga[j]) / quad
                total = ai + aj
                ai -= delta
                aj += delta
                if total > C:
                    if ai > C:
                        ai = C
                        aj = total - C
                elif aj < 0.0:
                    aj = 0.0
                    ai = total
                if total > C:
                    if aj > C:
                        aj = C
                        ai = total - C
                elif ai < 0.0:
                    ai = 0.0
                    aj = total
            di = ai - self.aa[i]
            dj = aj - self.aa[j]
            ti = self.idx[i]
            tj = self.idx[j]
            self.aa[i] = ai
            self.aa[j] = aj
            self.alpha[ti] = ai
            self.alpha[tj] = aj
            ci = di * yi
            cj = dj * yj
            for k in range(self.d):
                self.w[k] = self.w[k] + (ci * self.X[ti, k] + cj * self.X[tj, k])
            ki = self.kernel_row(ti)
            kj = self.kernel_row(tj)
            for p in range(self.n_active):
                self.Ga[p] = self.Ga[p] + self.ya[p] * (ci * ki[p] + cj * kj[p])
            sum_alpha += di + dj
            steps += 1
            if record:
                ww = 0.0
                for k in range(self.d):
                    ww = ww + self.w[k] * self.w[k]
                trace.append(sum_alpha - 0.5 * ww)
        alpha = np.asarray(self.alpha).copy()
        w, G = smo_reconstruct(self.X_obj, self.y_obj, alpha)
        bias = smo_bias(self.y_obj, alpha, G, C)
        passes = (steps + self.n - 1) // self.n
        return alpha, bias, w, passes, converged, np.array(trace, dtype=np.float64), steps


def smo(X, y, double C, double tol, double eps, Py_ssize_t max_passes, start_order, bint record_trace, alpha0=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    order = np.ascontiguousarray(start_order, dtype=np.int64)
    return _Smo(X, y, C, tol, order, alpha0).run(max_passes, record_trace)
