# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-sample kernels.

Mirrors ``_pykernels`` operation for operation: sums run left to right
starting from the first term, no fused multiply-add (built with
``-ffp-contract=off``). Samples are distributed over OpenMP threads; each
sample's arithmetic is sequential, so output does not depend on the
thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport parallel, prange
from libc.math cimport sqrt, fabs, NAN
from libc.stdlib cimport malloc, free

cnp.import_array()

NAME = "compiled"

cdef double POWER_TOL = 1e-12
cdef double RESIDUAL_TOL = 1e-10
cdef int MAX_ITER = 10000
cdef int JACOBI_SWEEPS = 100

cdef enum:
    ST_POWER = 0
    ST_JACOBI = 1
    ST_UNIFORM = 2

STATUS_POWER = ST_POWER
STATUS_JACOBI = ST_JACOBI
STATUS_UNIFORM = ST_UNIFORM


cdef inline void _dist_row(const double* X, Py_ssize_t n, Py_ssize_t D,
                           Py_ssize_t i, double* out) noexcept nogil:
    cdef Py_ssize_t j, t
    cdef double acc, diff
    cdef const double* xi = X + i * D
    cdef const double* xj
    for j in range(n):
        xj = X + j * D
        diff = xj[0] - xi[0]
        acc = diff * diff
        for t in range(1, D):
            diff = xj[t] - xi[t]
            acc = acc + diff * diff
        out[j] = sqrt(acc)


cdef inline double _seqdot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t j
    cdef double acc = a[0] * b[0]
    for j in range(1, n):
        acc = acc + a[j] * b[j]
    return acc


cdef inline double _normalize(double* row, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t j
    cdef double nrm = sqrt(_seqdot(row, row, n))
    if nrm > 0:
        for j in range(n):
            row[j] = row[j] / nrm
    else:
        for j in range(n):
            row[j] = 0.0
    return nrm


cdef inline void _gram(const double* rows, Py_ssize_t K, Py_ssize_t n, double* G) noexcept nogil:
    cdef Py_ssize_t a, b
    cdef double g
    for a in range(K):
        for b in range(a, K):
            g = _seqdot(rows + a * n, rows + b * n, n)
            G[a * K + b] = g
            G[b * K + a] = g


cdef inline void _matvec(const double* G, const double* u, Py_ssize_t K, double* w) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(K):
        w[k] = _seqdot(G + k * K, u, K)


cdef void _jacobi(const double* G, Py_ssize_t K, double* A, double* V, double* evals) noexcept nogil:
    cdef Py_ssize_t r, c, p, q, k
    cdef int sweep
    cdef double off, frob, sq, apq, tau, t, cs, sn, akp, akq, apk, aqk, vkp, vkq
    for r in range(K * K):
        A[r] = G[r]
    for r in range(K):
        for c in range(K):
            V[r * K + c] = 1.0 if r == c else 0.0
    for sweep in range(JACOBI_SWEEPS):
        off = 0.0
        frob = 0.0
        for r in range(K):
            for c in range(K):
                sq = A[r * K + c] * A[r * K + c]
                frob = frob + sq
                if r != c:
                    off = off + sq
        if off <= 1e-30 * frob or off == 0.0:
            break
        for p in range(K - 1):
            for q in range(p + 1, K):
                apq = A[p * K + q]
                if apq == 0.0:
                    continue
                tau = (A[q * K + q] - A[p * K + p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                cs = 1.0 / sqrt(1.0 + t * t)
                sn = t * cs
                for k in range(K):
                    akp = A[k * K + p]
                    akq = A[k * K + q]
                    A[k * K + p] = cs * akp - sn * akq
                    A[k * K + q] = sn * akp + cs * akq
                for k in range(K):
                    apk = A[p * K + k]
                    aqk = A[q * K + k]
                    A[p * K + k] = cs * apk - sn * aqk
                    A[q * K + k] = sn * apk + cs * aqk
                A[p * K + q] = 0.0
                A[q * K + p] = 0.0
                for k in range(K):
                    vkp = V[k * K + p]
                    vkq = V[k * K + q]
                    V[k * K + p] = cs * vkp - sn * vkq
                    V[k * K + q] = sn * vkp + cs * vkq
    for k in range(K):
        evals[k] = A[k * K + k]


cdef int _leading(const double* G, Py_ssize_t K, double* u, double* w, double* work,
                  double* lam_out, long long* it_out, double* res_out) noexcept nogil:
    """Power iteration with Jacobi fallback; ``work`` holds 2*K*K + K doubles."""
    cdef Py_ssize_t k, top
    cdef long long it = 0
    cdef double lam = 0.0, lam_prev = NAN, res, nw, rk, tot, nu
    cdef bint any_diag = False
    cdef double u0 = 1.0 / sqrt(<double>K)
    for k in range(K):
        u[k] = u0
        if G[k * K + k] != 0.0:
            any_diag = True
    if not any_diag:
        lam_out[0] = 0.0
        it_out[0] = 0
        res_out[0] = 0.0
        return ST_UNIFORM
    while it < MAX_ITER:
        it += 1
        _matvec(G, u, K, w)
        lam = _seqdot(u, w, K)
        rk = w[0] - lam * u[0]
        res = rk * rk
        for k in range(1, K):
            rk = w[k] - lam * u[k]
            res = res + rk * rk
        res = sqrt(res)
        if res <= RESIDUAL_TOL * (lam if lam > 1.0 else 1.0) and fabs(lam - lam_prev) <= POWER_TOL * fabs(lam):
            lam_out[0] = lam
            it_out[0] = it
            res_out[0] = res
            return ST_POWER
        nw = sqrt(_seqdot(w, w, K))
        if nw == 0.0:
            break
        for k in range(K):
            u[k] = w[k] / nw
        lam_prev = lam
    # Jacobi fallback
    cdef double* A = work
    cdef double* V = work + K * K
    cdef double* ev = work + 2 * K * K
    _jacobi(G, K, A, V, ev)
    top = 0
    for k in range(1, K):
        if ev[k] > ev[top]:
            top = k
    for k in range(K):
        u[k] = V[k * K + top]
    tot = u[0]
    for k in range(1, K):
        tot = tot + u[k]
    if tot < 0.0:
        for k in range(K):
            u[k] = -u[k]
    nu = sqrt(_seqdot(u, u, K))
    for k in range(K):
        u[k] = u[k] / nu
    _matvec(G, u, K, w)
    lam = _seqdot(u, w, K)
    rk = w[0] - lam * u[0]
    res = rk * rk
    for k in range(1, K):
        rk = w[k] - lam * u[k]
        res = res + rk * rk
    lam_out[0] = lam
    it_out[0] = it
    res_out[0] = sqrt(res)
    return ST_JACOBI


cdef inline void _weighted(const double* rows, const double* s, Py_ssize_t K,
                           Py_ssize_t n, double* out) noexcept nogil:
    cdef Py_ssize_t j, k
    cdef double acc
    for j in range(n):
        acc = s[0] * rows[j]
        for k in range(1, K):
            acc = acc + s[k] * rows[k * n + j]
        out[j] = acc


def _threads(nthreads):
    return max(1, int(nthreads))


def distance_row(X, Py_ssize_t i):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    out = np.empty(n)
    cdef double[::1] ov = out
    _dist_row(&Xv[0, 0], n, Xv.shape[1], i, &ov[0])
    return out


def normalized_row(X, Py_ssize_t i):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    out = np.empty(n)
    cdef double[::1] ov = out
    _dist_row(&Xv[0, 0], n, Xv.shape[1], i, &ov[0])
    nrm = _normalize(&ov[0], n)
    return out, nrm


def normalize_vector(v):
    out = np.array(v, dtype=np.float64, copy=True)
    cdef double[::1] ov = out
    nrm = _normalize(&ov[0], ov.shape[0])
    return out, nrm


def normalized_matrix(X, nthreads=1):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], D = Xv.shape[1], i
    out = np.empty((n, n))
    cdef double[:, ::1] ov = out
    cdef int nt = _threads(nthreads)
    for i in prange(n, nogil=True, num_threads=nt, schedule="static"):
        _dist_row(&Xv[0, 0], n, D, i, &ov[i, 0])
        _normalize(&ov[i, 0], n)
    return out


def gram(rows):
    cdef const double[:, ::1] rv = np.ascontiguousarray(rows, dtype=np.float64)
    cdef Py_ssize_t K = rv.shape[0]
    G = np.empty((K, K))
    cdef double[:, ::1] gv = G
    _gram(&rv[0, 0], K, rv.shape[1], &gv[0, 0])
    return G


def weighted_row(rows, s):
    cdef const double[:, ::1] rv = np.ascontiguousarray(rows, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    out = np.empty(rv.shape[1])
    cdef double[::1] ov = out
    _weighted(&rv[0, 0], &sv[0], rv.shape[0], rv.shape[1], &ov[0])
    return out


def leading_eigenpair(G):
    cdef const double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef Py_ssize_t K = Gv.shape[0]
    u = np.empty(K)
    cdef double[::1] uv = u
    cdef double* w = <double*> malloc(K * sizeof(double))
    cdef double* work = <double*> malloc((2 * K * K + K) * sizeof(double))
    cdef double lam, res
    cdef long long it
    cdef int st
    st = _leading(&Gv[0, 0], K, &uv[0], w, work, &lam, &it, &res)
    free(w)
    free(work)
    return lam, u, it, st, res


def jacobi_eigh(G):
    cdef const double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef Py_ssize_t K = Gv.shape[0]
    A = np.empty((K, K))
    V = np.empty((K, K))
    ev = np.empty(K)
    cdef double[:, ::1] av = A
    cdef double[:, ::1] vv = V
    cdef double[::1] evv = ev
    _jacobi(&Gv[0, 0], K, &av[0, 0], &vv[0, 0], &evv[0])
    return ev, V


def score_samples(C, nthreads=1, meta=False):
    cdef const double[:, :, ::1] Cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t K = Cv.shape[0], n = Cv.shape[1], D = Cv.shape[2]
    scores = np.empty((n, K))
    lam = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int8)
    cdef double[:, ::1] sv = scores
    cdef double[::1] lv = lam
    cdef long long[::1] itv = iters
    cdef signed char[::1] stv = status
    cdef bint do_meta = bool(meta)
    out = np.empty((n, n)) if do_meta else np.empty((1, 1))
    cdef double[:, ::1] ov = out
    cdef int nt = _threads(nthreads)
    cdef Py_ssize_t i, k
    cdef double* buf
    cdef double* rows
    cdef double* G
    cdef double* u
    cdef double* w
    cdef double* work
    cdef double res
    cdef size_t nbuf = K * n + K * K + 3 * K + 2 * K * K + K
    with nogil, parallel(num_threads=nt):
        buf = <double*> malloc(nbuf * sizeof(double))
        rows = buf
        G = rows + K * n
        u = G + K * K
        w = u + K
        work = w + K
        for i in prange(n, schedule="static"):
            for k in range(K):
                _dist_row(&Cv[k, 0, 0], n, D, i, rows + k * n)
                _normalize(rows + k * n, n)
            _gram(rows, K, n, G)
            stv[i] = _leading(G, K, u, w, work, &lv[i], &itv[i], &res)
            for k in range(K):
                sv[i, k] = fabs(u[k])
            if do_meta:
                _weighted(rows, &sv[i, 0], K, n, &ov[i, 0])
        free(buf)
    return scores, lam, iters, status, (out if do_meta else None)


def weighted_meta(C, W, nthreads=1):
    cdef const double[:, :, ::1] Cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef const double[:, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef Py_ssize_t K = Cv.shape[0], n = Cv.shape[1], D = Cv.shape[2]
    out = np.empty((n, n))
    cdef double[:, ::1] ov = out
    cdef int nt = _threads(nthreads)
    cdef Py_ssize_t i, k
    cdef double* rows
    with nogil, parallel(num_threads=nt):
        rows = <double*> malloc(K * n * sizeof(double))
        for i in prange(n, schedule="static"):
            for k in range(K):
                _dist_row(&Cv[k, 0, 0], n, D, i, rows + k * n)
                _normalize(rows + k * n, n)
            _weighted(rows, &Wv[i, 0], K, n, &ov[i, 0])
        free(rows)
    return out


def score_stack(S):
    rows = np.array(S, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] rv = rows
    cdef Py_ssize_t K = rv.shape[0], n = rv.shape[1], k
    norms = np.empty(K)
    cdef double[::1] nv = norms
    for k in range(K):
        nv[k] = _normalize(&rv[k, 0], n)
    G = gram(rows)
    lam, u, it, st, _ = leading_eigenpair(G)
    return np.abs(u), lam, it, st, rows, norms
