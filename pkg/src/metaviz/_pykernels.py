"""Pure numpy implementation of the per-sample kernels.

This is the fallback used when the compiled extension is unavailable. Every
reduction is a strictly sequential left-to-right sum (``np.cumsum``) so the
arithmetic matches ``_ckernels.pyx`` operation for operation; the two
backends produce bit-identical results.
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

POWER_TOL = 1e-12
RESIDUAL_TOL = 1e-10
MAX_ITER = 10000
JACOBI_SWEEPS = 100

STATUS_POWER = 0
STATUS_JACOBI = 1
STATUS_UNIFORM = 2

NAME = "python"


def _seqsum(x, axis=-1):
    # cumsum is an ordered accumulate; its last element is the sequential sum
    return np.cumsum(x, axis=axis).take(-1, axis=axis)


def _dist_rows(C, i):
    """Distance rows of sample i for every candidate; C is (K, n, D)."""
    diff = C - C[:, i : i + 1, :]
    acc = diff[:, :, 0] * diff[:, :, 0]
    for t in range(1, C.shape[2]):
        acc = acc + diff[:, :, t] * diff[:, :, t]
    return np.sqrt(acc)


def _normalize(rows):
    """Row-normalize a (K, n) stack in place; returns the (K,) norms."""
    norms = np.sqrt(_seqsum(rows * rows, axis=1))
    nz = norms > 0
    rows[nz] = rows[nz] / norms[nz, None]
    rows[~nz] = 0.0
    return norms


def _gram(rows):
    K = rows.shape[0]
    G = np.empty((K, K))
    for a in range(K):
        g = _seqsum(rows[a] * rows[a:], axis=1)
        G[a, a:] = g
        G[a:, a] = g
    return G


def _matvec(G, u):
    return _seqsum(G * u, axis=1)


def _dot(a, b):
    return float(_seqsum(a * b))


def jacobi_eigh(G):
    """Cyclic Jacobi eigendecomposition; returns (eigenvalues, eigenvectors as columns)."""
    K = G.shape[0]
    A = [[float(G[r, c]) for c in range(K)] for r in range(K)]
    V = [[1.0 if r == c else 0.0 for c in range(K)] for r in range(K)]
    for _ in range(JACOBI_SWEEPS):
        off = 0.0
        frob = 0.0
        for r in range(K):
            for c in range(K):
                sq = A[r][c] * A[r][c]
                frob = frob + sq
                if r != c:
                    off = off + sq
        if off <= 1e-30 * frob or off == 0.0:
            break
        for p in range(K - 1):
            for q in range(p + 1, K):
                apq = A[p][q]
                if apq == 0.0:
                    continue
                tau = (A[q][q] - A[p][p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(K):
                    akp = A[k][p]
                    akq = A[k][q]
                    A[k][p] = c * akp - s * akq
                    A[k][q] = s * akp + c * akq
                for k in range(K):
                    apk = A[p][k]
                    aqk = A[q][k]
                    A[p][k] = c * apk - s * aqk
                    A[q][k] = s * apk + c * aqk
                A[p][q] = 0.0
                A[q][p] = 0.0
                for k in range(K):
                    vkp = V[k][p]
                    vkq = V[k][q]
                    V[k][p] = c * vkp - s * vkq
                    V[k][q] = s * vkp + c * vkq
    w = np.array([A[k][k] for k in range(K)])
    return w, np.array(V)


def leading_eigenpair(G):
    """Leading eigenpair of a symmetric PSD matrix.

    Returns ``(lam, u, iterations, status, residual)``. Power iteration from
    the uniform vector; cyclic Jacobi when it stalls; uniform vector with
    ``STATUS_UNIFORM`` when G is identically zero.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    K = G.shape[0]
    u = np.full(K, 1.0 / math.sqrt(K))
    if not np.any(np.diag(G) != 0.0):
        return 0.0, u, 0, STATUS_UNIFORM, 0.0
    lam_prev = math.nan
    it = 0
    lam = 0.0
    res = math.inf
    while it < MAX_ITER:
        it += 1
        w = _matvec(G, u)
        lam = _dot(u, w)
        r = w - lam * u
        res = math.sqrt(_dot(r, r))
        if res <= RESIDUAL_TOL * max(lam, 1.0) and abs(lam - lam_prev) <= POWER_TOL * abs(lam):
            return lam, u, it, STATUS_POWER, res
        nw = math.sqrt(_dot(w, w))
        if nw == 0.0:
            break
        u = w / nw
        lam_prev = lam
    evals, evecs = jacobi_eigh(G)
    top = 0
    for k in range(1, K):
        if evals[k] > evals[top]:
            top = k
    u = evecs[:, top].copy()
    if float(_seqsum(u)) < 0.0:
        u = -u
    nu = math.sqrt(_dot(u, u))
    u = u / nu
    w = _matvec(G, u)
    lam = _dot(u, w)
    r = w - lam * u
    res = math.sqrt(_dot(r, r))
    return lam, u, it, STATUS_JACOBI, res


def _weighted(rows, s):
    acc = s[0] * rows[0]
    for k in range(1, rows.shape[0]):
        acc = acc + s[k] * rows[k]
    return acc


def distance_row(X, i):
    X = np.ascontiguousarray(X, dtype=np.float64)
    return _dist_rows(X[None], i)[0]


def normalized_row(X, i):
    rows = _dist_rows(np.ascontiguousarray(X, dtype=np.float64)[None], i)
    norms = _normalize(rows)
    return rows[0], float(norms[0])


def normalize_vector(v):
    rows = np.array(v, dtype=np.float64, copy=True)[None]
    norms = _normalize(rows)
    return rows[0], float(norms[0])


def _chunks(n, nthreads):
    nthreads = max(1, min(nthreads, n))
    bounds = np.linspace(0, n, nthreads + 1).astype(int)
    return [range(bounds[t], bounds[t + 1]) for t in range(nthreads)]


def _run(fn, n, nthreads):
    chunks = _chunks(n, nthreads)
    if len(chunks) == 1:
        fn(chunks[0])
        return
    with ThreadPoolExecutor(len(chunks)) as ex:
        list(ex.map(fn, chunks))


def normalized_matrix(X, nthreads=1):
    X = np.ascontiguousarray(X, dtype=np.float64)[None]
    n = X.shape[1]
    out = np.empty((n, n))

    def work(idx):
        for i in idx:
            rows = _dist_rows(X, i)
            _normalize(rows)
            out[i] = rows[0]

    _run(work, n, nthreads)
    return out


def score_samples(C, nthreads=1, meta=False):
    """Eigenscores (and optionally the spectral meta-distance) for every sample."""
    C = np.ascontiguousarray(C, dtype=np.float64)
    K, n, _ = C.shape
    scores = np.empty((n, K))
    lam = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int8)
    out = np.empty((n, n)) if meta else None

    def work(idx):
        for i in idx:
            rows = _dist_rows(C, i)
            _normalize(rows)
            G = _gram(rows)
            lam[i], u, iters[i], status[i], _ = leading_eigenpair(G)
            s = np.abs(u)
            scores[i] = s
            if meta:
                out[i] = _weighted(rows, s)

    _run(work, n, nthreads)
    return scores, lam, iters, status, out


def weighted_meta(C, W, nthreads=1):
    """Rows of sum_k W[i, k] * normalized_row_k(i)."""
    C = np.ascontiguousarray(C, dtype=np.float64)
    W = np.ascontiguousarray(W, dtype=np.float64)
    K, n, _ = C.shape
    out = np.empty((n, n))

    def work(idx):
        for i in idx:
            rows = _dist_rows(C, i)
            _normalize(rows)
            out[i] = _weighted(rows, W[i])

    _run(work, n, nthreads)
    return out


def score_stack(S):
    """Score one precomputed (K, n) stack of raw distance rows.

    Returns ``(scores, lam, iterations, status, normalized_rows, norms)``.
    """
    rows = np.array(S, dtype=np.float64, copy=True)
    norms = _normalize(rows)
    G = _gram(rows)
    lam, u, it, st, _ = leading_eigenpair(G)
    return np.abs(u), lam, it, st, rows, norms


def gram(rows):
    return _gram(np.ascontiguousarray(rows, dtype=np.float64))


def weighted_row(rows, s):
    return _weighted(np.ascontiguousarray(rows, dtype=np.float64), np.asarray(s, dtype=np.float64))
