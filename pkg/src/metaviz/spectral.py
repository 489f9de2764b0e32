"""Per-sample similarity matrices and eigenscores."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DegenerateSampleWarning, LengthMismatch, MixedSampleIndex, NotConverged
from .model import (
    STATUS_JACOBI,
    STATUS_UNIFORM,
    CandidateSet,
    EigenscoreMatrix,
    GramMatrix,
    NormalizedDistanceRow,
    validate_candidate_set,
)
from .parallel import resolve_threads

log = logging.getLogger(__name__)

GAP_TOL = 1e-9
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class EigenSolveReport:
    eigenvalue: float
    iterations: int
    residual: float
    converged: bool
    degenerate_gap: bool
    method: str  # "power", "jacobi" or "uniform"


_METHODS = {0: "power", 1: "jacobi", 2: "uniform"}


def gram_matrix(rows: Sequence[NormalizedDistanceRow]) -> GramMatrix:
    """Inner products between the K normalized rows of one sample."""
    if not rows:
        raise LengthMismatch("need at least one row")
    samples = {r.sample for r in rows}
    if len(samples) > 1:
        raise MixedSampleIndex(f"rows belong to different samples: {sorted(samples)}")
    lengths = {r.values.shape[0] for r in rows}
    if len(lengths) > 1:
        raise LengthMismatch(f"rows have different lengths: {sorted(lengths)}")
    stack = np.stack([r.values for r in rows])
    return GramMatrix(rows[0].sample, kernels.backend.gram(stack))


def _entries(G) -> np.ndarray:
    return G.entries if isinstance(G, GramMatrix) else np.asarray(G, dtype=np.float64)


def leading_eigenpair(G) -> tuple:
    """Largest eigenvalue and unit eigenvector of a symmetric PSD matrix.

    Power iteration from the uniform vector, with a cyclic Jacobi fallback.
    When the top eigenvalue is repeated, the returned vector is whatever the
    iteration converges to from the uniform start; ``degenerate_gap`` flags
    this. Raises :class:`NotConverged` (carrying ``best``) if the final
    residual misses tolerance.
    """
    A = _entries(G)
    lam, u, it, status, res = kernels.backend.leading_eigenpair(A)
    K = A.shape[0]
    if status == STATUS_UNIFORM or K == 1:
        gap_flag = status == STATUS_UNIFORM
    else:
        evals = np.sort(kernels.backend.jacobi_eigh(A)[0])[::-1]
        gap_flag = bool(evals[0] - evals[1] < GAP_TOL * evals[0])
    converged = bool(res <= RESIDUAL_TOL * max(lam, 1.0))
    report = EigenSolveReport(float(lam), int(it), float(res), converged, gap_flag, _METHODS[int(status)])
    if not converged:
        raise NotConverged(f"eigensolve residual {res:.3g} above tolerance", best=(lam, u, report))
    return float(lam), u, report


def eigenscores_for_sample(G) -> np.ndarray:
    """Absolute leading eigenvector; uniform when every candidate row is degenerate."""
    _, u, report = leading_eigenpair(G)
    if report.method == "uniform":
        warnings.warn(
            "all candidate rows degenerate at this sample; using uniform scores",
            DegenerateSampleWarning,
            stacklevel=2,
        )
    return np.abs(u)


def _warn_fallback(status):
    count = int(np.count_nonzero(status == STATUS_UNIFORM))
    if count:
        warnings.warn(
            f"{count} sample(s) had only degenerate candidate rows; uniform scores used",
            DegenerateSampleWarning,
            stacklevel=3,
        )
    jac = int(np.count_nonzero(status == STATUS_JACOBI))
    if jac:
        log.info("power iteration fell back to Jacobi on %d sample(s)", jac)


def eigenscore_matrix(candidates: CandidateSet, threads: int | None = None) -> EigenscoreMatrix:
    """Eigenscores of every candidate at every sample.

    Rows are independent and computed in parallel; the result does not
    depend on ``threads``.
    """
    candidates = validate_candidate_set(candidates)
    scores, lam, iters, status, _ = kernels.backend.score_samples(
        candidates.stacked(), resolve_threads(threads), False
    )
    _warn_fallback(status)
    return EigenscoreMatrix(scores, lam, iters, status)


def score_and_fuse(candidates: CandidateSet, threads: int | None = None):
    """Eigenscores and the spectral meta-distance in a single pass over the samples.

    Equivalent to :func:`eigenscore_matrix` followed by
    :func:`metaviz.fusion.spectral_meta_distance`, bit for bit.
    """
    from .fusion import _meta

    candidates = validate_candidate_set(candidates)
    scores, lam, iters, status, meta = kernels.backend.score_samples(
        candidates.stacked(), resolve_threads(threads), True
    )
    _warn_fallback(status)
    return EigenscoreMatrix(scores, lam, iters, status), _meta(meta)


def eigenscores_from_rows(rows) -> tuple:
    """Score one sample given its K raw (un-normalized) distance rows.

    Rows may contain negative entries, as produced by the distortion model.
    Returns ``(scores, normalized_rows, EigenSolveReport)``; the report's
    gap flag is not evaluated here.
    """
    rows = np.asarray(rows, dtype=np.float64)
    s, lam, it, status, normed, _ = kernels.backend.score_stack(rows)
    report = EigenSolveReport(float(lam), int(it), float("nan"), True, False, _METHODS[int(status)])
    return s, normed, report


def score_and_fuse_matrices(mats, naive: bool = False, meta_rows: bool = True):
    """Eigenscores and meta-distance from K precomputed n x n distance matrices.

    Used for candidates supplied as distances rather than coordinates,
    including raw model rows with negative entries (which can be scored,
    but whose meta-distance is rejected). Returns ``(EigenscoreMatrix,
    MetaDistance or None)``; with ``naive=True`` the meta rows use uniform
    1/K weights instead of the eigenscores.
    """
    from .fusion import _meta

    mats = [np.asarray(m, dtype=np.float64) for m in mats]
    if not mats:
        raise LengthMismatch("need at least one distance matrix")
    n = mats[0].shape[0]
    for m in mats:
        if m.shape != (n, n):
            raise LengthMismatch(f"distance matrices must all be {n} x {n}, got {m.shape}")
    K = len(mats)
    be = kernels.backend
    scores = np.empty((n, K))
    lam = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int8)
    meta = np.empty((n, n)) if meta_rows else None
    uniform = np.full(K, 1.0 / K)
    for i in range(n):
        stack = np.stack([m[i] for m in mats])
        s, lam[i], iters[i], status[i], normed, _ = be.score_stack(stack)
        scores[i] = s
        if meta_rows:
            meta[i] = be.weighted_row(normed, uniform if naive else s)
    _warn_fallback(status)
    return EigenscoreMatrix(scores, lam, iters, status), (_meta(meta) if meta_rows else None)
