"""Meta-distance construction from eigenscores."""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import AlreadySymmetrized, LengthMismatch, ShapeMismatch, ValidationError
from .model import CandidateSet, EigenscoreMatrix, MetaDistance, validate_candidate_set
from .parallel import resolve_threads


def _meta(rows, symmetrized=False) -> MetaDistance:
    # freeze in place; these matrices can be n^2 doubles and must not be copied
    rows.setflags(write=False)
    return MetaDistance(rows, symmetrized)


def _stack(rows) -> np.ndarray:
    if isinstance(rows, np.ndarray):
        return np.atleast_2d(rows)
    return np.stack([getattr(r, "values", r) for r in rows])


def meta_distance_row(scores, rows) -> np.ndarray:
    """Eigenscore-weighted sum of one sample's K normalized distance rows."""
    s = np.asarray(scores, dtype=np.float64)
    R = _stack(rows)
    if R.shape[0] != s.shape[0]:
        raise LengthMismatch(f"{s.shape[0]} scores for {R.shape[0]} rows")
    if np.any(s < 0):
        raise ValidationError("scores must be nonnegative")
    if abs(np.linalg.norm(s) - 1.0) > 1e-8:
        raise ValidationError("scores must have unit norm")
    return kernels.backend.weighted_row(R, s)


def spectral_meta_distance(candidates: CandidateSet, scores: EigenscoreMatrix, threads=None) -> MetaDistance:
    candidates = validate_candidate_set(candidates)
    W = scores.scores if isinstance(scores, EigenscoreMatrix) else np.asarray(scores, dtype=np.float64)
    if W.shape != (candidates.n, candidates.K):
        raise ShapeMismatch(f"scores shape {W.shape} != ({candidates.n}, {candidates.K})")
    out = kernels.backend.weighted_meta(candidates.stacked(), W, resolve_threads(threads))
    return _meta(out)


def naive_meta_distance(candidates: CandidateSet, threads=None) -> MetaDistance:
    """Uniform 1/K average of the normalized rows; degenerate rows are kept."""
    candidates = validate_candidate_set(candidates)
    W = np.full((candidates.n, candidates.K), 1.0 / candidates.K)
    out = kernels.backend.weighted_meta(candidates.stacked(), W, resolve_threads(threads))
    return _meta(out)


def symmetrize(m: MetaDistance) -> MetaDistance:
    """Return ``m + m.T`` (not halved), flagged as symmetrized."""
    if m.symmetrized:
        raise AlreadySymmetrized("meta-distance is already symmetrized")
    out = m.rows + m.rows.T
    return _meta(out, symmetrized=True)
