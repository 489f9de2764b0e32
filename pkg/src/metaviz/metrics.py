"""Evaluation quantities: concordance, Silhouette, Kendall's tau and order extraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .errors import (
    AllDegenerate,
    LengthMismatch,
    ModeMismatch,
    PointAtCenter,
    SingleCluster,
    SingletonCluster,
    ValidationError,
    ZeroVariance,
    ZeroVector,
)
from .model import Embedding, GroundTruthDistance


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise LengthMismatch(f"lengths {u.shape[0]} and {v.shape[0]} differ")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    return float(np.clip((u @ v) / (nu * nv), -1.0, 1.0))


@dataclass(frozen=True)
class ConcordanceSummary:
    mean: float
    per_sample: np.ndarray  # NaN at skipped samples
    skipped: int


def _rows(rows) -> np.ndarray:
    return np.asarray(getattr(rows, "rows", rows), dtype=np.float64)


def concordance_summary(rows, truth: GroundTruthDistance) -> ConcordanceSummary:
    """Per-sample inner products of unit-normalized ``rows[i]`` with the normalized truth row.

    ``rows`` may be any n x n array (candidate distances, a meta-distance,
    raw model rows); each row is rescaled to unit norm first and an all-zero
    row contributes 0. Samples whose truth row is degenerate are skipped.
    """
    R = _rows(rows)
    if R.shape != truth.normalized.shape:
        raise LengthMismatch(f"rows of shape {R.shape} against truth {truth.normalized.shape}")
    keep = ~truth.degenerate
    if not keep.any():
        raise AllDegenerate("every truth row is degenerate")
    nrm = np.linalg.norm(R, axis=1)
    safe = np.where(nrm > 0, nrm, 1.0)
    per = np.einsum("ij,ij->i", R, truth.normalized) / safe
    per = np.where(keep, per, np.nan)
    return ConcordanceSummary(float(np.mean(per[keep])), per, int((~keep).sum()))


def mean_concordance(rows, truth: GroundTruthDistance) -> float:
    return concordance_summary(rows, truth).mean


def silhouette(D, labels) -> np.ndarray:
    """Silhouette index of every sample from a distance matrix.

    ``a(i)`` averages over the other members of i's cluster, ``b(i)`` is
    the smallest mean distance to another cluster. When both are zero the
    index is defined as 0. Rows are used as given, so an asymmetric
    (e.g. row-normalized) matrix is accepted.
    """
    D = np.asarray(D, dtype=np.float64)
    labels = np.asarray(labels)
    n = D.shape[0]
    if D.shape != (n, n) or labels.shape != (n,):
        raise LengthMismatch("distance matrix and labels disagree in size")
    uniq, inv, counts = np.unique(labels, return_inverse=True, return_counts=True)
    if uniq.size < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    if counts.min() < 2:
        raise SingletonCluster(f"cluster {uniq[np.argmin(counts)]!r} has a single member")
    onehot = np.zeros((n, uniq.size))
    onehot[np.arange(n), inv] = 1.0
    sums = D @ onehot  # n x C sum of distances to each cluster
    own = sums[np.arange(n), inv] - D[np.arange(n), np.arange(n)]
    a = own / (counts[inv] - 1)
    means = sums / counts[None, :]
    means[np.arange(n), inv] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        si = np.where(denom > 0, (b - a) / denom, 0.0)
    return si


def kendall_tau(a, b) -> float:
    """Tie-corrected Kendall tau-b."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch("rank vectors must be 1-D of equal length")
    if a.shape[0] < 2:
        raise LengthMismatch("need at least two items")
    tau = stats.kendalltau(a, b, variant="b").statistic
    return 0.0 if np.isnan(tau) else float(tau)


@dataclass(frozen=True)
class OrderExtraction:
    mode: str  # "circular" or "principal"
    order: np.ndarray
    angles: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in ("circular", "principal"):
            raise ValidationError(f"unknown order mode {self.mode!r}")
        order = np.asarray(self.order, dtype=np.int64)
        if not np.array_equal(np.sort(order), np.arange(order.shape[0])):
            raise ValidationError("order must be a permutation of 0..n-1")
        object.__setattr__(self, "order", order)


def _ranks(x) -> np.ndarray:
    r = np.empty(x.shape[0], dtype=np.int64)
    r[np.argsort(x, kind="stable")] = np.arange(x.shape[0])
    return r


def _coords(e):
    return np.asarray(getattr(e, "coords", e), dtype=np.float64)


def circular_order(e, perturb: float = 0.0, seed=0) -> OrderExtraction:
    """Rank points by their angle about the centroid of a 2-D embedding.

    A point sitting exactly on the centroid has no angle and raises
    :class:`PointAtCenter`, unless ``perturb > 0``, in which case such points
    are nudged by a seeded offset of that size before the angle is taken.
    """
    X = _coords(e)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValidationError("circular order needs a 2-D embedding")
    C = X - X.mean(axis=0)
    at_center = np.all(C == 0.0, axis=1)
    if at_center.any():
        if perturb <= 0:
            raise PointAtCenter(f"{int(at_center.sum())} point(s) at the centroid")
        rng = np.random.default_rng(seed)
        ang = rng.uniform(0, 2 * np.pi, int(at_center.sum()))
        C[at_center] = perturb * np.c_[np.cos(ang), np.sin(ang)]
    theta = np.arctan2(C[:, 1], C[:, 0])
    return OrderExtraction("circular", _ranks(theta), angles=theta)


def circular_tau(extracted: OrderExtraction, truth_order) -> float:
    """Best tau over all cyclic offsets and both orientations of the extracted order."""
    if extracted.mode != "circular":
        raise ModeMismatch("circular_tau needs a circular OrderExtraction")
    truth = np.asarray(truth_order)
    n = extracted.order.shape[0]
    if truth.shape != (n,):
        raise LengthMismatch("truth order length differs from extracted order")
    best = -1.0
    for o in extracted.order, (-extracted.order) % n:
        for off in range(n):
            best = max(best, kendall_tau((o + off) % n, truth))
            if best == 1.0:
                return best
    return best


def principal_order(e) -> OrderExtraction:
    """Rank points by their projection on the first principal axis."""
    X = _coords(e)
    if X.ndim == 1:
        X = X[:, None]
    C = X - X.mean(axis=0)
    if not np.any(C != 0):
        raise ZeroVariance("embedding has zero variance")
    _, _, Vt = np.linalg.svd(C, full_matrices=False)
    axis = Vt[0]
    if axis[np.argmax(np.abs(axis))] < 0:
        axis = -axis
    proj = C @ axis
    return OrderExtraction("principal", _ranks(proj), values=proj)


def principal_tau(extracted: OrderExtraction, truth_order) -> float:
    """|tau|, i.e. the better of the two axis signs."""
    if extracted.mode != "principal":
        raise ModeMismatch("principal_tau needs a principal OrderExtraction")
    return abs(kendall_tau(extracted.values, truth_order))


def median_silhouette(D, labels) -> float:
    return float(np.median(silhouette(D, labels)))


__all__ = [
    "ConcordanceSummary",
    "OrderExtraction",
    "circular_order",
    "circular_tau",
    "concordance_summary",
    "cosine",
    "kendall_tau",
    "mean_concordance",
    "median_silhouette",
    "principal_order",
    "principal_tau",
    "silhouette",
]
