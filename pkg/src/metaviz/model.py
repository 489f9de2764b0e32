"""Shared domain types.

All containers are frozen dataclasses holding read-only numpy arrays, so they
can be handed to worker threads without copying. Sample indices are 0-based
everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DuplicateName,
    EmptySet,
    InvalidModel,
    MismatchedSampleCount,
    NegativeEntry,
    NonFiniteCoordinate,
    NonFiniteEntry,
    TooFewSamples,
    ValidationError,
)


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _blockwise_all(A, test, block=1024):
    """``test(A[rows], A[:, rows].T)`` over row blocks, avoiding n^2 temporaries."""
    for start in range(0, A.shape[0], block):
        sl = slice(start, start + block)
        if not test(A[sl], A[:, sl].T):
            return False
    return True


# invariant tolerances
UNIT_TOL = 1e-12
SCORE_NORM_TOL = 1e-10
SYM_TOL = 1e-12
TRIANGLE_TOL = 1e-9
TRIANGLE_CHECK_MAX_N = 400  # the triangle check is cubic; skipped above this size


@dataclass(frozen=True)
class Embedding:
    """One candidate visualization: ``n`` samples in ``d`` dimensions."""

    name: str
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[1] < 1:
            raise ValidationError(f"{self.name}: coords must be an n x d matrix")
        if coords.shape[0] < 2:
            raise TooFewSamples(f"{self.name}: need n >= 2 samples, got {coords.shape[0]}")
        bad = ~np.isfinite(coords)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise NonFiniteCoordinate(
                f"{self.name}: non-finite coordinate at sample {i}, column {j}"
            )
        object.__setattr__(self, "coords", _frozen(coords))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def permuted(self, perm) -> "Embedding":
        return Embedding(self.name, self.coords[np.asarray(perm)])


@dataclass(frozen=True)
class CandidateSet:
    """K named embeddings of the same n samples."""

    candidates: tuple

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        _check_candidates(self.candidates)

    @property
    def n(self) -> int:
        return self.candidates[0].n

    @property
    def K(self) -> int:
        return len(self.candidates)

    @property
    def names(self) -> list:
        return [c.name for c in self.candidates]

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def __getitem__(self, k):
        return self.candidates[k]

    def stacked(self) -> np.ndarray:
        """Coordinates as a (K, n, D) array, zero-padded to the widest d.

        Zero padding leaves every Euclidean distance bit-identical.
        """
        D = max(c.d for c in self.candidates)
        out = np.zeros((self.K, self.n, D))
        for k, c in enumerate(self.candidates):
            out[k, :, : c.d] = c.coords
        return out

    def permuted(self, perm) -> "CandidateSet":
        return CandidateSet(tuple(c.permuted(perm) for c in self.candidates))


def _check_candidates(candidates):
    violations = []
    first = None
    if len(candidates) == 0:
        raise EmptySet("candidate set is empty")
    for c in candidates:
        if not isinstance(c, Embedding):
            raise ValidationError(f"expected Embedding, got {type(c).__name__}")
    sizes = {c.n for c in candidates}
    if len(sizes) > 1:
        msg = "candidates disagree on sample count: " + ", ".join(
            f"{c.name}={c.n}" for c in candidates
        )
        violations.append(msg)
        first = first or MismatchedSampleCount
    names = [c.name for c in candidates]
    dupes = sorted({nm for nm in names if names.count(nm) > 1})
    if dupes:
        violations.append(f"duplicate candidate names: {dupes}")
        first = first or DuplicateName
    if violations:
        raise first("; ".join(violations), violations)


def validate_candidate_set(candidates) -> CandidateSet:
    """Return a validated :class:`CandidateSet`.

    Accepts an existing set or any sequence of :class:`Embedding`. Raises the
    error class of the first violation; ``exc.violations`` lists all of them.
    Non-finite coordinates are rejected when the :class:`Embedding` is built.
    """
    if isinstance(candidates, CandidateSet):
        _check_candidates(candidates.candidates)
        return candidates
    return CandidateSet(tuple(candidates))


@dataclass(frozen=True)
class NormalizedDistanceRow:
    sample: int
    values: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        v = _frozen(self.values)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValidationError("normalized row must be a finite nonnegative vector")
        if 0 <= self.sample < v.shape[0] and v[self.sample] != 0:
            raise ValidationError(f"entry {self.sample} (self-distance) must be 0")
        nrm = float(np.linalg.norm(v))
        if self.degenerate:
            if nrm != 0.0:
                raise ValidationError("degenerate row must be all zero")
        elif abs(nrm - 1.0) > UNIT_TOL:
            raise ValidationError(f"row norm {nrm!r} is not 1")


@dataclass(frozen=True)
class GramMatrix:
    sample: int
    entries: np.ndarray

    def __post_init__(self):
        G = _frozen(self.entries)
        object.__setattr__(self, "entries", G)
        K = G.shape[0]
        if G.shape != (K, K):
            raise ValidationError("Gram matrix must be square")
        if np.max(np.abs(G - G.T), initial=0.0) > SYM_TOL:
            raise ValidationError("Gram matrix must be symmetric")
        if np.any(G < -UNIT_TOL) or np.any(G > 1 + UNIT_TOL):
            raise ValidationError("Gram entries must lie in [0, 1]")
        d = np.diag(G)
        if np.any((np.abs(d - 1) > UNIT_TOL) & (np.abs(d) > UNIT_TOL)):
            raise ValidationError("Gram diagonal must be 1 (or 0 for degenerate rows)")
        if K and np.linalg.eigvalsh(G).min() < -1e-10 * K:
            raise ValidationError("Gram matrix must be positive semi-definite")

    @property
    def K(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenscoreMatrix:
    """n x K nonnegative scores, row i unit-norm.

    ``fallback`` marks samples where every candidate row was degenerate and
    uniform scores were substituted.
    """

    scores: np.ndarray
    eigenvalues: Optional[np.ndarray] = None
    iterations: Optional[np.ndarray] = None
    status: Optional[np.ndarray] = None

    def __post_init__(self):
        S = _frozen(self.scores)
        object.__setattr__(self, "scores", S)
        for name in ("eigenvalues", "iterations", "status"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _frozen(v, dtype=np.asarray(v).dtype))
        if S.ndim != 2:
            raise ValidationError("scores must be an n x K matrix")
        if not np.all(np.isfinite(S)) or np.any(S < 0):
            raise ValidationError("scores must be finite and nonnegative")
        if S.size and np.max(np.abs(np.linalg.norm(S, axis=1) - 1.0)) > SCORE_NORM_TOL:
            raise ValidationError("every score row must have unit norm")

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def K(self) -> int:
        return self.scores.shape[1]

    @property
    def fallback(self) -> np.ndarray:
        if self.status is None:
            return np.zeros(self.n, dtype=bool)
        return self.status == STATUS_UNIFORM


# eigensolve status codes shared with the kernels
STATUS_POWER = 0
STATUS_JACOBI = 1
STATUS_UNIFORM = 2


@dataclass(frozen=True)
class MetaDistance:
    rows: np.ndarray
    symmetrized: bool = False

    def __post_init__(self):
        rows = self.rows
        if not (isinstance(rows, np.ndarray) and rows.dtype == np.float64 and not rows.flags.writeable):
            rows = _frozen(rows)
        object.__setattr__(self, "rows", rows)
        n = rows.shape[0]
        if rows.shape != (n, n):
            raise ValidationError(f"meta-distance must be square, got {rows.shape}")
        if not _blockwise_all(rows, lambda a, _: bool(np.all(np.isfinite(a)))):
            raise NonFiniteEntry("meta-distance has non-finite entries")
        if not _blockwise_all(rows, lambda a, _: bool(np.all(a >= 0))):
            raise NegativeEntry("meta-distance has negative entries")
        if np.any(np.diag(rows) != 0):
            raise ValidationError("meta-distance diagonal must be zero")
        if self.symmetrized and not _blockwise_all(
                rows, lambda a, b: float(np.max(np.abs(a - b), initial=0.0)) <= SYM_TOL * max(1.0, float(np.max(a, initial=0.0)))):
            raise ValidationError("symmetrized meta-distance is not symmetric")

    @property
    def n(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class GroundTruthDistance:
    raw: np.ndarray
    normalized: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "raw", _frozen(self.raw))
        object.__setattr__(self, "normalized", _frozen(self.normalized))
        if self.degenerate is None:
            deg = ~np.any(self.normalized != 0, axis=1)
        else:
            deg = self.degenerate
        object.__setattr__(self, "degenerate", _frozen(deg, dtype=bool))
        P = self.raw
        n = P.shape[0]
        if P.shape != (n, n) or self.normalized.shape != (n, n):
            raise ValidationError("truth matrices must be n x n")
        if np.any(P < 0) or np.any(np.diag(P) != 0):
            raise ValidationError("truth distances must be nonnegative with zero diagonal")
        if np.max(np.abs(P - P.T), initial=0.0) > SYM_TOL * max(1.0, float(P.max(initial=0.0))):
            raise ValidationError("truth distances must be symmetric")
        if n <= TRIANGLE_CHECK_MAX_N:
            for k in range(n):
                if np.any(P > P[:, k, None] + P[None, k, :] + TRIANGLE_TOL * max(1.0, float(P.max()))):
                    raise ValidationError("truth distances violate the triangle inequality")
        live = np.linalg.norm(self.normalized[~deg], axis=1)
        if live.size and np.max(np.abs(live - 1.0)) > UNIT_TOL:
            raise ValidationError("non-degenerate truth rows must have unit norm")

    @property
    def n(self) -> int:
        return self.raw.shape[0]


@dataclass(frozen=True)
class SyntheticScene:
    signals: np.ndarray
    data: np.ndarray
    theta: float
    r: int
    seed: int
    labels: Optional[np.ndarray] = None
    true_order: Optional[np.ndarray] = None
    structure: str = ""

    def __post_init__(self):
        object.__setattr__(self, "signals", _frozen(self.signals))
        object.__setattr__(self, "data", _frozen(self.data))
        if self.labels is not None:
            labels = _frozen(self.labels, dtype=np.int64)
            _, counts = np.unique(labels, return_counts=True)
            if counts.min() < 2:
                raise ValidationError("every cluster needs at least 2 members")
            object.__setattr__(self, "labels", labels)
        if self.true_order is not None:
            object.__setattr__(self, "true_order", _frozen(self.true_order))

    @property
    def noise(self) -> np.ndarray:
        return self.data - self.signals

    @property
    def n(self) -> int:
        return self.signals.shape[0]

    @property
    def p(self) -> int:
        return self.signals.shape[1]


@dataclass(frozen=True)
class DistortionModel:
    """Parameters of the scaled signal-plus-noise candidate model.

    ``scales`` is n x K (per-sample, per-candidate); a constant column gives
    the per-visualization special case. The last ``adversarial_count``
    candidates are adversarial.
    """

    sigma: float
    correlation: np.ndarray
    scales: np.ndarray
    adversarial_count: int = 0

    def __post_init__(self):
        R = np.asarray(self.correlation, dtype=np.float64)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise InvalidModel("correlation must be square")
        if not np.allclose(R, R.T, atol=1e-12):
            raise InvalidModel("correlation must be symmetric")
        if not np.allclose(np.diag(R), 1.0, atol=1e-12):
            raise InvalidModel("correlation must have unit diagonal")
        K = R.shape[0]
        if np.linalg.eigvalsh(R).min() < -1e-10 * K:
            raise InvalidModel("correlation must be positive semi-definite")
        if not self.sigma >= 0 or not np.isfinite(self.sigma):
            raise InvalidModel("sigma must be finite and >= 0")
        c = np.asarray(self.scales, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != K:
            raise InvalidModel(f"scales must be n x {K}")
        if np.any(c <= 0) or not np.all(np.isfinite(c)):
            raise InvalidModel("scales must be positive")
        if not 0 <= self.adversarial_count < K:
            raise InvalidModel("adversarial_count must lie in [0, K)")
        object.__setattr__(self, "correlation", _frozen(R))
        object.__setattr__(self, "scales", _frozen(c))

    @property
    def K(self) -> int:
        return self.correlation.shape[0]

    @property
    def rho(self) -> float:
        """Spectral norm of the correlation matrix."""
        return float(np.linalg.norm(self.correlation, 2))

    @classmethod
    def build(cls, n, K, sigma=1.0, correlation=None, scales=None, adversarial_count=0):
        R = np.eye(K) if correlation is None else correlation
        if scales is None:
            scales = np.ones((n, K))
        elif np.ndim(scales) == 1:
            scales = np.broadcast_to(np.asarray(scales, float), (n, K))
        return cls(sigma, R, scales, adversarial_count)


def block_correlation(K: int, block_size: int, rho: float) -> np.ndarray:
    """Correlation with equicorrelated diagonal blocks and zero coupling between blocks."""
    R = np.eye(K)
    for start in range(0, K, block_size):
        stop = min(start + block_size, K)
        R[start:stop, start:stop] = rho
    np.fill_diagonal(R, 1.0)
    return R


def as_embeddings(named_coords: Sequence) -> CandidateSet:
    return CandidateSet(tuple(Embedding(nm, x) for nm, x in named_coords))
