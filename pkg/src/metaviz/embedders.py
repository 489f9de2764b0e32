"""Dimension-reduction backends.

Two roles: producing candidate visualizations from raw data, and turning a
(meta-)distance matrix into the final meta-visualization. All eigen-based
methods fix eigenvector signs (largest-magnitude entry positive) so that
output is reproducible run to run.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from .errors import (
    DisconnectedGraphWarning,
    NegativeEntry,
    NonPositiveSigma,
    NotSymmetric,
    RankDeficientWarning,
    UnsupportedMethod,
    ValidationError,
)
from .model import CandidateSet, Embedding, MetaDistance

log = logging.getLogger(__name__)

METHODS = ("pca", "classical-mds", "gaussian-kpca", "laplacian-eigenmap", "random-projection")
DISTANCE_METHODS = ("classical-mds", "gaussian-kpca", "laplacian-eigenmap")
ALIASES = {
    "mds": "classical-mds",
    "cmds": "classical-mds",
    "kpca": "gaussian-kpca",
    "leim": "laplacian-eigenmap",
    "laplacian": "laplacian-eigenmap",
    "rp": "random-projection",
}


def canonical_method(method: str) -> str:
    m = ALIASES.get(method, method)
    if m not in METHODS:
        raise UnsupportedMethod(f"unknown embedding method {method!r}")
    return m


@dataclass(frozen=True)
class EmbedderConfig:
    method: str = "gaussian-kpca"
    dim: int = 2
    sigma: Optional[float] = None
    knn: int = 15
    seed: int = 0
    sigma_scale: float = 1.0  # multiplier on the median heuristic when sigma is None

    def __post_init__(self):
        object.__setattr__(self, "method", canonical_method(self.method))
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if self.sigma is not None and not self.sigma > 0:
            raise NonPositiveSigma("sigma must be > 0")
        if self.knn < 1:
            raise ValidationError("knn must be >= 1")
        if not self.sigma_scale > 0:
            raise NonPositiveSigma("sigma_scale must be > 0")


def _fix_signs(V):
    """Flip columns so each one's largest-magnitude entry is positive."""
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _subset_eigh(B, lo, hi):
    """Eigenpairs ``lo..hi`` (ascending) of a symmetric matrix."""
    w, V = scipy.linalg.eigh(B, subset_by_index=[lo, hi])
    if w.shape[0] < hi - lo + 1:
        # the subset driver can return nothing on a heavily clustered spectrum
        w, V = scipy.linalg.eigh(B)
        w, V = w[lo : hi + 1], V[:, lo : hi + 1]
    return w, V


def _top_eigh(B, dim):
    """Top ``dim`` eigenpairs of a symmetric matrix, descending."""
    n = B.shape[0]
    k = min(dim, n)
    w, V = _subset_eigh(B, n - k, n - 1)
    return w[::-1], V[:, ::-1]


def _pad(X, dim):
    if X.shape[1] < dim:
        X = np.hstack([X, np.zeros((X.shape[0], dim - X.shape[1]))])
    return X


def _check_distance(D, require_symmetric=True):
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValidationError("distance matrix must be square")
    if not np.all(np.isfinite(D)):
        raise ValidationError("distance matrix has non-finite entries")
    if np.any(D < 0):
        raise NegativeEntry("distance matrix has negative entries")
    if require_symmetric:
        scale = max(float(np.abs(D).max()), 1.0)
        if not np.allclose(D, D.T, rtol=0, atol=1e-10 * scale):
            raise NotSymmetric("distance matrix must be symmetric")
    return D


def _double_center(A):
    row = A.mean(axis=1, keepdims=True)
    col = A.mean(axis=0, keepdims=True)
    return A - row - col + A.mean()


def pca_embed(data, dim: int = 2, name: str = "pca") -> Embedding:
    """Project column-centered data onto its top ``dim`` right singular vectors."""
    Y = np.asarray(data, dtype=np.float64)
    Yc = Y - Y.mean(axis=0)
    _, S, Vt = np.linalg.svd(Yc, full_matrices=False)
    tol = max(Yc.shape) * np.finfo(float).eps * (S[0] if S.size else 0.0)
    rank = int(np.count_nonzero(S > tol)) if S.size and S[0] > 0 else 0
    k = min(dim, rank)
    if k < dim:
        warnings.warn(
            f"data has rank {rank} < {dim}; padding with zero columns",
            RankDeficientWarning,
            stacklevel=2,
        )
    loadings = _fix_signs(Vt[:k].T)
    return Embedding(name, _pad(Yc @ loadings, dim))


def classical_mds_from_distance(D, dim: int = 2, name: str = "classical-mds") -> Embedding:
    """Torgerson scaling: top eigenpairs of -1/2 J (D*D) J, negatives truncated."""
    D = _check_distance(D)
    B = -0.5 * _double_center(D * D)
    w, V = _top_eigh(B, dim)
    X = _fix_signs(V) * np.sqrt(np.clip(w, 0.0, None))
    return Embedding(name, _pad(X, dim))


def median_sigma(D) -> float:
    """Median heuristic bandwidth: median off-diagonal distance over sqrt(2)."""
    D = np.asarray(D)
    off = D[~np.eye(D.shape[0], dtype=bool)]
    med = float(np.median(off)) if off.size else 0.0
    return med / np.sqrt(2.0)


def gaussian_kpca_from_distance(D, sigma: Optional[float] = None, dim: int = 2,
                                name: str = "gaussian-kpca", sigma_scale: float = 1.0) -> Embedding:
    """Kernel PCA with ``exp(-D^2 / (2 sigma^2))``.

    ``sigma=None`` uses ``sigma_scale`` times :func:`median_sigma`.
    """
    D = _check_distance(D)
    if sigma is None:
        sigma = sigma_scale * median_sigma(D)
        if sigma == 0.0:
            return Embedding(name, np.zeros((D.shape[0], dim)))
    elif not sigma > 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    Kc = _double_center(np.exp(-(D * D) / (2.0 * sigma * sigma)))
    w, V = _top_eigh(Kc, dim)
    X = _fix_signs(V) * np.sqrt(np.clip(w, 0.0, None))
    return Embedding(name, _pad(X, dim))


def knn_graph(D, knn: int) -> np.ndarray:
    """Binary adjacency of the union-symmetrized kNN graph (ties broken by index)."""
    n = D.shape[0]
    if not 1 <= knn < n:
        raise ValidationError(f"knn must lie in [1, {n})")
    Dm = np.array(D, dtype=np.float64, copy=True)
    np.fill_diagonal(Dm, np.inf)
    nbrs = np.argsort(Dm, axis=1, kind="stable")[:, :knn]
    W = np.zeros((n, n))
    W[np.repeat(np.arange(n), knn), nbrs.ravel()] = 1.0
    return np.maximum(W, W.T)


def laplacian_eigenmap_from_distance(D, knn: int = 15, dim: int = 2,
                                     name: str = "laplacian-eigenmap") -> Embedding:
    """Laplacian eigenmap of a kNN graph.

    Takes the eigenvectors ``u`` of the symmetric normalized Laplacian for
    the ``dim`` smallest eigenvalues after the trivial one and returns
    ``Delta^{-1/2} u``, the solutions of the generalized problem
    ``L y = lambda Delta y``. A
    disconnected graph is embedded on its largest component; other samples
    stay at the origin.
    """
    D = _check_distance(D)
    n = D.shape[0]
    W = knn_graph(D, knn)
    ncomp, labels = connected_components(csr_matrix(W), directed=False)
    keep = np.arange(n)
    if ncomp > 1:
        sizes = np.bincount(labels)
        big = int(np.argmax(sizes))
        warnings.warn(
            f"kNN graph has {ncomp} components; embedding the largest ({sizes[big]} of {n} samples)",
            DisconnectedGraphWarning,
            stacklevel=2,
        )
        keep = np.flatnonzero(labels == big)
    Wc = W[np.ix_(keep, keep)]
    m = keep.size
    out = np.zeros((n, dim))
    if m > 1:
        dinv = 1.0 / np.sqrt(Wc.sum(axis=1))
        L = np.eye(m) - dinv[:, None] * Wc * dinv[None, :]
        k = min(dim + 1, m)
        _, V = _subset_eigh(L, 0, k - 1)
        out[keep, : k - 1] = _fix_signs(dinv[:, None] * V[:, 1:k])
    return Embedding(name, out)


def laplacian_spectrum(D, knn: int) -> np.ndarray:
    """Full ascending spectrum of the normalized Laplacian (for diagnostics)."""
    W = knn_graph(_check_distance(D), knn)
    dinv = 1.0 / np.sqrt(W.sum(axis=1))
    L = np.eye(W.shape[0]) - dinv[:, None] * W * dinv[None, :]
    return np.linalg.eigvalsh(L)


def random_projection_embed(data, dim: int = 2, seed: int = 0, orthogonalize: bool = False,
                            name: str = "random-projection") -> Embedding:
    """``data @ G / sqrt(dim)`` for a seeded standard Gaussian ``p x dim`` matrix G.

    With ``orthogonalize=True`` the columns of G are orthonormalized instead of
    scaled.
    """
    Y = np.asarray(data, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] < 1:
        raise ValidationError("data must be an n x p matrix with p >= 1")
    G = np.random.default_rng(seed).standard_normal((Y.shape[1], dim))
    if orthogonalize:
        G = np.linalg.qr(G)[0]
        return Embedding(name, Y @ G)
    return Embedding(name, Y @ G / np.sqrt(dim))


def euclidean_distances(data) -> np.ndarray:
    return squareform(pdist(np.asarray(data, dtype=np.float64)))


def embed_distance(D, cfg: EmbedderConfig, name: Optional[str] = None) -> Embedding:
    name = name or cfg.method
    if cfg.method == "classical-mds":
        return classical_mds_from_distance(D, cfg.dim, name=name)
    if cfg.method == "gaussian-kpca":
        return gaussian_kpca_from_distance(D, cfg.sigma, cfg.dim, name=name, sigma_scale=cfg.sigma_scale)
    if cfg.method == "laplacian-eigenmap":
        return laplacian_eigenmap_from_distance(D, cfg.knn, cfg.dim, name=name)
    raise UnsupportedMethod(f"{cfg.method} needs raw data, not a distance matrix")


def embed_data(data, cfg: EmbedderConfig, name: Optional[str] = None, distances=None) -> Embedding:
    """Embed raw data with any method; distance methods use Euclidean distances."""
    name = name or cfg.method
    if cfg.method == "pca":
        return pca_embed(data, cfg.dim, name=name)
    if cfg.method == "random-projection":
        return random_projection_embed(data, cfg.dim, cfg.seed, name=name)
    D = euclidean_distances(data) if distances is None else distances
    return embed_distance(D, cfg, name=name)


def meta_embed(m, cfg: EmbedderConfig, name: str = "meta") -> Embedding:
    """Final visualization from a meta-distance; symmetrizes first when needed."""
    from .fusion import symmetrize

    if cfg.method not in DISTANCE_METHODS:
        raise UnsupportedMethod(f"{cfg.method} cannot embed a distance matrix")
    if isinstance(m, MetaDistance):
        if not m.symmetrized:
            log.info("meta-distance not symmetrized; using m + m.T")
            m = symmetrize(m)
        D = m.rows
    else:
        D = np.asarray(m, dtype=np.float64)
    return embed_distance(D, cfg, name=name)


def default_pool(dim: int = 2, seed: int = 0) -> list:
    """Named configurations for a diverse pool of 9 candidates.

    Classical MDS on Euclidean distances reproduces PCA exactly, and a
    wide-kernel kPCA is close to it, so neither is included. Three
    independent random projections supply weakly correlated candidates,
    and a very local kernel gives one deliberately poor candidate, so the
    pool spans a range of quality as real tool collections do.
    """
    return [
        ("pca", EmbedderConfig("pca", dim)),
        ("kpca-narrow", EmbedderConfig("gaussian-kpca", dim, sigma_scale=0.5)),
        ("kpca", EmbedderConfig("gaussian-kpca", dim)),
        ("kpca-local", EmbedderConfig("gaussian-kpca", dim, sigma_scale=0.2)),
        ("leim-10", EmbedderConfig("laplacian-eigenmap", dim, knn=10)),
        ("leim-30", EmbedderConfig("laplacian-eigenmap", dim, knn=30)),
        ("rp-1", EmbedderConfig("random-projection", dim, seed=seed + 1)),
        ("rp-2", EmbedderConfig("random-projection", dim, seed=seed + 2)),
        ("rp-3", EmbedderConfig("random-projection", dim, seed=seed + 3)),
    ]


def diverse_candidates(data, dim: int = 2, seed: int = 0, pool=None) -> CandidateSet:
    """Embed ``data`` with every configuration of ``pool`` (default :func:`default_pool`)."""
    pool = default_pool(dim, seed) if pool is None else pool
    D = euclidean_distances(data)
    return CandidateSet(tuple(embed_data(data, cfg, name=nm, distances=D) for nm, cfg in pool))
