"""Synthetic scenes and model-based distorted candidate rows.

Scenes place a low-dimensional structure of diameter ``theta`` in a random
r-plane of R^p and add standard normal noise. Distorted candidates follow
``P_k[i] = c[i, k] * (P*[i] + h_k[i])`` with Gaussian ``h`` correlated across
candidates, which is what the eigenscore consistency results are stated for.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from . import kernels
from .errors import InvalidConfig, InvalidModel, MalformedCloud, DegenerateTruth
from .model import DistortionModel, GroundTruthDistance, SyntheticScene

STRUCTURES = ("gaussian-mixture", "smiley", "pointcloud")
_STRUCTURE_ALIASES = {"g": "gaussian-mixture", "gmm": "gaussian-mixture", "mixture": "gaussian-mixture",
                      "cloud": "pointcloud", "mammoth": "pointcloud"}

# smiley components: outline circle, two eyes, mouth
SMILEY_WEIGHTS = (0.6, 0.1, 0.1, 0.2)


@dataclass(frozen=True)
class SceneConfig:
    structure: str = "gaussian-mixture"
    n: int = 900
    p: int = 500
    r: Optional[int] = None
    theta: float = 5.0
    seed: int = 0
    pointcloud_path: Optional[str] = None

    def __post_init__(self):
        s = _STRUCTURE_ALIASES.get(self.structure, self.structure)
        if s not in STRUCTURES:
            raise InvalidConfig(f"unknown structure {self.structure!r}")
        object.__setattr__(self, "structure", s)
        r = self.r
        if r is None:
            r = {"gaussian-mixture": 5, "smiley": 2, "pointcloud": 3}[s]
        object.__setattr__(self, "r", int(r))
        if s == "smiley" and self.r != 2:
            raise InvalidConfig("smiley structure has r = 2")
        if s == "pointcloud" and self.r != 3:
            raise InvalidConfig("point clouds have r = 3")
        if s == "gaussian-mixture" and self.p < self.r + 1:
            raise InvalidConfig("gaussian-mixture needs p >= r + 1")
        if self.p < self.r:
            raise InvalidConfig("p must be at least r")
        if not self.theta >= 0 or not np.isfinite(self.theta):
            raise InvalidConfig("theta must be finite and >= 0")
        if self.n < 2:
            raise InvalidConfig("n must be >= 2")


def haar_rotation(p: int, seed) -> np.ndarray:
    """Haar-distributed rotation in SO(p) via sign-corrected QR of a Gaussian matrix."""
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    Q = Q * d
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def _noise(rng, shape):
    return rng.standard_normal(shape)


def _embed_plane(coords, p, rng):
    """Isometric embedding of r-dimensional coords into a random r-plane of R^p."""
    r = coords.shape[1]
    Q = haar_rotation(p, rng.integers(2**63))
    return coords @ Q[:, :r].T


def _rescale_to_diameter(X, theta):
    diam = float(pdist(X).max()) if X.shape[0] > 1 else 0.0
    if diam == 0.0:
        return np.zeros_like(X)
    return X * (theta / diam)


def gen_gaussian_mixture(cfg: SceneConfig) -> SyntheticScene:
    """Point mixture on r+1 orthogonal vectors of length theta, plus N(0, I) noise."""
    if cfg.structure != "gaussian-mixture":
        raise InvalidConfig("config is not a gaussian-mixture scene")
    k = cfg.r + 1
    if cfg.n < 2 * k:
        raise InvalidConfig(f"need n >= {2 * k} so every cluster has two members")
    rng = np.random.default_rng([cfg.seed, 0])
    Q = haar_rotation(cfg.p, rng.integers(2**63))
    centers = cfg.theta * Q[:, :k].T
    while True:
        labels = rng.integers(0, k, size=cfg.n)
        if np.bincount(labels, minlength=k).min() >= 2:
            break
    signals = centers[labels]
    data = signals + _noise(rng, (cfg.n, cfg.p))
    return SyntheticScene(signals, data, cfg.theta, cfg.r, cfg.seed, labels=labels,
                          structure=cfg.structure)


def smiley_points(n: int, rng, weights=SMILEY_WEIGHTS):
    """Planar smiley: unit outline circle, two eye discs and a mouth arc.

    Component counts are deterministic in ``n``; returns ``(coords, labels)``.
    """
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    counts = np.floor(w * n).astype(int)
    counts[0] += n - counts.sum()
    parts, labels = [], []
    t = rng.uniform(0, 2 * np.pi, counts[0])
    parts.append(np.c_[np.cos(t), np.sin(t)])
    for eye, cx in ((1, -0.35), (2, 0.35)):
        rad = 0.12 * np.sqrt(rng.uniform(0, 1, counts[eye]))
        ang = rng.uniform(0, 2 * np.pi, counts[eye])
        parts.append(np.c_[cx + rad * np.cos(ang), 0.3 + rad * np.sin(ang)])
    t = rng.uniform(np.deg2rad(200), np.deg2rad(340), counts[3])
    parts.append(np.c_[0.55 * np.cos(t), 0.55 * np.sin(t)])
    for c, m in enumerate(counts):
        labels.append(np.full(m, c))
    coords = np.vstack(parts)
    labels = np.concatenate(labels)
    perm = rng.permutation(n)
    return coords[perm], labels[perm]


def gen_smiley(cfg: SceneConfig) -> SyntheticScene:
    if cfg.structure != "smiley":
        raise InvalidConfig("config is not a smiley scene")
    if cfg.n < 20:
        raise InvalidConfig("smiley needs n >= 20")
    rng = np.random.default_rng([cfg.seed, 1])
    coords, labels = smiley_points(cfg.n, rng)
    coords = _rescale_to_diameter(coords, cfg.theta)
    signals = _embed_plane(coords, cfg.p, rng)
    data = signals + _noise(rng, (cfg.n, cfg.p))
    return SyntheticScene(signals, data, cfg.theta, 2, cfg.seed, labels=labels, structure=cfg.structure)


def load_pointcloud(path) -> np.ndarray:
    """Read a whitespace-separated 3-column point file; ``#`` lines are comments."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise MalformedCloud(f"{path}:{lineno}: expected 3 values, got {len(parts)}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                raise MalformedCloud(f"{path}:{lineno}: non-numeric value") from None
    cloud = np.array(rows, dtype=np.float64).reshape(-1, 3)
    if not np.all(np.isfinite(cloud)):
        raise MalformedCloud(f"{path}: non-finite coordinates")
    return cloud


def bundled_pointcloud_path() -> str:
    return str(resources.files("metaviz") / "data" / "pointcloud_standin.txt")


def gen_from_pointcloud(cfg: SceneConfig) -> SyntheticScene:
    """Uniform subsample of a 3-D cloud, rescaled to diameter theta, rotated into R^p."""
    if cfg.structure != "pointcloud":
        raise InvalidConfig("config is not a pointcloud scene")
    path = cfg.pointcloud_path or bundled_pointcloud_path()
    cloud = load_pointcloud(path)
    if cloud.shape[0] < cfg.n:
        raise MalformedCloud(f"{path}: {cloud.shape[0]} points, need {cfg.n}")
    rng = np.random.default_rng([cfg.seed, 2])
    idx = np.sort(rng.choice(cloud.shape[0], size=cfg.n, replace=False))
    coords = cloud[idx] - cloud[idx].mean(axis=0)
    coords = _rescale_to_diameter(coords, cfg.theta)
    signals = _embed_plane(coords, cfg.p, rng)
    data = signals + _noise(rng, (cfg.n, cfg.p))
    return SyntheticScene(signals, data, cfg.theta, 3, cfg.seed, structure=cfg.structure)


def generate(cfg: SceneConfig) -> SyntheticScene:
    return {
        "gaussian-mixture": gen_gaussian_mixture,
        "smiley": gen_smiley,
        "pointcloud": gen_from_pointcloud,
    }[cfg.structure](cfg)


def ground_truth(scene_or_signals) -> GroundTruthDistance:
    """Distances among the noiseless signals and their row-normalized form."""
    Y = getattr(scene_or_signals, "signals", scene_or_signals)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    n = Y.shape[0]
    raw = np.empty((n, n))
    normalized = np.empty((n, n))
    deg = np.zeros(n, dtype=bool)
    be = kernels.backend
    for i in range(n):
        raw[i] = be.distance_row(Y, i)
        normalized[i], nrm = be.normalize_vector(raw[i])
        deg[i] = nrm == 0.0
    return GroundTruthDistance(raw, normalized, deg)


@dataclass(frozen=True)
class DistortedCandidates:
    """Raw candidate rows ``rows[i, k]`` for every sample i and candidate k."""

    rows: np.ndarray
    model: DistortionModel
    truth: GroundTruthDistance
    seed: int

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def K(self) -> int:
        return self.rows.shape[1]

    def realized_distortion(self, i: int) -> np.ndarray:
        """The K x n distortion block ``h`` drawn for sample ``i`` (regenerated from the seed)."""
        return _distortion_block(self.model, self.truth.n, i, self.seed)


def _sqrt_psd(R):
    w, V = np.linalg.eigh(R)
    return V * np.sqrt(np.clip(w, 0.0, None))


def _distortion_block(model: DistortionModel, n: int, i: int, seed) -> np.ndarray:
    # one stream per (seed, sample, candidate) so blocks can be generated in any order
    K = model.K
    Z = np.empty((K, n))
    for k in range(K):
        Z[k] = np.random.default_rng([seed, i, k]).standard_normal(n)
    H = model.sigma * (_sqrt_psd(model.correlation) @ Z)
    H[:, i] = 0.0
    return H


def _adversarial_row(truth_row, i, seed, k):
    g = np.random.default_rng([seed, i, k, 1]).standard_normal(truth_row.shape[0])
    g[i] = 0.0
    nrm = np.linalg.norm(truth_row)
    if nrm == 0.0:
        return np.zeros_like(g)
    u = truth_row / nrm
    resid = g - (g @ u) * u
    resid -= (resid @ u) * u
    return resid * (nrm / np.linalg.norm(resid))


def iter_distorted_rows(truth: GroundTruthDistance, model: DistortionModel, seed, clamp: bool = False):
    """Yield ``(i, rows_i)`` with the K x n raw candidate rows of each sample in turn.

    Only one sample's block is held at a time; the output matches
    :func:`gen_distorted_candidates` exactly.
    """
    n = truth.n
    if model.scales.shape[0] != n:
        raise InvalidModel(f"scales has {model.scales.shape[0]} rows for {n} samples")
    K = model.K
    good = K - model.adversarial_count
    for i in range(n):
        H = _distortion_block(model, n, i, seed)
        Pi = truth.raw[i]
        rows = np.empty((K, n))
        rows[:good] = model.scales[i, :good, None] * (Pi[None, :] + H[:good])
        for k in range(good, K):
            rows[k] = _adversarial_row(Pi, i, seed, k)
        if clamp:
            np.maximum(rows, 0.0, out=rows)
        yield i, rows


def gen_distorted_candidates(truth: GroundTruthDistance, model: DistortionModel, seed,
                             clamp: bool = False) -> DistortedCandidates:
    """Rows ``c[i, k] (P*[i] + h_k[i])`` for good candidates; adversaries orthogonal to ``P*[i]``.

    Each ``h[:, i]`` block is Gaussian with cross-candidate correlation R and
    scale sigma, and is zero at the sample's own index so self-distances stay
    zero. Rows may have negative entries; ``clamp=True`` clips them at zero.
    """
    rows = np.empty((truth.n, model.K, truth.n))
    for i, block in iter_distorted_rows(truth, model, seed, clamp):
        rows[i] = block
    return DistortedCandidates(rows, model, truth, seed)


def true_concordance(candidate_rows, truth_row) -> np.ndarray:
    """Inner products of the K candidate rows, rescaled to unit norm, with the normalized truth row.

    An all-zero candidate row has concordance 0.
    """
    t = np.asarray(truth_row, dtype=np.float64)
    if not np.any(t != 0):
        raise DegenerateTruth("truth row is all zero")
    R = np.stack([getattr(r, "values", r) for r in candidate_rows]) if not isinstance(
        candidate_rows, np.ndarray) else np.atleast_2d(candidate_rows)
    R = np.asarray(R, dtype=np.float64)
    nrm = np.linalg.norm(R, axis=1)
    return (R @ t) / np.where(nrm > 0, nrm, 1.0)


def snr_ratio(truth: GroundTruthDistance, sigma: float) -> np.ndarray:
    """Per-sample ||P*[i]|| / (sigma sqrt(n))."""
    return np.linalg.norm(truth.raw, axis=1) / (sigma * np.sqrt(truth.n))
