"""Monte Carlo harnesses behind the consistency and robustness checks.

``model_trial`` runs the scaled signal-plus-noise candidate model on one scene
and reports, averaged over samples, the eigenscore cosine against the true
concordance and the concordance of the spectral and naive meta rows.
``embedding_trial`` does the same with real embedders on the noisy data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .embedders import EmbedderConfig, diverse_candidates, meta_embed
from .fusion import naive_meta_distance, symmetrize
from .geometry import full_normalized_matrix
from .metrics import mean_concordance, median_silhouette
from .model import DistortionModel, block_correlation
from .simulation import SceneConfig, generate, ground_truth, iter_distorted_rows
from .spectral import score_and_fuse

SCENES = {
    "gaussian-mixture": dict(n=900, p=500),
    "smiley": dict(n=500, p=300),
    "pointcloud": dict(n=500, p=300),
}


@dataclass(frozen=True)
class ModelTrial:
    theta: float
    seed: int
    score_cosine: float  # mean over samples of cos(s_hat_i, s_i)
    spectral_concordance: float
    naive_concordance: float
    best_candidate_concordance: float
    snr: float  # median ||P*_i|| / (sigma sqrt(n))


def _unit(v):
    nrm = np.linalg.norm(v)
    return v / nrm if nrm > 0 else v


def model_trial(scene_cfg: SceneConfig, K: int = 16, sigma: float = 1.0, block_size: int = 4,
                block_rho: float = 0.5, adversarial_count: int = 0, scale_range=(0.5, 2.0),
                seed: int = 0, correlation=None) -> ModelTrial:
    """One draw of the candidate model over the scene's noiseless signals.

    Per-sample scales ``c[i, k]`` are uniform on ``scale_range``. Samples
    with a degenerate truth row are skipped.
    """
    scene = generate(scene_cfg)
    truth = ground_truth(scene)
    n = truth.n
    rng = np.random.default_rng([seed, 7])
    lo, hi = scale_range
    scales = rng.uniform(lo, hi, size=(n, K))
    R = block_correlation(K, block_size, block_rho) if correlation is None else correlation
    model = DistortionModel(sigma, R, scales, adversarial_count)
    be = kernels.backend
    cos_s, spec, naive, per_cand = [], [], [], []
    for i, rows in iter_distorted_rows(truth, model, [seed, 11]):
        if truth.degenerate[i]:
            continue
        s_hat, _, _, _, normed, _ = be.score_stack(rows)
        t = truth.normalized[i]
        s_true = normed @ t
        if np.any(s_true != 0):
            cos_s.append(float(_unit(s_hat) @ _unit(s_true)))
        spec.append(float(_unit(s_hat @ normed) @ t))
        naive.append(float(_unit(normed.mean(axis=0)) @ t))
        per_cand.append(s_true)
    snr = float(np.median(np.linalg.norm(truth.raw, axis=1)) / (sigma * np.sqrt(n))) if sigma > 0 else np.inf
    return ModelTrial(
        float(scene_cfg.theta),
        int(seed),
        float(np.mean(cos_s)),
        float(np.mean(spec)),
        float(np.mean(naive)),
        float(np.max(np.mean(per_cand, axis=0))),
        snr,
    )


def snr_sweep(structure: str, thetas, seeds, **kw) -> np.ndarray:
    """``model_trial`` over a theta grid and seeds; returns an array of ModelTrial (theta x seed)."""
    dims = SCENES[structure]
    out = np.empty((len(thetas), len(seeds)), dtype=object)
    for a, th in enumerate(thetas):
        for b, sd in enumerate(seeds):
            cfg = SceneConfig(structure, dims["n"], dims["p"], theta=float(th), seed=int(sd))
            out[a, b] = model_trial(cfg, seed=int(sd), **kw)
    return out


def count_inversions(values, tol: float) -> tuple:
    """Number of decreases along ``values`` and whether every one is at most ``tol``."""
    d = np.diff(np.asarray(values, dtype=float))
    bad = d[d < 0]
    return int(bad.size), bool(np.all(-bad <= tol))


def monotone_within(values, max_inversions: int = 1, tol: float = 0.002) -> bool:
    k, small = count_inversions(values, tol)
    return k == 0 or (k <= max_inversions and small)


@dataclass(frozen=True)
class EmbeddingTrial:
    seed: int
    candidate_concordance: dict
    spectral_concordance: float
    naive_concordance: float
    candidate_silhouette: Optional[dict] = None
    meta_silhouette: Optional[float] = None
    naive_silhouette: Optional[float] = None


def embedding_trial(scene_cfg: SceneConfig, dim: int = 2, pool=None, meta_method: str = "leim",
                    silhouettes: bool = False, threads=None) -> EmbeddingTrial:
    """Candidates from the native embedders on the noisy data, fused and evaluated against the truth."""
    scene = generate(scene_cfg)
    truth = ground_truth(scene)
    cands = diverse_candidates(scene.data, dim=dim, seed=scene_cfg.seed, pool=pool)
    _, meta = score_and_fuse(cands, threads)
    naive = naive_meta_distance(cands, threads)
    per = {}
    mats = {}
    for c in cands:
        P = full_normalized_matrix(c, threads)
        mats[c.name] = P
        per[c.name] = mean_concordance(P, truth)
    res = dict(
        seed=scene_cfg.seed,
        candidate_concordance=per,
        spectral_concordance=mean_concordance(meta, truth),
        naive_concordance=mean_concordance(naive, truth),
    )
    if silhouettes and scene.labels is not None:
        cfg = EmbedderConfig(meta_method, dim)
        lab = scene.labels
        res["candidate_silhouette"] = {nm: median_silhouette(P, lab) for nm, P in mats.items()}
        m_emb = meta_embed(symmetrize(meta), cfg, name="meta")
        n_emb = meta_embed(symmetrize(naive), cfg, name="naive")
        res["meta_silhouette"] = median_silhouette(full_normalized_matrix(m_emb, threads), lab)
        res["naive_silhouette"] = median_silhouette(full_normalized_matrix(n_emb, threads), lab)
    return EmbeddingTrial(**res)
