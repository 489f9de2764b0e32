import warnings

import numpy as np
import pytest

from metaviz import spectral
from metaviz.errors import DegenerateSampleWarning, LengthMismatch, MixedSampleIndex
from metaviz.geometry import full_normalized_matrix, normalize_row
from metaviz.model import CandidateSet, DistortionModel, Embedding, NormalizedDistanceRow
from metaviz.simulation import SceneConfig, gen_distorted_candidates, generate, ground_truth, true_concordance

from conftest import dense_normalized, random_set, similarity


def _row(values, sample=0):
    v = np.asarray(values, dtype=float)
    return NormalizedDistanceRow(sample, v, not np.any(v))


def test_gram_examples(backend):
    r = _row([0.0, 0.6, 0.8])
    np.testing.assert_allclose(spectral.gram_matrix([r, r, r]).entries, np.ones((3, 3)), atol=1e-15)
    a, b = _row([0.0, 1.0, 0.0]), _row([0.0, 0.0, 1.0])
    np.testing.assert_array_equal(spectral.gram_matrix([a, b]).entries, np.eye(2))
    h = np.sqrt(0.5)
    G = spectral.gram_matrix([_row([1.0, 0.0, 0.0], 2), _row([h, h, 0.0], 2)]).entries
    np.testing.assert_allclose(G, [[1, 0.70710678], [0.70710678, 1]], atol=1e-8)


def test_gram_rejects_mixed_rows():
    with pytest.raises(MixedSampleIndex):
        spectral.gram_matrix([_row([0, 1.0], 0), _row([1.0, 0], 1)])
    with pytest.raises(LengthMismatch):
        spectral.gram_matrix([_row([0, 1.0]), _row([0, 0.6, 0.8])])
    with pytest.raises(LengthMismatch):
        spectral.gram_matrix([])


def test_leading_eigenpair_examples(backend):
    lam, u, rep = spectral.leading_eigenpair(np.ones((3, 3)))
    assert abs(lam - 3) < 1e-12
    np.testing.assert_allclose(u, np.full(3, 1 / np.sqrt(3)), atol=1e-12)
    assert rep.converged and not rep.degenerate_gap
    lam, u, rep = spectral.leading_eigenpair(np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert abs(lam - 1.5) < 1e-12
    np.testing.assert_allclose(u, np.full(2, 1 / np.sqrt(2)), atol=1e-12)
    lam, u, rep = spectral.leading_eigenpair(np.eye(4))
    assert abs(lam - 1) < 1e-12 and rep.degenerate_gap
    np.testing.assert_allclose(u, np.full(4, 0.5), atol=1e-12)
    assert rep.residual <= 1e-10 * max(lam, 1)


def test_eigenscores_single_and_identical(backend):
    np.testing.assert_allclose(spectral.eigenscores_for_sample(np.ones((1, 1))), [1.0])
    np.testing.assert_allclose(spectral.eigenscores_for_sample(np.ones((5, 5))), np.full(5, 1 / np.sqrt(5)), atol=1e-12)


def test_all_degenerate_sample_warns(backend):
    with pytest.warns(DegenerateSampleWarning):
        s = spectral.eigenscores_for_sample(np.zeros((3, 3)))
    np.testing.assert_allclose(s, np.full(3, 1 / np.sqrt(3)))


def test_one_candidate_set_scores_one(backend, rng):
    cs = CandidateSet((Embedding("a", rng.standard_normal((15, 2))),))
    np.testing.assert_array_equal(spectral.eigenscore_matrix(cs).scores, np.ones((15, 1)))


def test_similarity_copy_gives_equal_scores(backend, rng):
    X = rng.standard_normal((25, 2))
    cs = CandidateSet((Embedding("a", X), Embedding("b", similarity(X))))
    np.testing.assert_allclose(spectral.eigenscore_matrix(cs).scores, 1 / np.sqrt(2), atol=1e-10)


def test_dense_oracle(backend, rng):
    cs = random_set(rng, n=30, K=4)
    mats = [dense_normalized(c.coords) for c in cs]
    S = spectral.eigenscore_matrix(cs).scores
    for i in range(30):
        R = np.stack([M[i] for M in mats])
        w, V = np.linalg.eigh(R @ R.T)
        np.testing.assert_allclose(S[i], np.abs(V[:, -1]), atol=1e-10)


def test_invariance_under_similarity_of_one_candidate(backend, rng):
    cs = random_set(rng, n=30, K=4)
    moved = list(cs)
    moved[2] = Embedding(moved[2].name, similarity(moved[2].coords, angle=2.1, scale=0.3, reflect=True))
    a = spectral.eigenscore_matrix(cs).scores
    b = spectral.eigenscore_matrix(CandidateSet(tuple(moved))).scores
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_perron_positivity(backend, rng):
    cs = random_set(rng, n=20, K=5)
    for i in range(20):
        rows = [normalize_row(full_normalized_matrix(c)[i]) for c in cs]
        G = spectral.gram_matrix(rows)
        _, u, rep = spectral.leading_eigenpair(G)
        assert np.all(u > 0) and not rep.degenerate_gap


def test_pc_identity(backend, rng):
    cs = random_set(rng, n=40, K=6)
    S, meta = spectral.score_and_fuse(cs)
    mats = [full_normalized_matrix(c) for c in cs]
    for i in range(40):
        R = np.stack([M[i] for M in mats]).T  # n x K row-stack
        _, _, Vt = np.linalg.svd(R, full_matrices=False)
        v = np.abs(Vt[0])
        np.testing.assert_allclose(meta.rows[i], R @ v, atol=1e-9)


def test_score_and_fuse_matches_two_step(backend, rng):
    from metaviz.fusion import spectral_meta_distance

    cs = random_set(rng, n=35, K=3)
    S, meta = spectral.score_and_fuse(cs)
    S2 = spectral.eigenscore_matrix(cs)
    assert S.scores.tobytes() == S2.scores.tobytes()
    assert meta.rows.tobytes() == spectral_meta_distance(cs, S2).rows.tobytes()


def test_matrices_path_equals_coordinate_path(backend, rng):
    from metaviz.geometry import full_distance_matrix

    cs = random_set(rng, n=30, K=4)
    S, meta = spectral.score_and_fuse(cs)
    S2, meta2 = spectral.score_and_fuse_matrices([full_distance_matrix(c) for c in cs])
    np.testing.assert_allclose(S2.scores, S.scores, atol=1e-12)
    np.testing.assert_allclose(meta2.rows, meta.rows, atol=1e-12)


def test_high_snr_scores_track_true_concordance(backend):
    scene = generate(SceneConfig("gaussian-mixture", n=200, p=60, theta=8.0, seed=3))
    truth = ground_truth(scene)
    rng = np.random.default_rng(5)
    model = DistortionModel.build(200, 10, sigma=1.0, scales=rng.uniform(0.5, 2.0, (200, 10)))
    cands = gen_distorted_candidates(truth, model, seed=9)
    cos = []
    for i in range(200):
        s_hat, _, _ = spectral.eigenscores_from_rows(cands.rows[i])
        s = true_concordance(cands.rows[i], truth.normalized[i])
        cos.append(s_hat @ s / (np.linalg.norm(s_hat) * np.linalg.norm(s)))
    assert np.mean(cos) >= 0.99
