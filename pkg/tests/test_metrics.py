import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform
from sklearn.metrics import silhouette_samples

from metaviz import metrics as M
from metaviz.errors import (
    AllDegenerate,
    LengthMismatch,
    ModeMismatch,
    PointAtCenter,
    SingleCluster,
    SingletonCluster,
    ZeroVector,
)
from metaviz.simulation import ground_truth


def _circle(n, noise=0.0, seed=0):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    X = np.c_[np.cos(t), np.sin(t)]
    return X + noise * np.random.default_rng(seed).standard_normal(X.shape)


def test_cosine_examples():
    assert M.cosine([1, 2], [1, 2]) == pytest.approx(1.0)
    assert M.cosine([1, 0], [0, 3]) == 0.0
    assert M.cosine([1, 0], [1, 1]) == pytest.approx(0.70710678, abs=1e-8)
    with pytest.raises(ZeroVector):
        M.cosine([0, 0], [1, 1])
    with pytest.raises(LengthMismatch):
        M.cosine([1], [1, 1])


def test_concordance_examples(rng):
    X = rng.standard_normal((15, 2))
    t = ground_truth(X)
    assert M.mean_concordance(t.normalized, t) == pytest.approx(1.0)
    assert M.mean_concordance(3 * t.raw, t) == pytest.approx(1.0)
    R = rng.standard_normal((15, 15))
    oracle = np.mean([R[i] @ t.normalized[i] / np.linalg.norm(R[i]) for i in range(15)])
    assert M.mean_concordance(R, t) == pytest.approx(oracle, abs=1e-14)


def test_concordance_orthogonal_and_degenerate(rng):
    t = ground_truth(rng.standard_normal((10, 2)))
    G = rng.standard_normal((10, 10))
    rows = G - np.sum(G * t.normalized, axis=1, keepdims=True) * t.normalized
    assert abs(M.mean_concordance(rows, t)) < 1e-14
    flat = ground_truth(np.zeros((5, 2)))
    with pytest.raises(AllDegenerate):
        M.concordance_summary(np.ones((5, 5)), flat)


def test_silhouette_limiting_geometry():
    lab = np.array([0, 0, 0, 1, 1, 1])
    D = (lab[:, None] != lab[None, :]).astype(float)
    np.testing.assert_array_equal(M.silhouette(D, lab), 1.0)


def test_silhouette_matches_sklearn(rng):
    X = rng.standard_normal((40, 3))
    lab = rng.integers(0, 3, 40)
    D = squareform(pdist(X))
    np.testing.assert_allclose(M.silhouette(D, lab), silhouette_samples(D, lab, metric="precomputed"), atol=1e-12)


def test_silhouette_invariances(rng):
    D = squareform(pdist(rng.standard_normal((30, 2))))
    lab = rng.integers(0, 3, 30)
    si = M.silhouette(D, lab)
    assert np.all((si > -1) & (si < 1))
    np.testing.assert_allclose(M.silhouette(4.5 * D, lab), si, atol=1e-12)
    np.testing.assert_allclose(M.silhouette(D, (lab + 7) * 3), si, atol=1e-12)


def test_silhouette_random_labels_null():
    X = _circle(200)
    D = squareform(pdist(X))
    means = [np.mean(M.silhouette(D, np.random.default_rng(s).permutation(np.arange(200) % 2))) for s in range(30)]
    se = np.std(means) / np.sqrt(len(means))
    assert abs(np.mean(means)) < max(3 * se, 0.01)


def test_silhouette_errors():
    D = np.ones((4, 4)) - np.eye(4)
    with pytest.raises(SingleCluster):
        M.silhouette(D, [0, 0, 0, 0])
    with pytest.raises(SingletonCluster):
        M.silhouette(D, [0, 0, 0, 1])


def test_kendall_examples():
    assert M.kendall_tau([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0
    assert M.kendall_tau([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    assert M.kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3)


def test_kendall_symmetry_and_monotone_invariance(rng):
    a, b = rng.standard_normal(25), rng.standard_normal(25)
    assert M.kendall_tau(a, b) == pytest.approx(M.kendall_tau(b, a))
    assert M.kendall_tau(np.exp(a), np.exp(b)) == pytest.approx(M.kendall_tau(a, b))


def test_circular_order_examples():
    X = _circle(12)
    o = M.circular_order(X).order
    assert np.all(np.diff(o) % 12 == 1)
    r = M.circular_order(X * np.array([1.0, -1.0])).order
    assert np.all(np.diff(r) % 12 == 11)


def test_circular_tau_noisy_circle():
    X = _circle(50, noise=0.05, seed=3)
    assert M.circular_tau(M.circular_order(X), np.arange(50)) >= 0.9


def test_circular_tau_alignment():
    truth = np.arange(20)
    ex = M.OrderExtraction("circular", truth)
    assert M.circular_tau(ex, truth) == 1.0
    assert M.circular_tau(M.OrderExtraction("circular", (truth + 7) % 20), truth) == 1.0


def test_circular_tau_random_null():
    vals = [M.circular_tau(M.OrderExtraction("circular", np.random.default_rng(s).permutation(30)), np.arange(30))
            for s in range(20)]
    assert np.mean(np.array(vals) <= 0.35) >= 0.9


def test_circular_tau_rigid_invariance(rng):
    X = _circle(40, noise=0.1, seed=1)
    base = M.circular_tau(M.circular_order(X), np.arange(40))
    c, s = np.cos(1.1), np.sin(1.1)
    for Y in (X @ np.array([[c, -s], [s, c]]).T, X * np.array([-1.0, 1.0])):
        assert M.circular_tau(M.circular_order(Y), np.arange(40)) == pytest.approx(base)


def test_point_at_center():
    X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(PointAtCenter):
        M.circular_order(X)
    assert M.circular_order(X, perturb=1e-6).order.shape == (3,)


def test_principal_examples():
    t = np.linspace(0, 1, 30)
    X = np.c_[t, 2 * t]
    assert M.principal_tau(M.principal_order(X), np.arange(30)) == 1.0
    assert M.principal_tau(M.principal_order(-X), np.arange(30)) == 1.0
    with pytest.raises(ModeMismatch):
        M.circular_tau(M.principal_order(X), np.arange(30))


def test_principal_noisy_trajectory():
    rng = np.random.default_rng(8)
    t = np.linspace(0, 1, 100)
    X = np.c_[t, 0.3 * np.sin(3 * t)] + 0.03 * rng.standard_normal((100, 2))
    assert M.principal_tau(M.principal_order(X), np.arange(100)) >= 0.8
