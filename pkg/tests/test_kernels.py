import numpy as np
import pytest

from metaviz import _pykernels, kernels

from conftest import dense_normalized

needs_compiled = pytest.mark.skipif(kernels.compiled_backend is None, reason="compiled kernels not built")


def _stack(rng, n=60, K=5, d=2):
    base = rng.standard_normal((n, d))
    return np.stack([base + 0.4 * rng.standard_normal((n, d)) for _ in range(K)])


def test_get_and_available():
    assert kernels.get("python") is _pykernels
    assert kernels.get() is kernels.backend
    assert "python" in kernels.available()
    with pytest.raises(ValueError):
        kernels.get("fortran")


def test_normalized_matrix_matches_oracle(backend, rng):
    X = rng.standard_normal((25, 3))
    np.testing.assert_allclose(backend.normalized_matrix(X, 1), dense_normalized(X), rtol=0, atol=1e-14)


def test_jacobi_matches_numpy(backend, rng):
    A = rng.standard_normal((6, 6))
    G = A @ A.T
    w, V = backend.jacobi_eigh(G)
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(G), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(V.T @ V, np.eye(6), atol=1e-12)
    np.testing.assert_allclose(G @ V, V * w, atol=1e-10)


def test_power_iteration_matches_numpy(backend, rng):
    A = np.abs(rng.standard_normal((5, 5)))
    G = A @ A.T
    lam, u, it, status, res = backend.leading_eigenpair(G)
    w, V = np.linalg.eigh(G)
    assert status in (0, 1)
    assert abs(lam - w[-1]) <= 1e-10 * w[-1]
    np.testing.assert_allclose(np.abs(u), np.abs(V[:, -1]), atol=1e-9)


def test_zero_gram_gives_uniform(backend):
    lam, u, it, status, res = backend.leading_eigenpair(np.zeros((4, 4)))
    assert status == 2 and lam == 0.0
    np.testing.assert_allclose(u, np.full(4, 0.5))


@pytest.mark.parametrize("threads", [1, 2, 3, 8])
def test_threads_do_not_change_bits(backend, rng, threads):
    C = _stack(rng)
    ref = backend.score_samples(C, 1, True)
    out = backend.score_samples(C, threads, True)
    for a, b in zip(ref, out):
        assert np.asarray(a).tobytes() == np.asarray(b).tobytes()


@needs_compiled
def test_backends_bit_identical(rng):
    C = _stack(rng, n=80, K=6)
    a = kernels.compiled_backend.score_samples(C, 2, True)
    b = _pykernels.score_samples(C, 1, True)
    for x, y in zip(a, b):
        assert np.asarray(x).tobytes() == np.asarray(y).tobytes()
    W = np.abs(rng.standard_normal((80, 6)))
    assert (kernels.compiled_backend.weighted_meta(C, W, 2).tobytes()
            == _pykernels.weighted_meta(C, W, 1).tobytes())
    assert (kernels.compiled_backend.normalized_matrix(C[0], 2).tobytes()
            == _pykernels.normalized_matrix(C[0], 1).tobytes())


@needs_compiled
def test_backends_agree_on_eigensolvers(rng):
    A = rng.standard_normal((7, 7))
    G = A @ A.T
    for x, y in zip(kernels.compiled_backend.jacobi_eigh(G), _pykernels.jacobi_eigh(G)):
        assert np.asarray(x).tobytes() == np.asarray(y).tobytes()
    for x, y in zip(kernels.compiled_backend.leading_eigenpair(G), _pykernels.leading_eigenpair(G)):
        assert np.asarray(x).tobytes() == np.asarray(y).tobytes()


def test_score_stack_handles_negative_rows(backend, rng):
    S = rng.standard_normal((4, 30))
    s, lam, it, st, normed, norms = backend.score_stack(S)
    np.testing.assert_allclose(norms, np.linalg.norm(S, axis=1))
    np.testing.assert_allclose(normed, S / norms[:, None], atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(s), 1.0, atol=1e-12)
