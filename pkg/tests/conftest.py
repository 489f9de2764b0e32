import sys

import numpy as np
import pytest

from metaviz import kernels
from metaviz.model import CandidateSet, Embedding


@pytest.fixture(params=kernels.available())
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    be = kernels.get(request.param)
    monkeypatch.setattr(kernels, "backend", be)
    return be


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_set(rng, n=30, K=4, d=2, noise=0.5):
    base = rng.standard_normal((n, d))
    return CandidateSet(tuple(
        Embedding(f"c{k}", base + noise * rng.standard_normal((n, d))) for k in range(K)
    ))


def dense_normalized(X):
    """Brute-force row-normalized distance matrix (independent oracle)."""
    n = X.shape[0]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            D[i, j] = np.sqrt(np.sum((X[i] - X[j]) ** 2))
    nrm = np.linalg.norm(D, axis=1, keepdims=True)
    return np.divide(D, nrm, out=np.zeros_like(D), where=nrm > 0)


def similarity(X, angle=0.7, scale=3.5, shift=(4.0, -2.0), reflect=False):
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    if reflect:
        R = R @ np.diag([1.0, -1.0])
    return scale * X @ R.T + np.asarray(shift)


def pytest_terminal_summary(terminalreporter):
    """Recap the acceptance lines (one per criterion) at the end of the run."""
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
