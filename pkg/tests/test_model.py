import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metaviz.errors import (
    DuplicateName,
    EmptySet,
    InvalidModel,
    MismatchedSampleCount,
    NonFiniteCoordinate,
    TooFewSamples,
    ValidationError,
)
from metaviz.model import (
    CandidateSet,
    DistortionModel,
    Embedding,
    EigenscoreMatrix,
    GroundTruthDistance,
    MetaDistance,
    SyntheticScene,
    block_correlation,
    validate_candidate_set,
)


def test_accepts_matching_sets(rng):
    cs = validate_candidate_set([Embedding("a", rng.standard_normal((100, 2))),
                                 Embedding("b", rng.standard_normal((100, 2)))])
    assert cs.n == 100 and cs.K == 2 and cs.names == ["a", "b"]


def test_mismatched_sample_count(rng):
    with pytest.raises(MismatchedSampleCount):
        validate_candidate_set([Embedding("a", rng.standard_normal((100, 2))),
                                Embedding("b", rng.standard_normal((99, 2)))])


def test_non_finite_coordinate():
    X = np.zeros((5, 2))
    X[2, 1] = np.nan
    with pytest.raises(NonFiniteCoordinate):
        Embedding("a", X)


def test_all_violations_reported(rng):
    a = Embedding("a", rng.standard_normal((10, 2)))
    with pytest.raises(ValidationError) as exc:
        validate_candidate_set([a, Embedding("a", rng.standard_normal((9, 2)))])
    assert len(exc.value.violations) == 2


def test_duplicate_and_empty(rng):
    a = Embedding("a", rng.standard_normal((10, 2)))
    with pytest.raises(DuplicateName):
        CandidateSet((a, a))
    with pytest.raises(EmptySet):
        CandidateSet(())
    with pytest.raises(TooFewSamples):
        Embedding("x", np.zeros((1, 2)))


def test_embeddings_are_immutable(rng):
    X = rng.standard_normal((6, 3))
    e = Embedding("a", X)
    X[0, 0] = 99.0
    assert e.coords[0, 0] != 99.0
    with pytest.raises(ValueError):
        e.coords[0, 0] = 1.0


def test_stacked_pads_mixed_dimensions(rng):
    cs = CandidateSet((Embedding("a", rng.standard_normal((5, 2))), Embedding("b", rng.standard_normal((5, 3)))))
    C = cs.stacked()
    assert C.shape == (2, 5, 3)
    assert np.all(C[0, :, 2] == 0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 6), d=st.integers(1, 3), bad=st.sampled_from([None, np.inf, -np.inf, np.nan]))
def test_embedding_invariants_property(n, d, bad):
    X = np.arange(n * d, dtype=float).reshape(n, d)
    if bad is not None:
        X[-1, -1] = bad
    ok = n >= 2 and bad is None
    if ok:
        assert Embedding("e", X).n == n
    else:
        with pytest.raises(ValidationError):
            Embedding("e", X)


def test_eigenscore_matrix_invariants():
    s = np.full((3, 2), 1 / np.sqrt(2))
    em = EigenscoreMatrix(s, np.ones(3), np.ones(3, int), np.zeros(3, np.int8))
    assert em.n == 3 and em.K == 2
    with pytest.raises(ValidationError):
        EigenscoreMatrix(-s, np.ones(3), np.ones(3, int), np.zeros(3, np.int8))
    with pytest.raises(ValidationError):
        EigenscoreMatrix(2 * s, np.ones(3), np.ones(3, int), np.zeros(3, np.int8))


def test_meta_distance_invariants():
    MetaDistance(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValidationError):
        MetaDistance(np.array([[0.0, 1.0], [2.0, 0.0]]), symmetrized=True)


def test_ground_truth_and_scene():
    Y = np.array([[0.0, 0.0], [3.0, 4.0], [0.0, 4.0]])
    from metaviz.simulation import ground_truth
    g = ground_truth(Y)
    assert isinstance(g, GroundTruthDistance)
    assert g.raw[0, 1] == 5.0
    np.testing.assert_allclose(np.linalg.norm(g.normalized, axis=1), 1.0, atol=1e-12)
    with pytest.raises(ValidationError):
        SyntheticScene(Y, Y, 1.0, 2, 0, labels=np.array([0, 0, 1]))
    sc = SyntheticScene(Y, Y + 1.0, 1.0, 2, 0)
    np.testing.assert_array_equal(sc.noise, np.ones_like(Y))


def test_distortion_model_validation():
    R = block_correlation(6, 3, 0.5)
    m = DistortionModel.build(10, 6, sigma=1.0, correlation=R)
    assert m.K == 6
    assert m.rho == pytest.approx(2.0)
    assert m.rho <= m.K
    bad = R.copy()
    bad[0, 0] = 2.0
    with pytest.raises(InvalidModel):
        DistortionModel.build(10, 6, correlation=bad)
    with pytest.raises(InvalidModel):
        DistortionModel.build(10, 2, correlation=np.array([[1.0, 2.0], [2.0, 1.0]]))  # not PSD
    with pytest.raises(InvalidModel):
        DistortionModel.build(10, 3, scales=np.array([1.0, 0.0, 1.0]))
    with pytest.raises(InvalidModel):
        DistortionModel.build(10, 3, adversarial_count=3)


def test_permutation_equivariance(rng):
    from metaviz import geometry

    cs = CandidateSet((Embedding("a", rng.standard_normal((12, 2))),))
    perm = rng.permutation(12)
    P = geometry.full_normalized_matrix(cs[0])
    Pp = geometry.full_normalized_matrix(cs.permuted(perm)[0])
    np.testing.assert_allclose(Pp, P[np.ix_(perm, perm)], atol=1e-15)
