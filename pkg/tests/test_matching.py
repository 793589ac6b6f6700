"""Matching engine vs exhaustive double-loop oracles."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from embalign.errors import DimensionMismatch, EmptyTargets, KTooLarge, ZeroNormWarning
from embalign.matching import (
    CorrespondenceMap,
    avg_knn_cosine,
    csls_match,
    nearest_neighbors,
    rank_by_metric,
    reciprocal_pairs,
)

from oracles import avg_knn_cosine_oracle, csls_oracle, nn_oracle


def test_nn_self_match_is_identity():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(15, 4))
    assert np.array_equal(
        nearest_neighbors(pts, pts), np.arange(15)
    )


def test_nn_small_arithmetic_case():
    out = nearest_neighbors(
        np.array([[0.0, 0.0]]), np.array([[1.0, 0.0], [0.0, 2.0]])
    )
    assert np.array_equal(out, [0])


def test_nn_tie_breaks_to_lowest_index():
    targets = np.array([[1.0, 0.0], [1.0, 0.0], [5.0, 5.0]])
    out = nearest_neighbors(np.array([[1.0, 0.0]]), targets)
    assert out[0] == 0


def test_nn_matches_oracle_on_random_instances():
    rng = np.random.default_rng(1)
    for _ in range(6):
        q = rng.normal(size=(rng.integers(1, 60), 7))
        t = rng.normal(size=(rng.integers(1, 40), 7))
        assert np.array_equal(nearest_neighbors(q, t), nn_oracle(q, t))
        assert np.array_equal(
            nearest_neighbors(q, t, metric="cosine"),
            nn_oracle(q, t, metric="cosine"),
        )


def test_nn_errors():
    with pytest.raises(EmptyTargets):
        nearest_neighbors(np.zeros((2, 3)), np.zeros((0, 3)))
    with pytest.raises(DimensionMismatch):
        nearest_neighbors(np.zeros((2, 3)), np.zeros((2, 4)))
    with pytest.raises(ValueError):
        nearest_neighbors(np.zeros((2, 3)), np.ones((2, 3)), metric="manhattan")


@settings(max_examples=60, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 4)),
           elements=st.integers(-50, 50).map(float)),
    arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 4)),
           elements=st.integers(-50, 50).map(float)),
)
def test_nn_property_equals_oracle_on_integer_grids(q, t):
    # integer-valued coordinates keep every distance computation exact, so
    # the blocked implementation and the double loop must agree on indices
    if q.shape[1] != t.shape[1]:
        d = min(q.shape[1], t.shape[1])
        q, t = q[:, :d], t[:, :d]
    assert np.array_equal(nearest_neighbors(q, t), nn_oracle(q, t))


def test_reciprocal_identity():
    cmap = CorrespondenceMap(f_x=np.array([0, 1]), f_y=np.array([0, 1]))
    assert reciprocal_pairs(cmap).as_tuples() == [(0, 0), (1, 1)]


def test_reciprocal_swap():
    cmap = CorrespondenceMap(f_x=np.array([1, 0]), f_y=np.array([1, 0]))
    assert reciprocal_pairs(cmap).as_tuples() == [(0, 1), (1, 0)]


def test_reciprocal_one_sided_excluded():
    cmap = CorrespondenceMap(f_x=np.array([0, 0]), f_y=np.array([0, 1]))
    assert reciprocal_pairs(cmap).as_tuples() == [(0, 0)]


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_reciprocal_property_definition(data):
    n = data.draw(st.integers(1, 10))
    m = data.draw(st.integers(1, 10))
    f_x = np.array(data.draw(st.lists(st.integers(0, m - 1), min_size=n, max_size=n)))
    f_y = np.array(data.draw(st.lists(st.integers(0, n - 1), min_size=m, max_size=m)))
    pairs = reciprocal_pairs(CorrespondenceMap(f_y=f_y, f_x=f_x))
    assert len(pairs) <= min(n, m)
    seen = set()
    for i, j in pairs.as_tuples():
        assert f_x[i] == j and f_y[j] == i
        assert (i, j) not in seen
        seen.add((i, j))
    # every mutual pair is present
    for i in range(n):
        if f_y[f_x[i]] == i:
            assert (i, int(f_x[i])) in seen


def test_avg_knn_all_targets_same_direction():
    q = np.array([[1.0, 1.0]])
    t = np.vstack([[2.0, 2.0], [0.5, 0.5], [3.0, 3.0]])
    for k in (1, 2, 3):
        assert avg_knn_cosine(q, t, k) == pytest.approx(1.0)


def test_avg_knn_orthogonal_targets():
    q = np.array([[1.0, 0.0, 0.0]])
    t = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert avg_knn_cosine(q, t, 2)[0] == pytest.approx(0.0)


def test_avg_knn_matches_oracle():
    rng = np.random.default_rng(2)
    q = rng.normal(size=(50, 10))
    t = rng.normal(size=(60, 10))
    got = avg_knn_cosine(q, t, 10)
    want = avg_knn_cosine_oracle(q, t, 10)
    assert np.max(np.abs(got - want)) < 1e-10


def test_avg_knn_k_too_large():
    with pytest.raises(KTooLarge):
        avg_knn_cosine(np.ones((2, 2)), np.ones((3, 2)), k=4)


def test_avg_knn_zero_norm_row_scores_zero_with_warning():
    q = np.array([[0.0, 0.0], [1.0, 0.0]])
    t = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.warns(ZeroNormWarning):
        r = avg_knn_cosine(q, t, 1)
    assert r[0] == 0.0
    assert r[1] == pytest.approx(1.0)


def test_csls_reduces_to_cosine_when_r_terms_constant():
    # all targets share one direction, so r(q) and r(y) are constant shifts
    q = np.array([[1.0, 0.2], [0.3, 1.0]])
    t = np.array([[2.0, 0.0], [4.0, 0.0], [1.0, 0.0]])
    idx, _ = csls_match(q, t, k=3)
    cos_idx = nearest_neighbors(q, t, metric="cosine")
    assert np.array_equal(idx, cos_idx)


def test_csls_hand_computed_two_targets():
    # q = (1, 0); y0 = (1, 0), y1 = (1, 1)/sqrt2; k = 1
    # cos(q,y0)=1, cos(q,y1)=0.70711 -> r(q)=1 (nearest is y0)
    # r(y0): nearest mapped query is q -> 1; r(y1): nearest is q -> 0.70711
    # score0 = 2*1 - 1 - 1 = 0
    # score1 = 2*0.70711 - 1 - 0.70711 = -0.29289
    q = np.array([[1.0, 0.0]])
    t = np.array([[1.0, 0.0], [1.0, 1.0]])
    idx, score = csls_match(q, t, k=1)
    assert idx[0] == 0
    assert score[0] == pytest.approx(0.0, abs=1e-12)
    s1 = 2 * np.cos(np.pi / 4) - 1.0 - np.cos(np.pi / 4)
    assert s1 == pytest.approx(2**0.5 - 1 - 2**-0.5)


def test_csls_matches_oracle():
    rng = np.random.default_rng(3)
    q = rng.normal(size=(25, 6))
    t = rng.normal(size=(18, 6))
    idx, score = csls_match(q, t, k=5)
    oidx, oscore = csls_oracle(q, t, k=5)
    assert np.array_equal(idx, oidx)
    assert np.max(np.abs(score - oscore)) < 1e-10


def test_csls_invariant_under_row_rescaling():
    rng = np.random.default_rng(4)
    q = rng.normal(size=(10, 5))
    t = rng.normal(size=(12, 5))
    idx_before, _ = csls_match(q, t, k=3)
    t2 = t.copy()
    t2[4] *= 7.3
    idx_after, _ = csls_match(q, t2, k=3)
    assert np.array_equal(idx_before, idx_after)
    q2 = q.copy()
    q2[2] *= 7.3
    idx_q, _ = csls_match(q2, t, k=3)
    assert np.array_equal(idx_before, idx_q)


def test_csls_accuracy_at_least_nn_on_synthetic_clouds():
    # aligned clouds with deliberate hubs: targets sitting near the global
    # centroid attract plain-NN matches, CSLS discounts them
    rng = np.random.default_rng(1)
    n, d = 80, 8
    t = rng.normal(size=(n, d))
    centroid = t.mean(axis=0)
    for h in range(5):
        t[h] = centroid * (1.5 + 0.1 * h) + 0.05 * rng.normal(size=d)
    q = t + 0.35 * rng.normal(size=(n, d))
    nn_idx = nearest_neighbors(q, t, metric="cosine")
    csls_idx, _ = csls_match(q, t, k=10)
    truth = np.arange(n)
    assert (csls_idx == truth).mean() >= (nn_idx == truth).mean()


def test_rank_by_metric_top1_consistency():
    rng = np.random.default_rng(6)
    q = rng.normal(size=(20, 5))
    t = rng.normal(size=(30, 5))
    ranked = rank_by_metric(q, t, "nn", top_k=3)
    assert np.array_equal(ranked[:, 0], nearest_neighbors(q, t, metric="cosine"))
    ranked_csls, scores = rank_by_metric(q, t, "csls", top_k=4, return_scores=True)
    idx, best = csls_match(q, t, k=10)
    assert np.array_equal(ranked_csls[:, 0], idx)
    assert np.max(np.abs(scores[:, 0] - best)) < 1e-12
    # scores are non-increasing along each row
    assert (np.diff(scores, axis=1) <= 1e-12).all()
