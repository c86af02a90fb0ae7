import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from policy_subspace.nn import MlpSpec, finite_diff_check
from policy_subspace.subspace import (AnchorSet, SimplexWeight, bezier3_weights, collapse_metrics,
                                      cosine_sq_penalty, grid_weights, mix_anchors,
                                      sample_simplex_weight, scalar_grid)

vectors = st.integers(2, 12).flatmap(
    lambda p: st.integers(2, 4).flatmap(
        lambda n: st.lists(st.lists(st.floats(-10, 10), min_size=p, max_size=p),
                           min_size=n, max_size=n)))


def test_simplex_weight_validation():
    SimplexWeight(np.array([0.2, 0.8]))
    for bad in ([0.5, 0.6], [-0.1, 1.1], [[0.5, 0.5]]):
        with pytest.raises(ValueError):
            SimplexWeight(np.array(bad))


def test_anchor_set_validation():
    with pytest.raises(ValueError):
        AnchorSet(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        AnchorSet(np.ones((2, 3)), "bezier3")
    with pytest.raises(ValueError):
        AnchorSet(np.ones((2, 3)), beta=-1.0)
    with pytest.raises(ValueError):
        AnchorSet(np.ones((2, 3)), "spline")


def test_mix_examples():
    s = AnchorSet(np.array([[2.0, 0.0], [0.0, 4.0]]))
    np.testing.assert_array_equal(mix_anchors(s, SimplexWeight(np.array([1.0, 0.0]))), [2.0, 0.0])
    np.testing.assert_array_equal(mix_anchors(s, SimplexWeight(np.array([0.5, 0.5]))), [1.0, 2.0])
    e = AnchorSet(np.eye(3))
    np.testing.assert_allclose(mix_anchors(e, SimplexWeight(np.full(3, 1 / 3))), np.full(3, 1 / 3),
                               rtol=0, atol=1e-16)
    with pytest.raises(ValueError):
        mix_anchors(e, SimplexWeight(np.array([0.5, 0.5])))


@given(vectors)
def test_vertex_identity(anchors):
    s = AnchorSet(np.array(anchors))
    for k in range(s.n):
        np.testing.assert_array_equal(mix_anchors(s, SimplexWeight(np.eye(s.n)[k])), s.anchors[k])


@given(st.lists(st.lists(st.floats(-10, 10), min_size=5, max_size=5), min_size=3, max_size=3))
def test_bezier_endpoints_hit_outer_anchors(anchors):
    s = AnchorSet(np.array(anchors), "bezier3")
    np.testing.assert_array_equal(mix_anchors(s, bezier3_weights(0.0)), s.anchors[0])
    np.testing.assert_array_equal(mix_anchors(s, bezier3_weights(1.0)), s.anchors[2])


@given(vectors, st.integers(0, 2**31 - 1), st.floats(0, 1))
def test_mixing_is_affine(anchors, seed, alpha):
    s = AnchorSet(np.array(anchors))
    rng = np.random.default_rng(seed)
    w1, w2 = rng.dirichlet(np.ones(s.n)), rng.dirichlet(np.ones(s.n))
    lhs = mix_anchors(s, alpha * w1 + (1 - alpha) * w2)
    rhs = alpha * mix_anchors(s, w1) + (1 - alpha) * mix_anchors(s, w2)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12 * max(1.0, np.abs(s.anchors).max()))


def test_bezier_weights_examples():
    np.testing.assert_array_equal(bezier3_weights(0.0).w, [1, 0, 0])
    np.testing.assert_array_equal(bezier3_weights(1.0).w, [0, 0, 1])
    np.testing.assert_array_equal(bezier3_weights(0.5).w, [0.25, 0.5, 0.25])
    for z in (-0.1, 1.5):
        with pytest.raises(ValueError):
            bezier3_weights(z)


@given(st.floats(0, 1))
def test_bezier_weights_sum_to_one(z):
    assert abs(bezier3_weights(z).w.sum() - 1.0) <= 1e-15


def test_sampled_line_weights():
    rng = np.random.default_rng(0)
    draws = np.array([sample_simplex_weight("convex", 2, rng).w for _ in range(100_000)])
    assert np.all((draws >= 0) & (draws <= 1))
    np.testing.assert_array_equal(draws.sum(1), 1.0)
    # Uniform[0, 1] mean, Monte-Carlo standard error about 0.001
    assert abs(draws[:, 0].mean() - 0.5) < 0.01


def test_sampled_dirichlet_weights():
    rng = np.random.default_rng(1)
    draws = np.array([sample_simplex_weight("convex", 3, rng).w for _ in range(100_000)])
    np.testing.assert_allclose(draws.mean(0), 1 / 3, atol=0.01)
    # marginal variance of Dirichlet(1,1,1) is (1/3)(2/3)/4
    np.testing.assert_allclose(draws.var(0), 1 / 18, atol=0.002)


def test_sampled_bezier_weights_come_from_a_scalar():
    w = sample_simplex_weight("bezier3", 3, np.random.default_rng(2))
    np.testing.assert_allclose(w.w, bezier3_weights(w.scalar_z).w, rtol=0, atol=0)


def test_scalar_grids():
    np.testing.assert_array_equal(scalar_grid(3), [0, 0.5, 1])
    np.testing.assert_array_equal(scalar_grid(5), [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_array_equal(scalar_grid(1), [0.5])
    assert [w.scalar_z for w in grid_weights("convex", 2, 3)] == [0, 0.5, 1]
    np.testing.assert_array_equal(grid_weights("convex", 2, 3)[0].w, [0, 1])
    np.testing.assert_array_equal(grid_weights("bezier3", 3, 3)[1].w, [0.25, 0.5, 0.25])
    with pytest.raises(ValueError):
        grid_weights("convex", 2, 0)


@pytest.mark.parametrize("k", [1, 2, 3, 5, 6, 10, 20])
def test_triangle_lattice(k):
    ws = grid_weights("convex", 3, k)
    assert len(ws) == k
    pts = {tuple(np.round(w.w, 12)) for w in ws}
    assert len(pts) == k
    if k >= 3:
        # corners are always on the coarsest lattice with >= K nodes
        assert (1.0, 0.0, 0.0) in pts and (0.0, 0.0, 1.0) in pts
    assert grid_weights("convex", 3, k)[0].w.tolist() == ws[0].w.tolist()


def test_cosine_examples():
    assert cosine_sq_penalty(np.array([[1.0, 0.0], [0.0, 1.0]]))[0] == 0.0
    assert cosine_sq_penalty(np.array([[1.0, 1.0], [1.0, 1.0]]))[0] == pytest.approx(1.0, abs=1e-15)
    assert cosine_sq_penalty(np.array([[1.0, 0.0], [1.0, 1.0]]))[0] == pytest.approx(0.5, abs=1e-15)
    # three mutually parallel anchors: every unordered pair counted once
    assert cosine_sq_penalty(np.ones((3, 4)))[0] == pytest.approx(3.0, abs=1e-14)
    with pytest.raises(ValueError):
        cosine_sq_penalty(np.array([[0.0, 0.0], [1.0, 0.0]]))


@given(vectors, st.floats(1e-3, 1e3), st.integers(0, 3))
def test_cosine_scale_invariance(anchors, c, which):
    a = np.array(anchors)
    if np.any(np.linalg.norm(a, axis=1) < 1e-3):
        return
    b = a.copy()
    b[which % len(a)] *= c
    assert cosine_sq_penalty(b)[0] == pytest.approx(cosine_sq_penalty(a)[0], abs=1e-12)


@settings(max_examples=50)
@given(st.integers(0, 2**31 - 1), st.integers(2, 4), st.integers(2, 20))
def test_cosine_gradient_matches_finite_differences(seed, n, p):
    anchors = np.random.default_rng(seed).normal(size=(n, p))
    assert finite_diff_check(anchors, cosine_sq_penalty, h=1e-6).max_rel_error <= 1e-6


def test_collapse_metrics():
    m = collapse_metrics(np.ones((3, 4)))
    np.testing.assert_allclose(m["cos2"], 1.0)
    np.testing.assert_array_equal(m["l2"], 0.0)
    m = collapse_metrics(np.eye(2))
    assert m["cos2"][0, 1] == 0.0
    m = collapse_metrics(np.array([[3.0, 0.0], [1.0, 1.0]]))
    assert m["l2"][0, 1] == pytest.approx(math.sqrt(5))
    assert m["cos2"][0, 1] == pytest.approx(0.5)


def test_anchor_set_serialization():
    spec = MlpSpec(2, (), "scalar")
    s = AnchorSet(np.random.default_rng(0).normal(size=(3, spec.n_params)), "bezier3", 0.5)
    back = AnchorSet.loads(s.dumps(spec))
    np.testing.assert_array_equal(back.anchors, s.anchors)
    assert (back.mode, back.beta) == ("bezier3", 0.5)
