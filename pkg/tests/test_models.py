import numpy as np
import pytest

from wembed.models import (
    EmbeddingModel,
    budget_shape,
    init_model,
    model_distance,
    model_distance_grad,
    pair_distances,
    retract,
)
from wembed.optim import finite_diff, relative_error
from wembed.ot import SinkhornConfig, sinkhorn


def poincare_reference(u, v):
    # independent closed form: d = 2 artanh(|(-u) (+) v|) with Mobius addition
    x, y = -u, v
    xy, xx, yy = x @ y, x @ x, y @ y
    num = (1 + 2 * xy + yy) * x + (1 - xx) * y
    den = 1 + 2 * xy + xx * yy
    return 2 * np.arctanh(np.linalg.norm(num / den))


class TestInit:
    def test_seed_reproducible(self):
        a = init_model("wasserstein", 5, (4, 2), seed=3)
        b = init_model("wasserstein", 5, (4, 2), seed=3)
        assert np.array_equal(a.params, b.params)

    def test_hyperbolic_inside_ball(self):
        m = init_model("hyperbolic", 50, (8,), seed=0, scale=2.0)
        assert np.all(np.linalg.norm(m.params, axis=1) < 1)

    def test_parameter_count(self):
        m = init_model("wasserstein", 2, (4, 2))
        assert m.n_params == 16 and m.budget == 8

    def test_zero_sizes_rejected(self):
        with pytest.raises(ValueError):
            init_model("euclidean", 0, (3,))
        with pytest.raises(ValueError):
            init_model("euclidean", 3, (0,))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            init_model("spherical", 2, (3,))

    def test_budget_shape(self):
        assert budget_shape("wasserstein", budget=32, k=4) == (8, 4)
        assert budget_shape("wasserstein", budget=33, k=4) == (8, 4)
        assert budget_shape("hyperbolic", budget=32) == (32,)
        assert budget_shape("euclidean", d=7) == (7,)


class TestDistance:
    @pytest.mark.parametrize("kind,shape", [("wasserstein", (3, 2)), ("euclidean", (4,)), ("hyperbolic", (4,))])
    def test_self_distance_zero(self, kind, shape):
        m = init_model(kind, 3, shape, seed=1)
        assert model_distance(m, 1, 1) == 0.0

    def test_hyperbolic_closed_form(self):
        m = EmbeddingModel("hyperbolic", np.array([[0.0, 0.0], [0.5, 0.0]]))
        assert model_distance(m, 0, 1) == pytest.approx(np.log(3.0), rel=1e-14)

    def test_hyperbolic_matches_mobius_form(self, rng):
        P = project_rows(rng.normal(size=(10, 3)) * 0.4)
        m = EmbeddingModel("hyperbolic", P)
        for i in range(9):
            assert model_distance(m, i, i + 1) == pytest.approx(poincare_reference(P[i], P[i + 1]), rel=1e-9)

    def test_euclidean(self):
        m = EmbeddingModel("euclidean", np.array([[0.0, 0.0], [3.0, 4.0]]))
        assert model_distance(m, 0, 1) == 5.0

    def test_wasserstein_is_sinkhorn(self, rng):
        m = init_model("wasserstein", 2, (4, 2), seed=2)
        cfg = SinkhornConfig(lam=0.05)
        assert model_distance(m, 0, 1, cfg) == sinkhorn(m.params[0], m.params[1], cfg).value

    @pytest.mark.parametrize("kind,shape", [("wasserstein", (5, 3)), ("euclidean", (4,)), ("hyperbolic", (4,))])
    def test_symmetric(self, kind, shape):
        m = init_model(kind, 4, shape, seed=5)
        for i, j in [(0, 1), (2, 3), (1, 3)]:
            assert abs(model_distance(m, i, j) - model_distance(m, j, i)) <= 1e-10

    def test_index_out_of_range(self):
        m = init_model("euclidean", 3, (2,))
        with pytest.raises(IndexError):
            model_distance(m, 0, 3)


def project_rows(P):
    n = np.linalg.norm(P, axis=1, keepdims=True)
    return np.where(n > 0.9, P * 0.9 / n, P)


class TestGradient:
    def test_euclidean(self):
        m = EmbeddingModel("euclidean", np.array([[0.0, 0.0], [3.0, 4.0]]))
        np.testing.assert_allclose(model_distance_grad(m, 0, 1).grad_i, [-0.6, -0.8])

    def test_hyperbolic_at_origin_points_away(self):
        m = EmbeddingModel("hyperbolic", np.array([[0.0, 0.0], [0.3, 0.4]]))
        g = model_distance_grad(m, 0, 1).grad_i
        cos = -g @ np.array([0.3, 0.4]) / (np.linalg.norm(g) * 0.5)
        assert cos == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("kind,shape", [("wasserstein", (3, 2)), ("euclidean", (5,)), ("hyperbolic", (5,))])
    def test_matches_finite_differences(self, kind, shape):
        m = init_model(kind, 6, shape, seed=11, scale=0.3)
        cfg = SinkhornConfig(lam=0.1)
        for i, j in [(0, 1), (4, 2), (5, 3)]:
            g = model_distance_grad(m, i, j, cfg)

            def f_i(x):
                P = m.params.copy()
                P[i] = x
                return model_distance(EmbeddingModel(kind, P), i, j, cfg)

            def f_j(x):
                P = m.params.copy()
                P[j] = x
                return model_distance(EmbeddingModel(kind, P), i, j, cfg)

            assert relative_error(g.grad_i, finite_diff(f_i, m.params[i])) < 1e-4
            assert relative_error(g.grad_j, finite_diff(f_j, m.params[j])) < 1e-4
            assert not g.degenerate

    @pytest.mark.parametrize("kind", ["euclidean", "hyperbolic"])
    def test_coincident_points_flagged(self, kind):
        m = EmbeddingModel(kind, np.array([[0.1, 0.2], [0.1, 0.2]]))
        g = model_distance_grad(m, 0, 1)
        assert g.degenerate
        np.testing.assert_array_equal(g.grad_i, 0.0)

    def test_batched_gradient_matches_pairwise(self):
        m = init_model("hyperbolic", 5, (3,), seed=4, scale=0.3)
        I, J = np.array([0, 1, 3]), np.array([2, 4, 0])
        w = np.array([0.5, -1.0, 2.0])
        _, grad = pair_distances(m, I, J, weights=w)
        ref = np.zeros_like(m.params)
        for i, j, wk in zip(I, J, w):
            g = model_distance_grad(m, i, j)
            ref[i] += wk * g.grad_i
            ref[j] += wk * g.grad_j
        np.testing.assert_allclose(grad, ref, rtol=1e-12)


def test_retract_keeps_ball():
    m = EmbeddingModel("hyperbolic", np.array([[3.0, 0.0], [0.2, 0.1]]))
    retract(m)
    assert np.all(np.linalg.norm(m.params, axis=1) < 1)
    assert np.array_equal(m.params[1], [0.2, 0.1])
