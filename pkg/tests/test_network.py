import numpy as np
import pytest

from sparse_evo import kernels
from sparse_evo.config import TrainConfig
from sparse_evo.network import (InvalidArchitectureError, LayerTopology,
                                SparseLayer, backward_and_update, build_model,
                                connection_probability, densify, forward,
                                init_topology, init_weights,
                                loss_and_gradients, srelu, _forward_full)
from conftest import make_model


class TestInitTopology:
    def test_expected_edge_count_500x1000(self):
        # p = 20*(500+1000)/(500*1000) = 0.06, E[edges] = 30000, sigma ~ 168
        p = connection_probability(500, 1000, 20)
        assert p == pytest.approx(0.06)
        topo = init_topology([(500, 1000)], 20, np.random.default_rng(0))
        n = 500 * 1000
        sigma = np.sqrt(n * p * (1 - p))
        assert abs(topo.layers[0].edge_count - n * p) < 4 * sigma

    def test_probability_clamps_to_one(self):
        topo = init_topology([(2, 2)], 1, np.random.default_rng(0))
        assert topo.layers[0].edge_count == 4

    def test_same_seed_same_edges(self):
        a = init_topology([(10, 12), (12, 4)], 2, np.random.default_rng(7))
        b = init_topology([(10, 12), (12, 4)], 2, np.random.default_rng(7))
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la.rows, lb.rows)
            assert np.array_equal(la.cols, lb.cols)

    def test_zero_width_rejected(self):
        with pytest.raises(InvalidArchitectureError):
            init_topology([(0, 5)], 2, np.random.default_rng(0))

    def test_birth_epochs_zero_and_indices_in_range(self):
        topo = init_topology([(9, 7)], 2, np.random.default_rng(3)).layers[0]
        assert np.all(topo.birth == 0)
        assert topo.rows.min() >= 0 and topo.rows.max() < 9
        assert topo.cols.min() >= 0 and topo.cols.max() < 7

    def test_no_duplicate_edges(self):
        topo = init_topology([(20, 20)], 5, np.random.default_rng(5)).layers[0]
        keys = topo.edge_keys()
        assert np.unique(keys).size == keys.size


class TestSRelu:
    def test_init_params_behave_like_relu_then_identity(self):
        params = np.array([0.0, 0.0, 1.0, 1.0])
        assert srelu(-3.0, params) == 0.0
        assert srelu(0.5, params) == 0.5
        assert srelu(2.0, params) == 2.0

    def test_piecewise_values(self):
        params = np.array([-1.0, 0.5, 2.0, 0.25])
        assert srelu(-5.0, np.array([0.0, 0.0, 1.0, 1.0])) == 0.0
        assert srelu(-3.0, params) == pytest.approx(-1 + 0.5 * (-2))
        assert srelu(4.0, params) == pytest.approx(2 + 0.25 * 2)

    def test_init_weights_distribution_and_srelu_init(self, rng):
        topo = init_topology([(40, 60)], 10, rng)
        layers = init_weights(topo, rng)
        layer = layers[0]
        assert layer.weights.size == topo.layers[0].edge_count
        assert np.all(layer.biases == 0)
        assert np.all(layer.srelu == np.array([0.0, 0.0, 1.0, 1.0]))
        std = np.sqrt(2 / (40 + 60))
        assert layer.weights.std() == pytest.approx(std, rel=0.15)


def _single_edge_model(weight=2.0):
    model = make_model(n_in=1, hidden=(1,), n_out=2, epsilon=100)
    model.layers[0].weights[:] = weight
    model.layers[0].biases[:] = 0.0
    return model


class TestForward:
    def test_single_edge_hand_evaluation(self):
        model = _single_edge_model(weight=2.0)
        acts, _ = forward(model, np.array([[3.0]]))
        # 2*3 = 6 >= t_right=1, srelu init gives 1 + 1*5 = 6
        assert acts[1][0, 0] == pytest.approx(6.0)

    def test_empty_layer_gives_srelu_of_bias(self):
        model = make_model(n_in=3, hidden=(4,), n_out=2, epsilon=100)
        topo = model.topology.layers[0]
        topo.rows = np.zeros(0, dtype=np.int64)
        topo.cols = np.zeros(0, dtype=np.int64)
        topo.birth = np.zeros(0, dtype=np.int64)
        model.layers[0].weights = np.zeros(0)
        model.layers[0].w_vel = np.zeros(0)
        model.layers[0].biases[:] = [0.5, -0.2, 1.5, 0.0]
        acts, _ = forward(model, np.ones((2, 3)))
        expected = srelu(model.layers[0].biases, model.layers[0].srelu)
        assert np.allclose(acts[1], expected[None, :])

    def test_eval_mode_is_deterministic(self, rng):
        model = make_model(n_in=6, hidden=(5, 4), n_out=3, dropout_rate=0.3)
        x = rng.normal(size=(4, 6))
        _, p1 = forward(model, x)
        _, p2 = forward(model, x)
        assert np.array_equal(p1, p2)

    def test_dimension_mismatch_raises(self):
        model = make_model(n_in=6)
        with pytest.raises(ValueError):
            forward(model, np.ones((2, 5)))


class TestDensify:
    def test_no_edges_gives_zero_matrix(self):
        topo = LayerTopology(3, 4, np.zeros(0, dtype=np.int64),
                             np.zeros(0, dtype=np.int64),
                             np.zeros(0, dtype=np.int64))
        layer = SparseLayer(np.zeros(0), np.zeros(4), np.tile([0, 0, 1, 1], (4, 1)))
        assert np.all(densify(topo, layer) == 0)

    def test_single_edge_placement(self):
        topo = LayerTopology(3, 4, np.array([1], dtype=np.int64),
                             np.array([2], dtype=np.int64),
                             np.array([0], dtype=np.int64))
        layer = SparseLayer(np.array([0.5]), np.zeros(4),
                            np.tile([0, 0, 1, 1], (4, 1)))
        dense = densify(topo, layer)
        assert dense[1, 2] == 0.5
        assert np.count_nonzero(dense) == 1

    def test_sparse_forward_matches_dense_product(self, rng):
        model = make_model(n_in=12, hidden=(9,), n_out=4, epsilon=4, seed=5)
        x = rng.normal(size=(7, 12))
        topo = model.topology.layers[0]
        layer = model.layers[0]
        z = kernels.forward_t(np.ascontiguousarray(x.T), topo.rows, topo.cols,
                              layer.weights, topo.n_next).T
        assert np.abs(z - x @ densify(topo, layer)).max() < 1e-10


class TestBackward:
    def test_saturated_prediction_leaves_parameters_unchanged(self):
        model = _single_edge_model(weight=0.1)
        # push the true-class logit far above the other: softmax rounds to 1.0
        model.layers[1].biases[:] = [500.0, -500.0]
        before = [(l.weights.copy(), l.biases.copy(), l.srelu.copy())
                  for l in model.layers]
        loss = backward_and_update(model, np.array([[1.0]]), np.array([0]))
        assert loss == 0.0
        for layer, (w, b, s) in zip(model.layers, before):
            assert np.array_equal(layer.weights, w)
            assert np.array_equal(layer.biases, b)
            assert np.array_equal(layer.srelu, s)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(77)
        model = make_model(n_in=2, hidden=(2,), n_out=2, epsilon=100, seed=9)
        for layer in model.layers:
            layer.srelu = rng.normal(0, 0.6, layer.srelu.shape)
            layer.srelu[:, 2] += 1.0
            layer.biases = rng.normal(0, 0.3, layer.biases.shape)
        x = rng.normal(size=(5, 2))
        y = rng.integers(0, 2, 5)
        _, grads = loss_and_gradients(model, x, y)

        def fd(get, setv, eps=1e-5):
            v = get()
            setv(v + eps)
            lp, _ = loss_and_gradients(model, x, y)
            setv(v - eps)
            lm, _ = loss_and_gradients(model, x, y)
            setv(v)
            return (lp - lm) / (2 * eps)

        worst = 0.0
        for li, layer in enumerate(model.layers):
            arrays = [("weights", layer.weights), ("biases", layer.biases),
                      ("srelu", layer.srelu)]
            for name, arr in arrays:
                flat = arr.reshape(-1)
                for j in range(flat.size):
                    num = fd(lambda: flat[j], lambda v: flat.__setitem__(j, v))
                    ana = grads[li][name].reshape(-1)[j]
                    if abs(num) + abs(ana) > 1e-10:
                        worst = max(worst, abs(num - ana) / (abs(num) + abs(ana)))
        assert worst < 1e-4

    def test_single_sample_cross_entropy_definition(self):
        model = make_model(n_in=2, hidden=(2,), n_out=2, epsilon=100, seed=3)
        x = np.array([[0.3, -0.7]])
        y = np.array([1])
        loss, _ = loss_and_gradients(model, x, y)
        _, probs = forward(model, x)
        assert loss == pytest.approx(-np.log(probs[0, 1]))

    def test_support_invariance(self, rng):
        model = make_model(n_in=8, hidden=(6,), n_out=3, epsilon=2, seed=4)
        keys_before = [t.edge_keys().copy() for t in model.topology.layers]
        sizes_before = [l.weights.size for l in model.layers]
        backward_and_update(model, rng.normal(size=(10, 8)),
                            rng.integers(0, 3, 10))
        for topo, keys, size, layer in zip(model.topology.layers, keys_before,
                                           sizes_before, model.layers):
            assert np.array_equal(topo.edge_keys(), keys)
            assert layer.weights.size == size

    def test_dropout_expectation_matches_eval(self):
        rng = np.random.default_rng(11)
        model = make_model(n_in=5, hidden=(8,), n_out=2, epsilon=100,
                           dropout_rate=0.4, seed=2)
        x = rng.normal(size=(1, 5))
        eval_hidden = forward(model, x)[0][1][0]
        n = 10000
        total = np.zeros_like(eval_hidden)
        sq = np.zeros_like(eval_hidden)
        for _ in range(n):
            cache = _forward_full(model, x, mode="train", rng=rng)
            dropped = cache["inputs"][1][0]
            total += dropped
            sq += dropped ** 2
        mean = total / n
        se = np.sqrt(np.maximum(sq / n - mean ** 2, 0) / n)
        assert np.all(np.abs(mean - eval_hidden) <= 3 * se + 1e-12)

    def test_loss_trajectory_is_deterministic(self, rng):
        x = rng.normal(size=(40, 6))
        y = rng.integers(0, 3, 40)

        def run():
            model = make_model(n_in=6, hidden=(5,), n_out=3, dropout_rate=0.3,
                               seed=8, epsilon=3)
            stream = np.random.default_rng(99)
            return [backward_and_update(model, x, y, rng=stream)
                    for _ in range(5)]

        assert run() == run()
