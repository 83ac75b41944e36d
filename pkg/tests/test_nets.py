import numpy as np
import pytest

from wavegait.errors import ConfigurationError
from wavegait.nets import (
    Adam,
    flatten_layers,
    init_mlp,
    mlp_backward,
    mlp_forward,
    unflatten_layers,
)


class TestForward:
    def test_linear_single_layer(self):
        # one layer means no tanh: plain affine map
        w = np.array([[1.0, 2.0], [0.0, -1.0]])
        b = np.array([0.5, 0.0])
        out, _ = mlp_forward([(w, b)], np.array([[1.0, 1.0]]))
        np.testing.assert_allclose(out, [[3.5, -1.0]])

    def test_two_layer_hand_computed(self):
        w0 = np.array([[0.3, -0.2]])
        b0 = np.array([0.1])
        w1 = np.array([[2.0]])
        b1 = np.array([-0.4])
        x = np.array([[1.0, 0.5]])
        out, acts = mlp_forward([(w0, b0), (w1, b1)], x)
        h = np.tanh(0.3 - 0.1 + 0.1)
        np.testing.assert_allclose(out, [[2.0 * h - 0.4]], atol=1e-15)
        assert len(acts) == 3

    def test_batch_shape(self):
        layers = init_mlp([4, 8, 3], np.random.default_rng(0))
        out, _ = mlp_forward(layers, np.zeros((7, 4)))
        assert out.shape == (7, 3)


class TestBackward:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        layers = init_mlp([3, 5, 2], rng)
        x = rng.normal(size=(4, 3))
        dout = rng.normal(size=(4, 2))

        out, acts = mlp_forward(layers, x)
        grads = mlp_backward(layers, acts, dout)

        def loss(flat):
            l2 = unflatten_layers(flat, layers)
            o, _ = mlp_forward(l2, x)
            return float(np.sum(dout * o))

        flat = flatten_layers(layers)
        flat_grad = flatten_layers(grads)
        h = 1e-6
        for idx in range(0, flat.size, 7):  # spot-check every 7th parameter
            e = np.zeros_like(flat)
            e[idx] = h
            fd = (loss(flat + e) - loss(flat - e)) / (2.0 * h)
            assert fd == pytest.approx(flat_grad[idx], abs=1e-4)

    def test_single_linear_layer_grads(self):
        w = np.zeros((1, 2))
        b = np.zeros(1)
        x = np.array([[3.0, -1.0]])
        out, acts = mlp_forward([(w, b)], x)
        (gw, gb), = mlp_backward([(w, b)], acts, np.array([[2.0]]))
        np.testing.assert_allclose(gw, [[6.0, -2.0]])
        np.testing.assert_allclose(gb, [2.0])


class TestFlatten:
    def test_roundtrip(self):
        layers = init_mlp([4, 6, 6, 2], np.random.default_rng(3))
        back = unflatten_layers(flatten_layers(layers), layers)
        for (w, b), (w2, b2) in zip(layers, back):
            np.testing.assert_array_equal(w, w2)
            np.testing.assert_array_equal(b, b2)

    def test_size_mismatch_raises(self):
        layers = init_mlp([2, 2], np.random.default_rng(0))
        with pytest.raises(ConfigurationError):
            unflatten_layers(np.zeros(flatten_layers(layers).size + 1), layers)


class TestAdam:
    def test_first_step_hand_computed(self):
        # with bias correction the first step is lr * g / (|g| + eps)
        opt = Adam(lr=0.01)
        p = {"x": np.array([1.0, -2.0])}
        g = {"x": np.array([0.5, -0.25])}
        opt.step(p, g)
        np.testing.assert_allclose(
            p["x"],
            [1.0 + 0.01 * 0.5 / (0.5 + 1e-8), -2.0 + 0.01 * (-0.25) / (0.25 + 1e-8)],
            atol=1e-12,
        )

    def test_ascends_simple_objective(self):
        # maximizing -(x-3)^2 should drive x toward 3
        opt = Adam(lr=0.05)
        p = {"x": np.array([0.0])}
        for _ in range(500):
            opt.step(p, {"x": -2.0 * (p["x"] - 3.0)})
        assert p["x"][0] == pytest.approx(3.0, abs=1e-2)

    def test_state_is_per_parameter(self):
        opt = Adam(lr=0.1)
        p = {"a": np.zeros(1), "b": np.zeros(1)}
        opt.step(p, {"a": np.ones(1), "b": np.full(1, 100.0)})
        # adaptive scaling: wildly different gradient magnitudes produce
        # (nearly) the same step size
        assert p["a"][0] == pytest.approx(p["b"][0], rel=1e-6)
