import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsglyph.nn import (AdamState, ConvLayer, DeterminismError, ShapeError, adam_step,
                        conv1d_backward, conv1d_forward, grad_check, leaky_relu,
                        leaky_relu_backward, numeric_grad, relative_error)


def _layer(w, b=None):
    w = np.asarray(w, dtype=float)
    return ConvLayer(w, np.zeros(w.shape[0]) if b is None else b)


def _reference_conv(layer, x):
    # direct translation of out[c,t] = b[c] + sum_{i,k} w[c,i,k] x_pad[i,t+k]
    C, L = x.shape
    xp = np.pad(x, ((0, 0), (1, 1)))
    out = np.zeros((layer.out_channels, L))
    for c in range(layer.out_channels):
        for t in range(L):
            out[c, t] = layer.bias[c] + np.sum(layer.weights[c] * xp[:, t:t + 3])
    return out


def test_identity_kernel():
    out = conv1d_forward(_layer([[[0, 1, 0]]]), np.array([[1.0, 2.0, 3.0]]))
    np.testing.assert_array_equal(out, [[1, 2, 3]])


def test_box_kernel_zero_padding():
    out = conv1d_forward(_layer([[[1, 1, 1]]]), np.array([[1.0, 2.0, 3.0]]))
    np.testing.assert_array_equal(out, [[3, 6, 5]])


def test_matches_reference_and_batch(rng):
    layer = ConvLayer.init(3, 4, rng)
    x = rng.normal(size=(5, 3, 11))
    out = conv1d_forward(layer, x)
    assert out.shape == (5, 4, 11)
    for i in range(5):
        np.testing.assert_allclose(out[i], _reference_conv(layer, x[i]), atol=1e-12)


def test_channel_mismatch():
    with pytest.raises(ShapeError):
        conv1d_forward(_layer(np.ones((2, 3, 3))), np.ones((2, 5)))
    with pytest.raises(ShapeError):
        ConvLayer(np.ones((2, 3, 5)), np.zeros(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(L, a, b):
    r = np.random.default_rng(L)
    layer = ConvLayer(r.normal(size=(2, 2, 3)), np.zeros(2))
    x, y = r.normal(size=(2, L)), r.normal(size=(2, L))
    lhs = conv1d_forward(layer, a * x + b * y)
    rhs = a * conv1d_forward(layer, x) + b * conv1d_forward(layer, y)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_shift_equivariance_interior(rng):
    layer = ConvLayer.init(1, 2, rng)
    x = np.zeros((1, 40))
    x[0, 10:20] = rng.normal(size=10)
    k = 7
    a = conv1d_forward(layer, x)
    b = conv1d_forward(layer, np.roll(x, k, axis=1))
    np.testing.assert_allclose(b[:, 1 + k:-1], a[:, 1:-1 - k], atol=1e-12)


def test_backward_zero_grad(rng):
    layer = ConvLayer.init(2, 3, rng)
    x = rng.normal(size=(2, 9))
    gw, gb, gx = conv1d_backward(layer, x, np.zeros((3, 9)))
    assert not gw.any() and not gb.any() and not gx.any()


def test_backward_finite_differences(rng):
    layer = ConvLayer.init(2, 3, rng)
    x = rng.normal(size=(4, 2, 7))
    g = rng.normal(size=(4, 3, 7))
    gw, gb, gx = conv1d_backward(layer, x, g)
    params = {"w": layer.weights, "b": layer.bias, "x": x}

    def f(p):
        return float(np.sum(conv1d_forward(ConvLayer(p["w"], p["b"]), p["x"]) * g))

    for name, analytic in (("w", gw), ("b", gb), ("x", gx)):
        assert relative_error(analytic, numeric_grad(f, params, name, 1e-6)) < 1e-6


def test_backward_input_is_flipped_correlation(rng):
    w = rng.normal(size=3)
    g = rng.normal(size=12)
    _, _, gx = conv1d_backward(_layer([[w]]), np.zeros((1, 12)), g[None])
    expected = np.convolve(g, w, mode="same")  # correlation with the flipped kernel
    np.testing.assert_allclose(gx[0], expected, atol=1e-12)


def test_backward_shape_error(rng):
    layer = ConvLayer.init(2, 3, rng)
    with pytest.raises(ShapeError):
        conv1d_backward(layer, np.ones((2, 5)), np.ones((3, 4)))


def test_leaky_relu_values():
    np.testing.assert_allclose(leaky_relu(np.array([-1.0, 0.0, 2.0]), 0.01), [-0.01, 0, 2])
    x = np.abs(np.random.default_rng(0).normal(size=20))
    np.testing.assert_array_equal(leaky_relu(x), x)
    with pytest.raises(ValueError):
        leaky_relu(x, 1.5)


def test_leaky_relu_backward_fd(rng):
    x = rng.normal(size=50)
    x = x[np.abs(x) > 1e-3]
    g = rng.normal(size=x.size)
    num = numeric_grad(lambda p: float(np.sum(leaky_relu(p["x"]) * g)), {"x": x.copy()}, "x", 1e-7)
    assert relative_error(leaky_relu_backward(x, g), num) < 1e-6


def test_adam_zero_gradient():
    p = {"a": np.array([1.0, -2.0])}
    adam_step(p, {"a": np.zeros(2)}, AdamState(lr=0.1))
    np.testing.assert_array_equal(p["a"], [1.0, -2.0])


def test_adam_first_step():
    p = {"a": np.array([0.0])}
    adam_step(p, {"a": np.array([1.0])}, AdamState(lr=0.1))
    assert p["a"][0] == pytest.approx(-0.1, abs=1e-6)


def test_adam_quadratic_converges():
    p = {"a": np.array([5.0])}
    st_ = AdamState(lr=0.05)
    for _ in range(2000):
        adam_step(p, {"a": 2 * (p["a"] - 1.5)}, st_)
    assert abs(p["a"][0] - 1.5) < 1e-4


def test_adam_shape_mismatch():
    with pytest.raises(ShapeError):
        adam_step({"a": np.zeros(2)}, {"a": np.zeros(3)}, AdamState())


def test_grad_check_toy_net(rng):
    layer = ConvLayer.init(1, 2, rng)
    x = rng.normal(size=(1, 12))
    target = rng.normal(size=(2, 12))
    params = {"w": layer.weights, "b": layer.bias}

    def closure(p):
        lyr = ConvLayer(p["w"], p["b"])
        a = conv1d_forward(lyr, x)
        h = leaky_relu(a)
        diff = h - target
        loss = float(np.mean(diff ** 2))
        gh = leaky_relu_backward(a, 2 * diff / diff.size)
        gw, gb, _ = conv1d_backward(lyr, x, gh)
        return loss, {"w": gw, "b": gb}

    rep = grad_check(closure, params, tolerance=1e-5)
    assert rep.passed, rep.errors


def test_grad_check_detects_nondeterminism():
    r = np.random.default_rng(0)

    def closure(p):
        return float(np.sum(p["a"]) + r.normal()), {"a": np.ones_like(p["a"])}

    with pytest.raises(DeterminismError):
        grad_check(closure, {"a": np.zeros(3)})
