"""MLP forward/backward against hand examples and finite differences."""

import numpy as np
import pytest

from ligs.nn import (
    ADAM_EPS,
    NonFiniteError,
    ParamStore,
    adam_step,
    backward,
    clip_global_norm,
    forward,
    init_params,
    load_params,
    mlp_shapes,
    save_params,
)
from ligs.rng import Rng


def scalar_net(w, b):
    p = ParamStore([(1, 1)])
    p.weights[0][0, 0] = w
    p.biases[0][0] = b
    return p


def test_zero_net_maps_to_zero():
    p = ParamStore(mlp_shapes(3, [4], 2))
    y, _ = forward(p, np.ones((5, 3)))
    assert np.array_equal(y, np.zeros((5, 2)))


def test_identity_single_layer():
    p = ParamStore([(3, 3)])
    p.weights[0][...] = np.eye(3)
    x = np.array([[1.0, -2.0, 0.5]])
    y, _ = forward(p, x)
    assert np.array_equal(y, x)


def test_affine_arithmetic():
    y, _ = forward(scalar_net(2.0, 1.0), np.array([3.0]))
    assert y[0] == 7.0


def test_dimension_mismatch():
    p = ParamStore([(3, 2)])
    with pytest.raises(ValueError):
        forward(p, np.ones((4, 5)))


def test_backward_hand_example():
    p = scalar_net(2.0, 1.0)
    _, tape = forward(p, np.array([3.0]))
    backward(p, tape, np.array([1.0]))
    assert p.grad_w[0][0, 0] == 3.0
    assert p.grad_b[0][0] == 1.0


def test_backward_accumulates():
    p = scalar_net(2.0, 1.0)
    _, tape = forward(p, np.array([3.0]))
    backward(p, tape, np.array([1.0]))
    once = p.grads.copy()
    backward(p, tape, np.array([1.0]))
    assert np.array_equal(p.grads, 2.0 * once)


def _fd_grad(p, x, dy, h=1e-5):
    """Central finite differences of loss = <dy, net(x)> in theta."""
    g = np.zeros(p.size)
    for k in range(p.size):
        old = p.theta[k]
        p.theta[k] = old + h
        yp, _ = forward(p, x)
        p.theta[k] = old - h
        ym, _ = forward(p, x)
        p.theta[k] = old
        g[k] = np.sum(dy * (yp - ym)) / (2 * h)
    return g


@pytest.mark.parametrize("trial", range(50))
def test_gradient_matches_finite_differences(trial):
    rng = Rng(9000 + trial)
    in_dim = int(rng.integers(1, 5))
    hid = int(rng.integers(1, 6))
    out_dim = int(rng.integers(1, 4))
    p = init_params(mlp_shapes(in_dim, [hid], out_dim), rng)
    p.biases[0][...] = rng.normal(size=hid) * 0.5  # move ReLU kinks off zero
    x = rng.normal(size=(3, in_dim))
    dy = rng.normal(size=(3, out_dim))
    y, tape = forward(p, x)
    backward(p, tape, dy)
    analytic = p.grads.copy()
    fd = _fd_grad(p, x, dy)
    scale = np.maximum(np.abs(fd), 1.0)
    assert np.max(np.abs(analytic - fd) / scale) < 1e-4


def test_clip_scales_by_ratio():
    g = np.array([3.0, 4.0])  # norm 5
    raw = clip_global_norm(g, 1.0)
    assert raw == 5.0
    assert np.allclose(g, np.array([0.6, 0.8]))


def test_clip_idempotent():
    g = Rng(1).normal(size=100) * 10
    clip_global_norm(g, 1.0)
    once = g.copy()
    clip_global_norm(g, 1.0)
    assert np.array_equal(g, once)


def test_clip_below_threshold_untouched():
    g = np.array([0.3, 0.4])
    clip_global_norm(g, 1.0)
    assert np.array_equal(g, np.array([0.3, 0.4]))


def test_adam_zero_grads_fixed_point():
    p = init_params([(2, 2)], Rng(3))
    before = p.theta.copy()
    adam_step(p, lr=1e-3)
    assert np.array_equal(p.theta, before)
    assert p.step_count == 1


def test_adam_first_step_bias_corrected():
    p = ParamStore([(1, 1)])
    p.grads[...] = 1.0
    adam_step(p, lr=1e-3)
    # first bias-corrected step moves by lr * 1/(1 + eps) for any g
    assert abs(p.theta[0] + 1e-3 / (1.0 + ADAM_EPS)) < 1e-12
    assert np.array_equal(p.grads, np.zeros(2))


def test_adam_clips_before_update():
    a = ParamStore([(1, 1)])
    a.grads[...] = np.array([3.0, 4.0])
    adam_step(a, lr=1e-3, clip_norm=1.0)
    b = ParamStore([(1, 1)])
    b.grads[...] = np.array([0.6, 0.8])
    adam_step(b, lr=1e-3)
    assert np.allclose(a.theta, b.theta)


def test_adam_rejects_non_finite_with_index():
    p = ParamStore([(2, 1)])
    p.grads[1] = np.nan
    with pytest.raises(NonFiniteError, match="index 1"):
        adam_step(p, lr=1e-3)


def test_forward_rejects_non_finite():
    p = scalar_net(np.inf, 0.0)
    with pytest.raises(NonFiniteError):
        forward(p, np.array([1.0]))


def test_save_load_round_trip(tmp_path):
    p = init_params(mlp_shapes(4, [8, 8], 3), Rng(5))
    path = str(tmp_path / "p.bin")
    save_params(p, path)
    q = load_params(path)
    assert q.layer_shapes == p.layer_shapes
    assert np.array_equal(q.theta, p.theta)


def test_load_rejects_truncated(tmp_path):
    p = init_params([(4, 4)], Rng(5))
    path = str(tmp_path / "p.bin")
    save_params(p, path)
    data = open(path, "rb").read()
    open(path, "wb").write(data[:-8])
    with pytest.raises(ValueError, match="truncated"):
        load_params(path)


def test_load_rejects_wrong_magic(tmp_path):
    path = str(tmp_path / "p.bin")
    open(path, "wb").write(b"NOTAPARM" + b"\x00" * 64)
    with pytest.raises(ValueError):
        load_params(path)


def test_forward_deterministic():
    p = init_params(mlp_shapes(3, [5], 2), Rng(7))
    x = Rng(8).normal(size=(4, 3))
    y1, _ = forward(p, x)
    y2, _ = forward(p, x)
    assert np.array_equal(y1, y2)
