import numpy as np
import pytest

from qpqc.nn import (LayerSpec, conv_output_hw, he_init, layer_backward,
                     layer_forward)
from qpqc.sim import ShapeError


def _fd_check(spec, weights, x, seed=0, h=1e-4, tol=1e-4):
    """Both input and weight gradients against central finite differences."""
    rng = np.random.default_rng(seed)
    out, cache = layer_forward(spec, weights, x)
    cot = rng.normal(size=out.shape)
    d_in, d_w = layer_backward(spec, weights, cache, cot)

    def loss(xv, wv):
        return float(np.sum(layer_forward(spec, wv, xv)[0] * cot))

    flat = x.ravel()
    for i in rng.choice(flat.size, size=min(20, flat.size), replace=False):
        xp, xm = x.copy(), x.copy()
        xp.ravel()[i] += h
        xm.ravel()[i] -= h
        fd = (loss(xp, weights) - loss(xm, weights)) / (2 * h)
        got = d_in.ravel()[i]
        assert abs(got - fd) <= tol * max(1.0, abs(fd)), spec.kind
    for key in weights:
        wflat = weights[key].ravel()
        for i in rng.choice(wflat.size, size=min(15, wflat.size),
                            replace=False):
            wp = {k: v.copy() for k, v in weights.items()}
            wm = {k: v.copy() for k, v in weights.items()}
            wp[key].ravel()[i] += h
            wm[key].ravel()[i] -= h
            fd = (loss(x, wp) - loss(x, wm)) / (2 * h)
            got = d_w[key].ravel()[i]
            assert abs(got - fd) <= tol * max(1.0, abs(fd)), spec.kind


def test_conv_all_ones_kernel():
    spec = LayerSpec("conv2d", in_channels=1, out_channels=1, kernel=3)
    weights = {"w": np.ones((1, 9)), "b": np.zeros(1)}
    out, _ = layer_forward(spec, weights, np.ones((1, 5, 5)))
    assert out.shape == (1, 3, 3)
    assert np.allclose(out, 9.0)


def test_dense_identity():
    spec = LayerSpec("dense", in_features=4, units=4)
    weights = {"w": np.eye(4), "b": np.zeros(4)}
    x = np.array([1.0, -2.0, 3.0, 0.5])
    out, _ = layer_forward(spec, weights, x)
    assert np.array_equal(out, x)


def test_global_avg_pool_plane_means():
    x = np.arange(24, dtype=float).reshape(2, 3, 4)
    out, _ = layer_forward(LayerSpec("global_avg_pool"), {}, x)
    assert np.allclose(out, x.mean(axis=(1, 2)))


def test_relu_backward_zeroes_negative_inputs():
    x = np.array([-1.0, 0.5, -0.2, 2.0])
    _, cache = layer_forward(LayerSpec("relu"), {}, x)
    d_in, _ = layer_backward(LayerSpec("relu"), {}, cache, np.ones(4))
    assert np.array_equal(d_in, [0.0, 1.0, 0.0, 1.0])


def test_conv_stride2_pad1_shape_round_trip():
    spec = LayerSpec("conv2d", in_channels=3, out_channels=5, kernel=3,
                     stride=2, padding=1)
    out, _ = layer_forward(spec, he_init(spec, 0),
                           np.random.default_rng(0).normal(size=(3, 16, 16)))
    assert out.shape == (5, 8, 8)
    assert conv_output_hw(16, 16, 3, 2, 1) == (8, 8)


@pytest.mark.parametrize("spec,shape", [
    (LayerSpec("conv2d", in_channels=2, out_channels=3, kernel=3,
               stride=1, padding=0), (2, 6, 6)),
    (LayerSpec("conv2d", in_channels=2, out_channels=4, kernel=3,
               stride=2, padding=1), (2, 8, 8)),
    (LayerSpec("dense", in_features=12, units=7), (12,)),
    (LayerSpec("relu"), (3, 4, 4)),
    (LayerSpec("leaky_relu"), (3, 4, 4)),
    (LayerSpec("maxpool2d", pool=2), (2, 6, 6)),
    (LayerSpec("global_avg_pool"), (3, 5, 5)),
    (LayerSpec("flatten"), (2, 3, 3)),
    (LayerSpec("softmax"), (6,)),
])
def test_every_layer_kind_matches_finite_differences(spec, shape):
    rng = np.random.default_rng(1)
    x = rng.normal(size=shape) + 0.1   # keep relu kinks away from samples
    _fd_check(spec, he_init(spec, 2), x)


def test_two_layer_network_finite_differences():
    rng = np.random.default_rng(3)
    conv = LayerSpec("conv2d", in_channels=1, out_channels=2, kernel=3,
                     stride=1, padding=1)
    dense = LayerSpec("dense", in_features=2 * 8 * 8, units=3)
    w_conv = he_init(conv, 0)
    w_dense = he_init(dense, 1)
    x = rng.normal(size=(1, 8, 8))
    label_cot = rng.normal(size=3)

    def network(wc, wd, xv):
        h1, c1 = layer_forward(conv, wc, xv)
        h2, c2 = layer_forward(LayerSpec("relu"), {}, h1)
        h3, c3 = layer_forward(LayerSpec("flatten"), {}, h2)
        h4, c4 = layer_forward(dense, wd, h3)
        return h4, (c1, c2, c3, c4)

    out, (c1, c2, c3, c4) = network(w_conv, w_dense, x)
    d, dw_dense = layer_backward(dense, w_dense, c4, label_cot)
    d, _ = layer_backward(LayerSpec("flatten"), {}, c3, d)
    d, _ = layer_backward(LayerSpec("relu"), {}, c2, d)
    d, dw_conv = layer_backward(conv, w_conv, c1, d)

    h = 1e-4
    for key, grads, weights in (("w", dw_conv, w_conv),
                                ("w", dw_dense, w_dense)):
        flat = weights[key].ravel()
        idx = np.random.default_rng(7).choice(flat.size, size=10,
                                              replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + h
            f_p = float(np.sum(network(w_conv, w_dense, x)[0] * label_cot))
            flat[i] = orig - h
            f_m = float(np.sum(network(w_conv, w_dense, x)[0] * label_cot))
            flat[i] = orig
            fd = (f_p - f_m) / (2 * h)
            assert abs(grads[key].ravel()[i] - fd) <= 1e-4 * max(1.0,
                                                                 abs(fd))


def test_he_init_determinism_and_variance():
    spec = LayerSpec("dense", in_features=2000, units=500)
    a = he_init(spec, 9)
    b = he_init(spec, 9)
    assert np.array_equal(a["w"], b["w"])
    assert a["w"].var() == pytest.approx(2.0 / 2000, rel=0.1)
    assert np.array_equal(a["b"], np.zeros(500))


def test_he_init_zero_fan_in():
    with pytest.raises(ValueError):
        he_init(LayerSpec("conv2d", in_channels=0, out_channels=3), 0)
    with pytest.raises(ValueError):
        he_init(LayerSpec("dense", in_features=0, units=3), 0)


def test_shape_errors():
    spec = LayerSpec("conv2d", in_channels=3, out_channels=1)
    with pytest.raises(ShapeError):
        layer_forward(spec, he_init(spec, 0), np.zeros((2, 4, 4)))
    dense = LayerSpec("dense", in_features=4, units=2)
    with pytest.raises(ShapeError):
        layer_forward(dense, he_init(dense, 0), np.zeros(5))


def test_unknown_layer_kind():
    with pytest.raises(ValueError):
        LayerSpec("batchnorm")
