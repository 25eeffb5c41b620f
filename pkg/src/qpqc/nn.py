"""Minimal dense/convolutional layers with exact backpropagation.

Single-sample semantics: conv-family layers take (C, H, W) arrays, dense
layers take flat vectors. Conv2D is cross-correlation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sim import ShapeError

LAYER_KINDS = ("conv2d", "dense", "relu", "leaky_relu", "maxpool2d",
               "global_avg_pool", "flatten", "softmax")


@dataclass
class LayerSpec:
    kind: str
    in_channels: int = 0
    out_channels: int = 0
    kernel: int = 3
    stride: int = 1
    padding: int = 0
    in_features: int = 0
    units: int = 0
    slope: float = 0.01
    pool: int = 2

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")


def he_init(spec: LayerSpec, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    if spec.kind == "conv2d":
        fan_in = spec.in_channels * spec.kernel * spec.kernel
        if fan_in == 0:
            raise ValueError("zero fan-in")
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in),
                       size=(spec.out_channels, fan_in))
        return {"w": w, "b": np.zeros(spec.out_channels)}
    if spec.kind == "dense":
        if spec.in_features == 0:
            raise ValueError("zero fan-in")
        w = rng.normal(0.0, np.sqrt(2.0 / spec.in_features),
                       size=(spec.units, spec.in_features))
        return {"w": w, "b": np.zeros(spec.units)}
    return {}


def conv_output_hw(h: int, w: int, kernel: int, stride: int,
                   padding: int) -> tuple[int, int]:
    return ((h + 2 * padding - kernel) // stride + 1,
            (w + 2 * padding - kernel) // stride + 1)


def _im2col(x: np.ndarray, kernel: int, stride: int,
            padding: int) -> tuple[np.ndarray, tuple]:
    c, h, w = x.shape
    hp, wp = h + 2 * padding, w + 2 * padding
    xp = np.zeros((c, hp, wp), dtype=x.dtype)
    xp[:, padding:padding + h, padding:padding + w] = x
    ho, wo = conv_output_hw(h, w, kernel, stride, padding)
    cols = np.empty((c * kernel * kernel, ho * wo), dtype=x.dtype)
    col = 0
    for i in range(ho):
        for j in range(wo):
            patch = xp[:, i * stride:i * stride + kernel,
                       j * stride:j * stride + kernel]
            cols[:, col] = patch.ravel()
            col += 1
    return cols, (c, h, w, hp, wp, ho, wo)


def _col2im(d_cols: np.ndarray, kernel: int, stride: int, padding: int,
            dims: tuple) -> np.ndarray:
    c, h, w, hp, wp, ho, wo = dims
    dxp = np.zeros((c, hp, wp))
    col = 0
    for i in range(ho):
        for j in range(wo):
            dxp[:, i * stride:i * stride + kernel,
                j * stride:j * stride + kernel] += \
                d_cols[:, col].reshape(c, kernel, kernel)
            col += 1
    return dxp[:, padding:padding + h, padding:padding + w]


def layer_forward(spec: LayerSpec, weights: dict, x: np.ndarray
                  ) -> tuple[np.ndarray, tuple]:
    if spec.kind == "conv2d":
        if x.ndim != 3 or x.shape[0] != spec.in_channels:
            raise ShapeError(f"conv2d expects ({spec.in_channels}, H, W), "
                             f"got {x.shape}")
        cols, dims = _im2col(x, spec.kernel, spec.stride, spec.padding)
        out = weights["w"] @ cols + weights["b"][:, None]
        ho, wo = dims[5], dims[6]
        return out.reshape(spec.out_channels, ho, wo), (cols, dims)
    if spec.kind == "dense":
        if x.size != spec.in_features:
            raise ShapeError(f"dense expects {spec.in_features} features, "
                             f"got {x.size}")
        x = x.ravel()
        return weights["w"] @ x + weights["b"], (x,)
    if spec.kind == "relu":
        return np.maximum(x, 0.0), (x,)
    if spec.kind == "leaky_relu":
        return np.where(x > 0, x, spec.slope * x), (x,)
    if spec.kind == "maxpool2d":
        c, h, w = x.shape
        p = spec.pool
        ho, wo = h // p, w // p
        view = x[:, :ho * p, :wo * p].reshape(c, ho, p, wo, p)
        flat = view.transpose(0, 1, 3, 2, 4).reshape(c, ho, wo, p * p)
        arg = flat.argmax(axis=-1)
        out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
        return out, (x.shape, arg)
    if spec.kind == "global_avg_pool":
        return x.mean(axis=(1, 2)), (x.shape,)
    if spec.kind == "flatten":
        return x.ravel().copy(), (x.shape,)
    if spec.kind == "softmax":
        shifted = x - x.max()
        e = np.exp(shifted)
        p = e / e.sum()
        return p, (p,)
    raise AssertionError(spec.kind)


def layer_backward(spec: LayerSpec, weights: dict, cache: tuple,
                   d_out: np.ndarray) -> tuple[np.ndarray, dict]:
    if spec.kind == "conv2d":
        cols, dims = cache
        dy = d_out.reshape(spec.out_channels, -1)
        d_w = dy @ cols.T
        d_b = dy.sum(axis=1)
        d_cols = weights["w"].T @ dy
        return (_col2im(d_cols, spec.kernel, spec.stride, spec.padding,
                        dims), {"w": d_w, "b": d_b})
    if spec.kind == "dense":
        (x,) = cache
        return weights["w"].T @ d_out, {"w": np.outer(d_out, x),
                                        "b": d_out.copy()}
    if spec.kind == "relu":
        (x,) = cache
        return d_out * (x > 0), {}
    if spec.kind == "leaky_relu":
        (x,) = cache
        return d_out * np.where(x > 0, 1.0, spec.slope), {}
    if spec.kind == "maxpool2d":
        shape, arg = cache
        c, h, w = shape
        p = spec.pool
        ho, wo = h // p, w // p
        dx = np.zeros(shape)
        view = dx[:, :ho * p, :wo * p].reshape(c, ho, p, wo, p)
        scatter = np.zeros((c, ho, wo, p * p))
        np.put_along_axis(scatter, arg[..., None], d_out[..., None], axis=-1)
        view += scatter.reshape(c, ho, wo, p, p).transpose(0, 1, 3, 2, 4)
        return dx, {}
    if spec.kind == "global_avg_pool":
        (shape,) = cache
        c, h, w = shape
        return np.repeat(d_out, h * w).reshape(c, h, w) / (h * w), {}
    if spec.kind == "flatten":
        (shape,) = cache
        return d_out.reshape(shape), {}
    if spec.kind == "softmax":
        (p,) = cache
        return p * (d_out - np.dot(d_out, p)), {}
    raise AssertionError(spec.kind)
