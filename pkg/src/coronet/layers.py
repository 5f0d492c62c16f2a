"""Layer specifications, parameter shapes, and forward/backward kernels.

Every kernel is a pure function of ``(input, spec, params, mode, seed)``.
Backward functions take the forward *input* rather than a cache and recompute
whatever intermediate values they need; the compute graph therefore only has
to remember layer inputs.

Convolutions are cross-correlations (no kernel flip).  Images are N x H x W x C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, InputError, ShapeError
from .tensor import elementwise_zip

TRAIN = "train"
INFER = "infer"
_MODES = (TRAIN, INFER)
_PADDINGS = ("valid", "same")


def _positive(name, value):
    if int(value) != value or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")


def _check_padding(padding):
    if padding not in _PADDINGS:
        raise ConfigError(f"padding must be 'valid' or 'same', got {padding!r}")


@dataclass(frozen=True)
class Conv2D:
    in_channels: int
    out_channels: int
    kernel_h: int
    kernel_w: int
    stride: int = 1
    padding: str = "valid"
    use_bias: bool = True

    def __post_init__(self):
        for name in ("in_channels", "out_channels", "kernel_h", "kernel_w", "stride"):
            _positive(name, getattr(self, name))
        _check_padding(self.padding)


@dataclass(frozen=True)
class SeparableConv2D:
    """Depthwise k_h x k_w convolution per channel, then a 1x1 pointwise mix."""

    in_channels: int
    out_channels: int
    kernel_h: int
    kernel_w: int
    stride: int = 1
    padding: str = "valid"
    use_bias: bool = True

    def __post_init__(self):
        for name in ("in_channels", "out_channels", "kernel_h", "kernel_w", "stride"):
            _positive(name, getattr(self, name))
        _check_padding(self.padding)


@dataclass(frozen=True)
class BatchNorm:
    channels: int
    epsilon: float = 1e-3
    momentum: float = 0.99

    def __post_init__(self):
        _positive("channels", self.channels)
        if self.epsilon < 0 or not 0.0 <= self.momentum <= 1.0:
            raise ConfigError("BatchNorm needs epsilon >= 0 and momentum in [0, 1]")


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class MaxPool2D:
    pool_h: int
    pool_w: int
    stride: int = 1
    padding: str = "valid"

    def __post_init__(self):
        for name in ("pool_h", "pool_w", "stride"):
            _positive(name, getattr(self, name))
        _check_padding(self.padding)


@dataclass(frozen=True)
class GlobalAvgPool2D:
    pass


@dataclass(frozen=True)
class Dense:
    in_features: int
    out_features: int
    use_bias: bool = True

    def __post_init__(self):
        _positive("in_features", self.in_features)
        _positive("out_features", self.out_features)


@dataclass(frozen=True)
class Dropout:
    rate: float

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"dropout rate must lie in [0, 1], got {self.rate}")


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class ResidualAdd:
    pass


@dataclass(frozen=True)
class Softmax:
    pass


LayerSpec = Union[
    Conv2D, SeparableConv2D, BatchNorm, ReLU, MaxPool2D, GlobalAvgPool2D,
    Dense, Dropout, Flatten, ResidualAdd, Softmax,
]


# ---------------------------------------------------------------------------
# parameters


def param_shapes(spec) -> dict[str, tuple[tuple[int, ...], bool]]:
    """Map parameter name -> (shape, trainable) for ``spec``."""
    if isinstance(spec, Conv2D):
        out = {"kernel": ((spec.kernel_h, spec.kernel_w, spec.in_channels, spec.out_channels), True)}
        if spec.use_bias:
            out["bias"] = ((spec.out_channels,), True)
        return out
    if isinstance(spec, SeparableConv2D):
        out = {
            "depthwise_kernel": ((spec.kernel_h, spec.kernel_w, spec.in_channels), True),
            "pointwise_kernel": ((1, 1, spec.in_channels, spec.out_channels), True),
        }
        if spec.use_bias:
            out["bias"] = ((spec.out_channels,), True)
        return out
    if isinstance(spec, BatchNorm):
        c = (spec.channels,)
        return {
            "gamma": (c, True),
            "beta": (c, True),
            "moving_mean": (c, False),
            "moving_variance": (c, False),
        }
    if isinstance(spec, Dense):
        out = {"weight": ((spec.in_features, spec.out_features), True)}
        if spec.use_bias:
            out["bias"] = ((spec.out_features,), True)
        return out
    return {}


def init_params(spec, rng: np.random.Generator, dtype=np.float32) -> dict[str, np.ndarray]:
    """He-uniform for convolutions, Glorot-uniform for dense, zero biases,
    unit gamma / zero beta, and moving statistics at (0, 1)."""
    params = {}
    for name, (shape, _) in param_shapes(spec).items():
        if name in ("bias", "beta", "moving_mean"):
            value = np.zeros(shape)
        elif name in ("gamma", "moving_variance"):
            value = np.ones(shape)
        elif isinstance(spec, Dense):
            limit = math.sqrt(6.0 / (spec.in_features + spec.out_features))
            value = rng.uniform(-limit, limit, size=shape)
        else:
            if name == "depthwise_kernel":
                fan_in = spec.kernel_h * spec.kernel_w
            elif name == "pointwise_kernel":
                fan_in = spec.in_channels
            else:
                fan_in = spec.kernel_h * spec.kernel_w * spec.in_channels
            limit = math.sqrt(6.0 / fan_in)
            value = rng.uniform(-limit, limit, size=shape)
        params[name] = value.astype(dtype)
    return params


def count_formula(spec) -> tuple[int, int]:
    """Closed-form (total, non_trainable) parameter count for ``spec``."""
    if isinstance(spec, Conv2D):
        n = spec.kernel_h * spec.kernel_w * spec.in_channels * spec.out_channels
        return n + (spec.out_channels if spec.use_bias else 0), 0
    if isinstance(spec, SeparableConv2D):
        n = spec.kernel_h * spec.kernel_w * spec.in_channels + spec.in_channels * spec.out_channels
        return n + (spec.out_channels if spec.use_bias else 0), 0
    if isinstance(spec, Dense):
        n = spec.in_features * spec.out_features
        return n + (spec.out_features if spec.use_bias else 0), 0
    if isinstance(spec, BatchNorm):
        return 4 * spec.channels, 2 * spec.channels
    return 0, 0


def _check_params(spec, params):
    for name, (shape, _) in param_shapes(spec).items():
        if name not in params:
            raise ShapeError(f"missing parameter {name!r} for {type(spec).__name__}")
        if tuple(params[name].shape) != shape:
            raise ShapeError(
                f"parameter {name!r} has shape {tuple(params[name].shape)}, expected {shape}"
            )


# ---------------------------------------------------------------------------
# spatial helpers


def output_extent(size: int, k: int, stride: int, padding: str) -> tuple[int, int, int]:
    """Return (output extent, pad before, pad after) along one spatial axis."""
    if padding == "valid":
        if size < k:
            raise ShapeError(f"window {k} larger than input extent {size}")
        return (size - k) // stride + 1, 0, 0
    out = -(-size // stride)
    total = max((out - 1) * stride + k - size, 0)
    if size + total < k:
        raise ShapeError(f"window {k} larger than padded input extent {size + total}")
    return out, total // 2, total - total // 2


def _geometry(x, kh, kw, stride, padding):
    if x.ndim != 4:
        raise ShapeError(f"expected an N x H x W x C tensor, got shape {x.shape}")
    ho, top, bottom = output_extent(x.shape[1], kh, stride, padding)
    wo, left, right = output_extent(x.shape[2], kw, stride, padding)
    return ho, wo, ((0, 0), (top, bottom), (left, right), (0, 0))


def _pad(x, pads, value=0.0):
    if all(p == (0, 0) for p in pads):
        return x
    return np.pad(x, pads, constant_values=value)


def _crop(xp, pads, shape):
    (_, _), (t, _), (l, _), (_, _) = pads
    return xp[:, t:t + shape[1], l:l + shape[2], :]


def _tap(xp, m, k, ho, wo, stride):
    """Strided view of ``xp`` seen by kernel tap (m, k) across all outputs."""
    return xp[:, m:m + stride * (ho - 1) + 1:stride, k:k + stride * (wo - 1) + 1:stride, :]


def _im2col(xp, kh, kw, ho, wo, stride):
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    win = win[:, :stride * (ho - 1) + 1:stride, :stride * (wo - 1) + 1:stride]
    # (N, Ho, Wo, C, kh, kw) -> (N*Ho*Wo, kh*kw*C) to match kernel layout
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(-1, kh * kw * xp.shape[3])


# ---------------------------------------------------------------------------
# convolution


def _conv(x, kernel, stride, padding):
    kh, kw, cin, cout = kernel.shape
    ho, wo, pads = _geometry(x, kh, kw, stride, padding)
    n = x.shape[0]
    if kh == kw == 1:
        cols = x[:, :stride * (ho - 1) + 1:stride, :stride * (wo - 1) + 1:stride, :].reshape(-1, cin)
    else:
        cols = _im2col(_pad(x, pads), kh, kw, ho, wo, stride)
    return (cols @ kernel.reshape(-1, cout)).reshape(n, ho, wo, cout)


def _conv_backward(x, kernel, stride, padding, grad):
    kh, kw, cin, cout = kernel.shape
    ho, wo, pads = _geometry(x, kh, kw, stride, padding)
    g2 = grad.reshape(-1, cout)
    if kh == kw == 1:
        xs = x[:, :stride * (ho - 1) + 1:stride, :stride * (wo - 1) + 1:stride, :]
        dkernel = (xs.reshape(-1, cin).T @ g2).reshape(kernel.shape)
        dxs = (g2 @ kernel.reshape(cin, cout).T).reshape(xs.shape)
        if stride == 1:
            return dxs, dkernel
        dx = np.zeros_like(x)
        dx[:, :stride * (ho - 1) + 1:stride, :stride * (wo - 1) + 1:stride, :] = dxs
        return dx, dkernel
    xp = _pad(x, pads)
    cols = _im2col(xp, kh, kw, ho, wo, stride)
    dkernel = (cols.T @ g2).reshape(kernel.shape)
    dcols = (g2 @ kernel.reshape(-1, cout).T).reshape(x.shape[0], ho, wo, kh, kw, cin)
    dxp = np.zeros_like(xp)
    for m in range(kh):
        for k in range(kw):
            _tap(dxp, m, k, ho, wo, stride)[...] += dcols[:, :, :, m, k, :]
    return _crop(dxp, pads, x.shape), dkernel


def _depthwise(x, dkernel, stride, padding):
    kh, kw, _ = dkernel.shape
    ho, wo, pads = _geometry(x, kh, kw, stride, padding)
    xp = _pad(x, pads)
    out = np.zeros((x.shape[0], ho, wo, x.shape[3]), dtype=np.result_type(x, dkernel))
    for m in range(kh):
        for k in range(kw):
            out += _tap(xp, m, k, ho, wo, stride) * dkernel[m, k]
    return out


def _depthwise_backward(x, dkernel, stride, padding, grad):
    kh, kw, _ = dkernel.shape
    ho, wo, pads = _geometry(x, kh, kw, stride, padding)
    xp = _pad(x, pads)
    dxp = np.zeros_like(xp)
    dk = np.zeros_like(dkernel)
    for m in range(kh):
        for k in range(kw):
            dk[m, k] = (_tap(xp, m, k, ho, wo, stride) * grad).sum(axis=(0, 1, 2))
            _tap(dxp, m, k, ho, wo, stride)[...] += grad * dkernel[m, k]
    return _crop(dxp, pads, x.shape), dk


def _check_channels(x, channels, what):
    if x.ndim != 4:
        raise ShapeError(f"{what} expects N x H x W x C input, got shape {x.shape}")
    if x.shape[3] != channels:
        raise ShapeError(f"{what} expects {channels} input channels, got {x.shape[3]}")


def conv2d_forward(x, spec: Conv2D, params):
    _check_channels(x, spec.in_channels, "Conv2D")
    _check_params(spec, params)
    out = _conv(x, params["kernel"], spec.stride, spec.padding)
    if spec.use_bias:
        out += params["bias"]
    return out


def conv2d_backward(x, grad, spec: Conv2D, params):
    dx, dkernel = _conv_backward(x, params["kernel"], spec.stride, spec.padding, grad)
    grads = {"kernel": dkernel}
    if spec.use_bias:
        grads["bias"] = grad.sum(axis=(0, 1, 2))
    return dx, grads


def depthwise_conv2d(x, kernel, stride=1, padding="valid"):
    """Per-channel spatial convolution with a k_h x k_w x C kernel."""
    if x.ndim != 4 or kernel.ndim != 3 or kernel.shape[2] != x.shape[3]:
        raise ShapeError(f"depthwise kernel {kernel.shape} does not fit input {x.shape}")
    return _depthwise(x, kernel, stride, padding)


def separable_conv2d_forward(x, spec: SeparableConv2D, params):
    _check_channels(x, spec.in_channels, "SeparableConv2D")
    _check_params(spec, params)
    mid = _depthwise(x, params["depthwise_kernel"], spec.stride, spec.padding)
    out = _conv(mid, params["pointwise_kernel"], 1, "valid")
    if spec.use_bias:
        out += params["bias"]
    return out


def separable_conv2d_backward(x, grad, spec: SeparableConv2D, params):
    mid = _depthwise(x, params["depthwise_kernel"], spec.stride, spec.padding)
    dmid, dpoint = _conv_backward(mid, params["pointwise_kernel"], 1, "valid", grad)
    dx, ddepth = _depthwise_backward(x, params["depthwise_kernel"], spec.stride, spec.padding, dmid)
    grads = {"depthwise_kernel": ddepth, "pointwise_kernel": dpoint}
    if spec.use_bias:
        grads["bias"] = grad.sum(axis=(0, 1, 2))
    return dx, grads


# ---------------------------------------------------------------------------
# pooling


def _pool_windows(x, spec: MaxPool2D):
    ho, wo, pads = _geometry(x, spec.pool_h, spec.pool_w, spec.stride, spec.padding)
    xp = _pad(x, pads, value=-np.inf)
    win = sliding_window_view(xp, (spec.pool_h, spec.pool_w), axis=(1, 2))
    s = spec.stride
    return win[:, :s * (ho - 1) + 1:s, :s * (wo - 1) + 1:s], xp, pads, ho, wo


def maxpool2d_forward(x, spec: MaxPool2D):
    win, *_ = _pool_windows(x, spec)
    return win.max(axis=(-2, -1))


def maxpool2d_backward(x, grad, spec: MaxPool2D):
    win, xp, pads, ho, wo = _pool_windows(x, spec)
    # ties route to the first maximum in row-major window order
    idx = win.reshape(win.shape[:4] + (-1,)).argmax(axis=-1)
    dxp = np.zeros_like(xp)
    for m in range(spec.pool_h):
        for k in range(spec.pool_w):
            hit = idx == m * spec.pool_w + k
            _tap(dxp, m, k, ho, wo, spec.stride)[...] += np.where(hit, grad, 0)
    return _crop(dxp, pads, x.shape)


def global_avg_pool_forward(x):
    if x.ndim != 4:
        raise ShapeError(f"GlobalAvgPool2D expects N x H x W x C input, got shape {x.shape}")
    return x.mean(axis=(1, 2))


def global_avg_pool_backward(x, grad):
    scale = 1.0 / (x.shape[1] * x.shape[2])
    return np.broadcast_to((grad * scale)[:, None, None, :], x.shape).astype(x.dtype, copy=True)


# ---------------------------------------------------------------------------
# pointwise and dense layers


def relu(x):
    return np.maximum(x, 0)


def relu_backward(x, grad):
    return np.where(x > 0, grad, 0).astype(grad.dtype, copy=False)


def dense_forward(x, spec: Dense, params):
    if x.ndim != 2 or x.shape[1] != spec.in_features:
        raise ShapeError(f"Dense expects N x {spec.in_features} input, got shape {x.shape}")
    _check_params(spec, params)
    out = x @ params["weight"]
    if spec.use_bias:
        out += params["bias"]
    return out


def dense_backward(x, grad, spec: Dense, params):
    grads = {"weight": x.T @ grad}
    if spec.use_bias:
        grads["bias"] = grad.sum(axis=0)
    return grad @ params["weight"].T, grads


def _bn_axes(x, spec: BatchNorm):
    if x.shape[-1] != spec.channels:
        raise ShapeError(f"BatchNorm expects {spec.channels} channels, got shape {x.shape}")
    return tuple(range(x.ndim - 1))


def batchnorm_forward(x, spec: BatchNorm, params, mode=INFER):
    """Normalize over every axis but the last (channel) one.

    Moving statistics are not touched here; see :func:`batchnorm_moving_update`.
    """
    axes = _bn_axes(x, spec)
    if mode == TRAIN:
        if x.size == 0:
            raise InputError("BatchNorm in train mode needs a non-empty batch")
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
    else:
        mean, var = params["moving_mean"], params["moving_variance"]
    inv = 1.0 / np.sqrt(var + spec.epsilon)
    return ((x - mean) * (params["gamma"] * inv) + params["beta"]).astype(x.dtype, copy=False)


def batchnorm_moving_update(x, spec: BatchNorm, params) -> dict[str, np.ndarray]:
    """New moving statistics after seeing batch ``x`` in train mode."""
    axes = _bn_axes(x, spec)
    if x.size == 0:
        raise InputError("BatchNorm in train mode needs a non-empty batch")
    mom = spec.momentum
    mm, mv = params["moving_mean"], params["moving_variance"]
    return {
        "moving_mean": (mom * mm + (1 - mom) * x.mean(axis=axes)).astype(mm.dtype),
        "moving_variance": (mom * mv + (1 - mom) * x.var(axis=axes)).astype(mv.dtype),
    }


def batchnorm_backward(x, grad, spec: BatchNorm, params, mode=INFER):
    axes = _bn_axes(x, spec)
    gamma = params["gamma"]
    if mode == TRAIN:
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
    else:
        mean, var = params["moving_mean"], params["moving_variance"]
    inv = 1.0 / np.sqrt(var + spec.epsilon)
    xhat = (x - mean) * inv
    dgamma = (grad * xhat).sum(axis=axes)
    dbeta = grad.sum(axis=axes)
    if mode == TRAIN:
        count = x.size // x.shape[-1]
        dx = (gamma * inv / count) * (count * grad - dbeta - xhat * dgamma)
    else:
        dx = grad * (gamma * inv)
    return dx.astype(x.dtype, copy=False), {"gamma": dgamma, "beta": dbeta}


def _dropout_mask(shape, rate, seed):
    rng = np.random.default_rng(seed)
    return rng.random(shape) >= rate


def dropout_forward(x, spec: Dropout, mode=INFER, seed=None):
    """Inverted dropout: survivors are scaled by 1/(1-rate) in train mode."""
    if mode != TRAIN or spec.rate == 0.0:
        return x
    if spec.rate == 1.0:
        return np.zeros_like(x)
    keep = _dropout_mask(x.shape, spec.rate, seed)
    return np.where(keep, x / (1.0 - spec.rate), 0).astype(x.dtype, copy=False)


def dropout_backward(x, grad, spec: Dropout, mode=INFER, seed=None):
    return dropout_forward(grad, spec, mode, seed)


def residual_add(main, skip):
    return elementwise_zip(main, skip, "add")


def flatten(x):
    return x.reshape(x.shape[0], -1)


def softmax(logits):
    if logits.shape[-1] < 1:
        raise ShapeError("softmax needs at least one class")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(probs, grad):
    return probs * (grad - (grad * probs).sum(axis=-1, keepdims=True))


# ---------------------------------------------------------------------------
# uniform dispatch used by the compute graph


def _check_mode(mode):
    if mode not in _MODES:
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")


def forward(spec, inputs, params, mode=INFER, seed=None):
    """Run one layer on its list of inputs."""
    _check_mode(mode)
    x = inputs[0]
    if isinstance(spec, Conv2D):
        return conv2d_forward(x, spec, params)
    if isinstance(spec, SeparableConv2D):
        return separable_conv2d_forward(x, spec, params)
    if isinstance(spec, BatchNorm):
        return batchnorm_forward(x, spec, params, mode)
    if isinstance(spec, ReLU):
        return relu(x)
    if isinstance(spec, MaxPool2D):
        return maxpool2d_forward(x, spec)
    if isinstance(spec, GlobalAvgPool2D):
        return global_avg_pool_forward(x)
    if isinstance(spec, Dense):
        return dense_forward(x, spec, params)
    if isinstance(spec, Dropout):
        return dropout_forward(x, spec, mode, seed)
    if isinstance(spec, Flatten):
        return flatten(x)
    if isinstance(spec, ResidualAdd):
        return residual_add(inputs[0], inputs[1])
    if isinstance(spec, Softmax):
        return softmax(x)
    raise TypeError(f"unknown layer spec {spec!r}")


def backward(spec, inputs, output, grad, params, mode=INFER, seed=None):
    """Return (input gradients, parameter gradients) for one layer."""
    x = inputs[0]
    if isinstance(spec, Conv2D):
        dx, g = conv2d_backward(x, grad, spec, params)
    elif isinstance(spec, SeparableConv2D):
        dx, g = separable_conv2d_backward(x, grad, spec, params)
    elif isinstance(spec, BatchNorm):
        dx, g = batchnorm_backward(x, grad, spec, params, mode)
    elif isinstance(spec, Dense):
        dx, g = dense_backward(x, grad, spec, params)
    elif isinstance(spec, ResidualAdd):
        return [grad, grad], {}
    else:
        dx, g = _STATELESS_BACKWARD[type(spec)](spec, x, output, grad, mode, seed), {}
    return [dx], g


_STATELESS_BACKWARD: dict[type, Callable] = {
    ReLU: lambda spec, x, y, g, mode, seed: relu_backward(x, g),
    MaxPool2D: lambda spec, x, y, g, mode, seed: maxpool2d_backward(x, g, spec),
    GlobalAvgPool2D: lambda spec, x, y, g, mode, seed: global_avg_pool_backward(x, g),
    Dropout: lambda spec, x, y, g, mode, seed: dropout_backward(x, g, spec, mode, seed),
    Flatten: lambda spec, x, y, g, mode, seed: g.reshape(x.shape),
    Softmax: lambda spec, x, y, g, mode, seed: softmax_backward(y, g),
}


def output_shape(spec, shapes):
    """Static shape inference (batch axis included) for graph construction."""
    s = shapes[0]
    if isinstance(spec, (Conv2D, SeparableConv2D)):
        if len(s) != 4 or s[3] != spec.in_channels:
            raise ShapeError(f"{type(spec).__name__} cannot take input shape {s}")
        ho, _, _ = output_extent(s[1], spec.kernel_h, spec.stride, spec.padding)
        wo, _, _ = output_extent(s[2], spec.kernel_w, spec.stride, spec.padding)
        return (s[0], ho, wo, spec.out_channels)
    if isinstance(spec, MaxPool2D):
        if len(s) != 4:
            raise ShapeError(f"MaxPool2D cannot take input shape {s}")
        ho, _, _ = output_extent(s[1], spec.pool_h, spec.stride, spec.padding)
        wo, _, _ = output_extent(s[2], spec.pool_w, spec.stride, spec.padding)
        return (s[0], ho, wo, s[3])
    if isinstance(spec, GlobalAvgPool2D):
        return (s[0], s[3])
    if isinstance(spec, Dense):
        if len(s) != 2 or s[1] != spec.in_features:
            raise ShapeError(f"Dense({spec.in_features}) cannot take input shape {s}")
        return (s[0], spec.out_features)
    if isinstance(spec, BatchNorm):
        if s[-1] != spec.channels:
            raise ShapeError(f"BatchNorm({spec.channels}) cannot take input shape {s}")
        return s
    if isinstance(spec, Flatten):
        return (s[0], math.prod(s[1:]))
    if isinstance(spec, ResidualAdd):
        if shapes[0] != shapes[1]:
            raise ShapeError(f"residual add on mismatched shapes {shapes[0]} and {shapes[1]}")
        return s
    return s
