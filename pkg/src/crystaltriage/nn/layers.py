"""Layer primitives: forward/backward pairs over NCHW float arrays.

Convolution and pooling share one lowering: a strided window view turns each
sliding window into a GEMM row (im2col); the matching backward scatters
window gradients back with a small kernel-position loop, which stays
vectorized over batch and space.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass
class Param:
    """A learnable array and its gradient accumulator."""
    name: str
    value: np.ndarray
    grad: np.ndarray = field(init=False)

    def __post_init__(self):
        self.grad = np.zeros_like(self.value)


def _pair(v) -> tuple[int, int]:
    return (v, v) if isinstance(v, int) else (int(v[0]), int(v[1]))


def _windows(xp: np.ndarray, kh: int, kw: int, sh: int, sw: int):
    """View of all kh x kw sliding windows: (N, C, OH, OW, KH, KW)."""
    n, c, hp, wp = xp.shape
    oh = (hp - kh) // sh + 1
    ow = (wp - kw) // sw + 1
    sn, sc, sy, sx = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp, shape=(n, c, oh, ow, kh, kw),
        strides=(sn, sc, sy * sh, sx * sw, sy, sx), writeable=False)
    return view, oh, ow


def _fold(dwin: np.ndarray, padded_shape, sh: int, sw: int) -> np.ndarray:
    """Scatter-add window gradients (N, C, OH, OW, KH, KW) back onto the
    padded input, honoring overlap."""
    n, c, oh, ow, kh, kw = dwin.shape
    dxp = np.zeros(padded_shape, dtype=dwin.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + sh * oh:sh, j:j + sw * ow:sw] += dwin[:, :, :, :, i, j]
    return dxp


def _pad(x: np.ndarray, ph: int, pw: int, value: float = 0.0) -> np.ndarray:
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)),
                  constant_values=value)


class Layer:
    """Base interface; containers walk children() and params()."""

    name: str = ""

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[Param]:
        return []

    def buffers(self) -> list[tuple[str, np.ndarray]]:
        return []

    def children(self) -> list["Layer"]:
        return []

    def __call__(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        return self.forward(x, training)


class Conv2d(Layer):
    def __init__(self, in_channels: int, out_channels: int, kernel, stride=1,
                 padding=0, bias: bool = True, dtype=np.float32):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = _pair(kernel)
        self.stride = _pair(stride)
        self.padding = _pair(padding)
        kh, kw = self.kernel
        self.weight = Param("weight",
                            np.zeros((out_channels, in_channels, kh, kw), dtype))
        self.bias = Param("bias", np.zeros(out_channels, dtype)) if bias else None
        self._cache = None

    def init(self, rng: np.random.Generator) -> None:
        fan_in = self.in_channels * self.kernel[0] * self.kernel[1]
        std = np.sqrt(2.0 / fan_in)
        self.weight.value[...] = rng.normal(0.0, std, self.weight.value.shape)

    def forward(self, x, training):
        n = x.shape[0]
        kh, kw = self.kernel
        sh, sw = self.stride
        xp = _pad(x, *self.padding)
        win, oh, ow = _windows(xp, kh, kw, sh, sw)
        col = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5))
        col = col.reshape(n * oh * ow, -1)
        w2 = self.weight.value.reshape(self.out_channels, -1)
        out = col @ w2.T
        if self.bias is not None:
            out += self.bias.value
        self._cache = (col, xp.shape, oh, ow, n)
        return out.reshape(n, oh, ow, self.out_channels).transpose(0, 3, 1, 2)

    def backward(self, grad):
        col, padded_shape, oh, ow, n = self._cache
        kh, kw = self.kernel
        sh, sw = self.stride
        ph, pw = self.padding
        gr = np.ascontiguousarray(grad.transpose(0, 2, 3, 1)).reshape(n * oh * ow, -1)
        w2 = self.weight.value.reshape(self.out_channels, -1)
        self.weight.grad += (gr.T @ col).reshape(self.weight.value.shape)
        if self.bias is not None:
            self.bias.grad += gr.sum(axis=0)
        dcol = gr @ w2
        dwin = dcol.reshape(n, oh, ow, self.in_channels, kh, kw).transpose(0, 3, 1, 2, 4, 5)
        dxp = _fold(dwin, padded_shape, sh, sw)
        if ph or pw:
            h, w = padded_shape[2] - 2 * ph, padded_shape[3] - 2 * pw
            return dxp[:, :, ph:ph + h, pw:pw + w]
        return dxp

    def params(self):
        return [self.weight] + ([self.bias] if self.bias is not None else [])


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int, bias: bool = True,
                 dtype=np.float32):
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Param("weight", np.zeros((out_features, in_features), dtype))
        self.bias = Param("bias", np.zeros(out_features, dtype)) if bias else None
        self._x = None

    def init(self, rng: np.random.Generator) -> None:
        std = np.sqrt(2.0 / self.in_features)
        self.weight.value[...] = rng.normal(0.0, std, self.weight.value.shape)

    def forward(self, x, training):
        self._x = x
        out = x @ self.weight.value.T
        if self.bias is not None:
            out += self.bias.value
        return out

    def backward(self, grad):
        self.weight.grad += grad.T @ self._x
        if self.bias is not None:
            self.bias.grad += grad.sum(axis=0)
        return grad @ self.weight.value

    def params(self):
        return [self.weight] + ([self.bias] if self.bias is not None else [])


class ReLU(Layer):
    def forward(self, x, training):
        self._mask = x > 0
        return np.where(self._mask, x, 0)

    def backward(self, grad):
        return np.where(self._mask, grad, 0)


class MaxPool2d(Layer):
    def __init__(self, kernel, stride=None, padding=0):
        self.kernel = _pair(kernel)
        self.stride = _pair(stride) if stride is not None else self.kernel
        self.padding = _pair(padding)
        self._cache = None

    def forward(self, x, training):
        kh, kw = self.kernel
        sh, sw = self.stride
        # pad with -inf so padded cells never win the max
        xp = _pad(x, *self.padding, value=-np.inf) if any(self.padding) else x
        win, oh, ow = _windows(xp, kh, kw, sh, sw)
        flat = win.reshape(*win.shape[:4], kh * kw)
        arg = flat.argmax(axis=4)
        out = np.take_along_axis(flat, arg[..., None], axis=4)[..., 0]
        self._cache = (arg, xp.shape, x.shape, oh, ow)
        return out

    def backward(self, grad):
        arg, padded_shape, orig_shape, oh, ow = self._cache
        kh, kw = self.kernel
        sh, sw = self.stride
        ph, pw = self.padding
        n, c = orig_shape[:2]
        dflat = np.zeros((n, c, oh, ow, kh * kw), dtype=grad.dtype)
        np.put_along_axis(dflat, arg[..., None], grad[..., None], axis=4)
        dwin = dflat.reshape(n, c, oh, ow, kh, kw)
        dxp = _fold(dwin, padded_shape, sh, sw)
        if ph or pw:
            return dxp[:, :, ph:ph + orig_shape[2], pw:pw + orig_shape[3]]
        return dxp


class AvgPool2d(Layer):
    """Average pooling; padded cells count toward the divisor."""

    def __init__(self, kernel, stride=None, padding=0):
        self.kernel = _pair(kernel)
        self.stride = _pair(stride) if stride is not None else self.kernel
        self.padding = _pair(padding)

    def forward(self, x, training):
        kh, kw = self.kernel
        xp = _pad(x, *self.padding)
        win, oh, ow = _windows(xp, kh, kw, *self.stride)
        self._cache = (xp.shape, x.shape, oh, ow)
        return win.mean(axis=(4, 5))

    def backward(self, grad):
        padded_shape, orig_shape, oh, ow = self._cache
        kh, kw = self.kernel
        ph, pw = self.padding
        share = grad / (kh * kw)
        dwin = np.broadcast_to(share[..., None, None],
                               share.shape + (kh, kw))
        dxp = _fold(dwin, padded_shape, *self.stride)
        if ph or pw:
            return dxp[:, :, ph:ph + orig_shape[2], pw:pw + orig_shape[3]]
        return dxp


class GlobalAvgPool(Layer):
    def forward(self, x, training):
        self._shape = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, grad):
        n, c, h, w = self._shape
        return np.broadcast_to(grad[:, :, None, None] / (h * w),
                               self._shape).astype(grad.dtype, copy=True)


class Flatten(Layer):
    def forward(self, x, training):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Dropout(Layer):
    def __init__(self, p: float, seed: int = 0):
        self.p = p
        self._mask = None
        self.reseed(seed)

    def reseed(self, seed: int) -> None:
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def forward(self, x, training):
        if not training or self.p == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.p
        self._mask = (self._rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, grad):
        if self._mask is None:
            return grad
        return grad * self._mask


class BatchNorm2d(Layer):
    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.1,
                 dtype=np.float32):
        self.channels = channels
        self.eps = eps
        self.momentum = momentum
        self.gamma = Param("gamma", np.ones(channels, dtype))
        self.beta = Param("beta", np.zeros(channels, dtype))
        self.running_mean = np.zeros(channels, dtype)
        self.running_var = np.ones(channels, dtype)
        self._cache = None

    def forward(self, x, training):
        g = self.gamma.value[None, :, None, None]
        b = self.beta.value[None, :, None, None]
        if training:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            self.running_mean += self.momentum * (mean - self.running_mean)
            self.running_var += self.momentum * (var - self.running_var)
        else:
            mean, var = self.running_mean, self.running_var
        ivar = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * ivar[None, :, None, None]
        self._cache = (xhat, ivar, training)
        return g * xhat + b

    def backward(self, grad):
        xhat, ivar, training = self._cache
        self.gamma.grad += (grad * xhat).sum(axis=(0, 2, 3))
        self.beta.grad += grad.sum(axis=(0, 2, 3))
        g = self.gamma.value[None, :, None, None]
        dxhat = grad * g
        if not training:
            return dxhat * ivar[None, :, None, None]
        n, _, h, w = grad.shape
        m = n * h * w
        sum_dxhat = dxhat.sum(axis=(0, 2, 3), keepdims=True)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        dx = (dxhat - sum_dxhat / m - xhat * sum_dxhat_xhat / m) \
            * ivar[None, :, None, None]
        return dx

    def params(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [("running_mean", self.running_mean),
                ("running_var", self.running_var)]


class Sequential(Layer):
    def __init__(self, layers: Sequence[Layer]):
        self.layers = list(layers)

    def forward(self, x, training):
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def children(self):
        return self.layers


class SubsampleZeroPad(Layer):
    """Parameter-free projection shortcut: subsample spatially by stride and
    zero-pad new channels (identity mapping on the carried channels)."""

    def __init__(self, in_channels: int, out_channels: int, stride: int = 2):
        if out_channels < in_channels:
            raise ValueError("cannot drop channels in a shortcut")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride

    def forward(self, x, training):
        self._shape = x.shape
        sub = x[:, :, ::self.stride, ::self.stride]
        extra = self.out_channels - self.in_channels
        if extra == 0:
            return sub
        pad = np.zeros((x.shape[0], extra) + sub.shape[2:], dtype=x.dtype)
        return np.concatenate([sub, pad], axis=1)

    def backward(self, grad):
        dx = np.zeros(self._shape, dtype=grad.dtype)
        dx[:, :, ::self.stride, ::self.stride] = grad[:, :self.in_channels]
        return dx


class Residual(Layer):
    """out = branch(x) + shortcut(x); shortcut defaults to the identity."""

    def __init__(self, branch: Layer, shortcut: Optional[Layer] = None):
        self.branch = branch
        self.shortcut = shortcut

    def forward(self, x, training):
        out = self.branch.forward(x, training)
        skip = self.shortcut.forward(x, training) if self.shortcut else x
        return out + skip

    def backward(self, grad):
        db = self.branch.backward(grad)
        ds = self.shortcut.backward(grad) if self.shortcut else grad
        return db + ds

    def children(self):
        return [self.branch] + ([self.shortcut] if self.shortcut else [])


class Concat(Layer):
    """Run branches on the same input and concatenate along channels."""

    def __init__(self, branches: Sequence[Layer]):
        self.branches = list(branches)
        self._sizes = None

    def forward(self, x, training):
        outs = [b.forward(x, training) for b in self.branches]
        self._sizes = [o.shape[1] for o in outs]
        return np.concatenate(outs, axis=1)

    def backward(self, grad):
        total = None
        start = 0
        for branch, size in zip(self.branches, self._sizes):
            piece = branch.backward(grad[:, start:start + size])
            total = piece if total is None else total + piece
            start += size
        return total

    def children(self):
        return self.branches


def assign_names(root: Layer, prefix: str = "") -> None:
    """Give every layer a stable dotted-path name for checkpoints."""
    root.name = prefix or "net"
    for i, child in enumerate(root.children()):
        assign_names(child, f"{root.name}.{i}")


def iter_layers(root: Layer):
    yield root
    for child in root.children():
        yield from iter_layers(child)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy; returns (loss, dloss/dlogits)."""
    n = logits.shape[0]
    probs = softmax(logits)
    picked = probs[np.arange(n), labels]
    # smallest normal for the working dtype; 1e-300 would underflow in float32
    floor = np.finfo(probs.dtype).tiny
    loss = float(-np.log(np.maximum(picked, floor)).mean())
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n
