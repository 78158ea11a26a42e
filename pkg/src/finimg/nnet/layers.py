"""Numpy layers with exact forward/backward passes.

Shape conventions (batch first): dense layers take (N, D); 1D convolution
takes (N, C, L); 2D convolution takes (N, C, H, W). Convolutions are
stride-1 cross-correlations, "valid" by default with an optional "same"
zero-padding mode. Pooling windows do not overlap and floor-truncate.
"""
from __future__ import annotations

import numpy as np


class ShapeMismatchError(ValueError):
    """Raised when a layer receives input of the wrong shape."""


def _check(condition: bool, layer: str, detail: str) -> None:
    if not condition:
        raise ShapeMismatchError(f"{layer}: {detail}")


class Layer:
    """Base layer; parameterless by default.

    needs_input_grad is cleared on the first layer of a network so the
    backward pass can skip the (often dominant) input-gradient work.
    """

    name = "layer"
    needs_input_grad = True

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None = None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[np.ndarray]:
        return []

    def grads(self) -> list[np.ndarray]:
        return []


class Dense(Layer):
    name = "dense"

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        self.weight = weight
        self.bias = bias
        self._x = None

    def forward(self, x, train, rng=None):
        _check(x.ndim == 2 and x.shape[1] == self.weight.shape[0], self.name,
               f"expected (N, {self.weight.shape[0]}), got {x.shape}")
        self._x = x
        return x @ self.weight + self.bias

    def backward(self, grad):
        self._dw = self._x.T @ grad
        self._db = grad.sum(axis=0)
        if not self.needs_input_grad:
            return None
        return grad @ self.weight.T

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self._dw, self._db]


class ReLU(Layer):
    name = "relu"

    def forward(self, x, train, rng=None):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad):
        return np.where(self._mask, grad, 0.0)


class Dropout(Layer):
    """Inverted dropout: active in train mode only."""

    name = "dropout"

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate {rate} outside [0, 1)")
        self.rate = rate
        self._mask = None

    def forward(self, x, train, rng=None):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("dropout in train mode needs an rng")
        self._mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * self._mask

    def backward(self, grad):
        if self._mask is None:
            return grad
        return grad * self._mask


class Flatten(Layer):
    name = "flatten"

    def forward(self, x, train, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


def _pad_amounts(kernel: int) -> tuple[int, int]:
    return (kernel - 1) // 2, kernel - 1 - (kernel - 1) // 2


class Conv1D(Layer):
    name = "conv1d"

    def __init__(self, weight: np.ndarray, bias: np.ndarray, padding: str = "valid"):
        self.weight = weight  # (filters, channels, kernel)
        self.bias = bias
        self.padding = padding

    def forward(self, x, train, rng=None):
        f, c, k = self.weight.shape
        _check(x.ndim == 3 and x.shape[1] == c, self.name,
               f"expected (N, {c}, L), got {x.shape}")
        if self.padding == "same":
            lo, hi = _pad_amounts(k)
            x = np.pad(x, ((0, 0), (0, 0), (lo, hi)))
        _check(x.shape[2] >= k, self.name,
               f"input length {x.shape[2]} shorter than kernel {k}")
        n, _, length = x.shape
        out_len = length - k + 1
        s0, s1, s2 = x.strides
        win = np.lib.stride_tricks.as_strided(x, (n, c, out_len, k), (s0, s1, s2, s2))
        self._cols = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(n * out_len, c * k)
        out = self._cols @ self.weight.reshape(f, c * k).T + self.bias
        self._in_len = length
        return out.reshape(n, out_len, f).transpose(0, 2, 1)

    def backward(self, grad):
        f, c, k = self.weight.shape
        n, _, out_len = grad.shape
        gmat = np.ascontiguousarray(grad.transpose(0, 2, 1)).reshape(n * out_len, f)
        self._dw = (gmat.T @ self._cols).reshape(f, c, k)
        self._db = gmat.sum(axis=0)
        if not self.needs_input_grad:
            return None
        gp = np.pad(grad, ((0, 0), (0, 0), (k - 1, k - 1)))
        s0, s1, s2 = gp.strides
        win = np.lib.stride_tricks.as_strided(gp, (n, f, self._in_len, k), (s0, s1, s2, s2))
        cols_g = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(n * self._in_len, f * k)
        rot = self.weight[:, :, ::-1].transpose(0, 2, 1).reshape(f * k, c)
        dx = (cols_g @ rot).reshape(n, self._in_len, c).transpose(0, 2, 1)
        if self.padding == "same":
            lo, hi = _pad_amounts(k)
            dx = dx[:, :, lo : self._in_len - hi]
        return dx

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self._dw, self._db]


class Conv2D(Layer):
    name = "conv2d"

    def __init__(self, weight: np.ndarray, bias: np.ndarray, padding: str = "valid"):
        self.weight = weight  # (filters, channels, kh, kw)
        self.bias = bias
        self.padding = padding

    def forward(self, x, train, rng=None):
        f, c, kh, kw = self.weight.shape
        _check(x.ndim == 4 and x.shape[1] == c, self.name,
               f"expected (N, {c}, H, W), got {x.shape}")
        if self.padding == "same":
            rlo, rhi = _pad_amounts(kh)
            clo, chi = _pad_amounts(kw)
            x = np.pad(x, ((0, 0), (0, 0), (rlo, rhi), (clo, chi)))
        _check(x.shape[2] >= kh and x.shape[3] >= kw, self.name,
               f"input {x.shape[2]}x{x.shape[3]} smaller than kernel {kh}x{kw}")
        n, _, h, w = x.shape
        oh, ow = h - kh + 1, w - kw + 1
        s0, s1, s2, s3 = x.strides
        win = np.lib.stride_tricks.as_strided(
            x, (n, c, oh, ow, kh, kw), (s0, s1, s2, s3, s2, s3)
        )
        self._cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(
            n * oh * ow, c * kh * kw
        )
        out = self._cols @ self.weight.reshape(f, -1).T + self.bias
        self._in_hw = (h, w)
        return out.reshape(n, oh, ow, f).transpose(0, 3, 1, 2)

    def backward(self, grad):
        f, c, kh, kw = self.weight.shape
        n, _, oh, ow = grad.shape
        h, w = self._in_hw
        gmat = np.ascontiguousarray(grad.transpose(0, 2, 3, 1)).reshape(n * oh * ow, f)
        self._dw = (gmat.T @ self._cols).reshape(f, c, kh, kw)
        self._db = gmat.sum(axis=0)
        if not self.needs_input_grad:
            return None
        gp = np.pad(grad, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
        s0, s1, s2, s3 = gp.strides
        win = np.lib.stride_tricks.as_strided(
            gp, (n, f, h, w, kh, kw), (s0, s1, s2, s3, s2, s3)
        )
        cols_g = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(
            n * h * w, f * kh * kw
        )
        rot = self.weight[:, :, ::-1, ::-1].transpose(0, 2, 3, 1).reshape(f * kh * kw, c)
        dx = (cols_g @ rot).reshape(n, h, w, c).transpose(0, 3, 1, 2)
        if self.padding == "same":
            rlo, rhi = _pad_amounts(kh)
            clo, chi = _pad_amounts(kw)
            dx = dx[:, :, rlo : h - rhi, clo : w - chi]
        return dx

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self._dw, self._db]


class MaxPool1D(Layer):
    name = "maxpool1d"

    def __init__(self, window: int):
        self.window = window

    def forward(self, x, train, rng=None):
        _check(x.ndim == 3, self.name, f"expected (N, C, L), got {x.shape}")
        w = self.window
        n, c, length = x.shape
        out_len = length // w
        _check(out_len > 0, self.name, f"window {w} larger than input {length}")
        xr = x[:, :, : out_len * w].reshape(n, c, out_len, w)
        self._idx = xr.argmax(axis=-1)
        self._in_len = length
        return np.take_along_axis(xr, self._idx[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        n, c, out_len = grad.shape
        w = self.window
        dxr = np.zeros((n, c, out_len, w))
        np.put_along_axis(dxr, self._idx[..., None], grad[..., None], axis=-1)
        dx = np.zeros((n, c, self._in_len))
        dx[:, :, : out_len * w] = dxr.reshape(n, c, out_len * w)
        return dx


class MaxPool2D(Layer):
    name = "maxpool2d"

    def __init__(self, window: int):
        self.window = window

    def forward(self, x, train, rng=None):
        _check(x.ndim == 4, self.name, f"expected (N, C, H, W), got {x.shape}")
        w = self.window
        n, c, h, width = x.shape
        oh, ow = h // w, width // w
        _check(oh > 0 and ow > 0, self.name, f"window {w} larger than input {h}x{width}")
        xr = (
            x[:, :, : oh * w, : ow * w]
            .reshape(n, c, oh, w, ow, w)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, oh, ow, w * w)
        )
        self._idx = xr.argmax(axis=-1)
        self._in_hw = (h, width)
        return np.take_along_axis(xr, self._idx[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        n, c, oh, ow = grad.shape
        w = self.window
        h, width = self._in_hw
        dxr = np.zeros((n, c, oh, ow, w * w))
        np.put_along_axis(dxr, self._idx[..., None], grad[..., None], axis=-1)
        dx = np.zeros((n, c, h, width))
        dx[:, :, : oh * w, : ow * w] = (
            dxr.reshape(n, c, oh, ow, w, w).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, oh * w, ow * w)
        )
        return dx


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class SoftmaxOutput(Layer):
    """Final dense projection to class logits followed by softmax."""

    name = "softmax_output"

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        self.weight = weight
        self.bias = bias

    def forward(self, x, train, rng=None):
        _check(x.ndim == 2 and x.shape[1] == self.weight.shape[0], self.name,
               f"expected (N, {self.weight.shape[0]}), got {x.shape}")
        self._x = x
        self._probs = softmax(x @ self.weight + self.bias)
        return self._probs

    def backward_from_labels(self, labels: np.ndarray) -> np.ndarray:
        """Gradient of mean cross-entropy with respect to the input."""
        n = labels.shape[0]
        dlogits = self._probs.copy()
        dlogits[np.arange(n), labels] -= 1.0
        dlogits /= n
        self._dw = self._x.T @ dlogits
        self._db = dlogits.sum(axis=0)
        return dlogits @ self.weight.T

    def backward(self, grad):
        raise NotImplementedError("use backward_from_labels on the output layer")

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self._dw, self._db]


CROSS_ENTROPY_EPS = 1e-12


def loss_crossentropy(probs: np.ndarray, labels: np.ndarray | int) -> float:
    """Mean negative log-likelihood of the true labels."""
    p = np.atleast_2d(probs)
    y = np.atleast_1d(np.asarray(labels, dtype=int))
    picked = p[np.arange(y.shape[0]), y]
    return float(-np.log(np.clip(picked, CROSS_ENTROPY_EPS, None)).mean())
