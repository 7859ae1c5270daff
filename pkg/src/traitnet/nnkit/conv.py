"""Plain 2-D convolution, pooling, and conv blocks over (N, H, W, C) arrays."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .module import Module, Param, ReLU, init_uniform


class Conv2d(Module):
    def __init__(self, kernel: int, c_in: int, c_out: int, rng: np.random.Generator,
                 stride: int = 1, pad: int = 0):
        super().__init__()
        self.k = kernel
        self.c_in = c_in
        self.c_out = c_out
        self.stride = stride
        self.pad = pad
        fan_in = kernel * kernel * c_in
        self.W = self.add_param("W", init_uniform(rng, (kernel, kernel, c_in, c_out), fan_in))
        self.b = self.add_param("b", np.zeros(c_out))
        self._xp = None

    def out_size(self, h: int, w: int):
        k, s, p = self.k, self.stride, self.pad
        return (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1

    def forward(self, x, train: bool = False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[3] != self.c_in:
            raise ShapeError(f"Conv2d expects (N, H, W, {self.c_in}), got {x.shape}")
        n, h, w, _ = x.shape
        ho, wo = self.out_size(h, w)
        if ho <= 0 or wo <= 0:
            raise ShapeError(f"input {x.shape} too small for kernel {self.k} stride {self.stride}")
        xp = np.pad(x, ((0, 0), (self.pad, self.pad), (self.pad, self.pad), (0, 0))) if self.pad else x
        self._xp = xp
        s = self.stride
        out = np.broadcast_to(self.b.value, (n, ho, wo, self.c_out)).copy()
        for di in range(self.k):
            for dj in range(self.k):
                xs = xp[:, di:di + s * ho:s, dj:dj + s * wo:s, :]
                out += xs @ self.W.value[di, dj]
        return out

    def backward(self, dy):
        dy = np.asarray(dy, dtype=np.float64)
        n, ho, wo, _ = dy.shape
        s = self.stride
        xp = self._xp
        dxp = np.zeros_like(xp)
        self.b.grad += dy.sum(axis=(0, 1, 2))
        for di in range(self.k):
            for dj in range(self.k):
                xs = xp[:, di:di + s * ho:s, dj:dj + s * wo:s, :]
                self.W.grad[di, dj] += np.tensordot(xs, dy, axes=([0, 1, 2], [0, 1, 2]))
                dxp[:, di:di + s * ho:s, dj:dj + s * wo:s, :] += dy @ self.W.value[di, dj].T
        if self.pad:
            return dxp[:, self.pad:-self.pad, self.pad:-self.pad, :]
        return dxp


class MaxPool2d(Module):
    def __init__(self, pool: int):
        super().__init__()
        self.p = pool
        self._shape = None
        self._idx = None

    def forward(self, x, train: bool = False):
        n, h, w, c = x.shape
        p = self.p
        if h % p or w % p:
            raise ShapeError(f"MaxPool2d({p}) requires divisible spatial dims, got {x.shape}")
        r = x.reshape(n, h // p, p, w // p, p, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, h // p, w // p, c, p * p)
        self._shape = x.shape
        self._idx = np.argmax(r, axis=-1)
        return np.take_along_axis(r, self._idx[..., None], axis=-1)[..., 0]

    def backward(self, dy):
        n, h, w, c = self._shape
        p = self.p
        dr = np.zeros((n, h // p, w // p, c, p * p))
        np.put_along_axis(dr, self._idx[..., None], np.asarray(dy)[..., None], axis=-1)
        return dr.reshape(n, h // p, w // p, c, p, p).transpose(0, 1, 4, 2, 5, 3).reshape(n, h, w, c)


class GlobalAvgPool(Module):
    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x, train: bool = False):
        self._shape = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, dy):
        n, h, w, c = self._shape
        return np.broadcast_to(dy[:, None, None, :], self._shape) / (h * w)


class ConvBlock(Module):
    """convolution -> rectifier -> optional max pool."""

    def __init__(self, kernel: int, c_in: int, c_out: int, rng: np.random.Generator,
                 stride: int = 1, pad: int = 0, pool: int | None = None):
        super().__init__()
        self.conv = self.add_module("conv", Conv2d(kernel, c_in, c_out, rng, stride=stride, pad=pad))
        self.relu = ReLU()
        self.pool = MaxPool2d(pool) if pool else None

    def forward(self, x, train: bool = False):
        y = self.relu(self.conv(x, train=train))
        if self.pool is not None:
            y = self.pool(y)
        return y

    def backward(self, dy):
        if self.pool is not None:
            dy = self.pool.backward(dy)
        return self.conv.backward(self.relu.backward(dy))
