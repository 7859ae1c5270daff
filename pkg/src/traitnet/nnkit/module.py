"""Minimal trainable-layer framework: parameters, dense layers, activations.

Layers cache forward activations and implement an explicit backward pass that
accumulates gradients in place. All math is float64; layers with frozen
parameters are handled by the optimizer, not the layers themselves.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError, ValidationError


class Param:
    """A trainable array with an in-place gradient accumulator."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape


class Module:
    def __init__(self):
        self._params: dict = {}
        self._children: dict = {}

    def add_param(self, name: str, value: np.ndarray) -> Param:
        p = Param(value)
        self._params[name] = p
        return p

    def add_module(self, name: str, module: "Module") -> "Module":
        self._children[name] = module
        return module

    def named_params(self, prefix: str = ""):
        for name, p in self._params.items():
            yield (prefix + name if prefix else name), p
        for cname, child in self._children.items():
            yield from child.named_params(prefix + cname + "." if prefix else cname + ".")

    def zero_grad(self):
        for _, p in self.named_params():
            p.grad.fill(0.0)

    def state_dict(self) -> dict:
        return {name: p.value.copy() for name, p in self.named_params()}

    def load_state_dict(self, state: dict):
        own = dict(self.named_params())
        missing = set(own) - set(state)
        extra = set(state) - set(own)
        if missing or extra:
            raise ValidationError(f"state dict mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for name, p in own.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.value.shape:
                raise ShapeError(f"parameter {name!r}: expected shape {p.value.shape}, got {arr.shape}")
            p.value[...] = arr

    def forward(self, x, train: bool = False):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def __call__(self, x, train: bool = False):
        return self.forward(x, train=train)


def init_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    s = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-s, s, size=shape)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator):
        super().__init__()
        self.d_in = d_in
        self.d_out = d_out
        self.W = self.add_param("W", init_uniform(rng, (d_in, d_out), d_in))
        self.b = self.add_param("b", np.zeros(d_out))
        self._x = None

    def forward(self, x, train: bool = False):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.d_in:
            raise ShapeError(f"Linear expects last dim {self.d_in}, got {x.shape}")
        self._x = x
        return x @ self.W.value + self.b.value

    def backward(self, dy):
        x2 = self._x.reshape(-1, self.d_in)
        dy2 = np.asarray(dy).reshape(-1, self.d_out)
        self.W.grad += x2.T @ dy2
        self.b.grad += dy2.sum(axis=0)
        return (dy2 @ self.W.value.T).reshape(self._x.shape)


class ReLU(Module):
    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x, train: bool = False):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy):
        return np.where(self._mask, dy, 0.0)


class Sigmoid(Module):
    def __init__(self):
        super().__init__()
        self._y = None

    def forward(self, x, train: bool = False):
        y = logistic(x)
        self._y = y
        return y

    def backward(self, dy):
        return dy * self._y * (1.0 - self._y)


class Dropout(Module):
    """Inverted dropout: scales kept units by 1/(1-p) so inference is a no-op."""

    def __init__(self, p: float, rng: np.random.Generator):
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ValidationError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p
        self.rng = rng
        self._mask = None

    def forward(self, x, train: bool = False):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        self._mask = (self.rng.random(np.shape(x)) >= self.p) / (1.0 - self.p)
        return x * self._mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask


def logistic(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ez = np.exp(x[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fully_connected_forward(weights: np.ndarray, bias: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Plain affine map W.T-free convention: y = x @ W + b."""
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != weights.shape[0]:
        raise ShapeError(f"inner dimensions disagree: x {x.shape} vs W {weights.shape}")
    if bias.shape != (weights.shape[1],):
        raise ShapeError(f"bias shape {bias.shape} does not match W {weights.shape}")
    return x @ weights + bias


def sigmoid_head(x):
    """Map a 5-vector of logits to a TraitVector through the logistic function."""
    from ..core import TraitVector

    x = np.asarray(x, dtype=np.float64)
    if x.shape != (5,):
        raise ShapeError(f"sigmoid head expects exactly 5 components, got shape {x.shape}")
    return TraitVector.from_array(logistic(x))
