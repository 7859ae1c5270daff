"""Forget-gate LSTM cells and stacks with optional per-layer residual skips.

Gate order in the packed weight matrices is [input, forget, output, candidate].
No peephole connections. Backward is full backpropagation through time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, ShapeError, ValidationError
from .module import Dropout, Module, init_uniform, logistic

GATE_NAMES = ("input", "forget", "output", "candidate")


@dataclass(frozen=True)
class LstmStackConfig:
    num_layers: int
    hidden_size: int
    residual: bool = False
    dropout_p: float = 0.0

    def __post_init__(self):
        if self.num_layers < 1:
            raise ConfigurationError(f"num_layers must be positive, got {self.num_layers}")
        if self.hidden_size < 1:
            raise ConfigurationError(f"hidden_size must be positive, got {self.hidden_size}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigurationError(f"dropout_p must be in [0, 1), got {self.dropout_p}")


@dataclass(frozen=True)
class LstmCellParams:
    """Packed per-gate parameters: input_weights (D, 4H), recurrent_weights (H, 4H), biases (4H,)."""

    input_weights: np.ndarray
    recurrent_weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        d, fh = self.input_weights.shape
        h = fh // 4
        if fh != 4 * h or self.recurrent_weights.shape != (h, 4 * h) or self.biases.shape != (4 * h,):
            raise ShapeError(
                f"inconsistent LSTM parameter shapes: Wx {self.input_weights.shape}, "
                f"Wh {self.recurrent_weights.shape}, b {self.biases.shape}"
            )

    @property
    def input_size(self) -> int:
        return self.input_weights.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.recurrent_weights.shape[0]

    def gate_slice(self, gate: str) -> slice:
        i = GATE_NAMES.index(gate)
        h = self.hidden_size
        return slice(i * h, (i + 1) * h)


def lstm_cell_step(params: LstmCellParams, x_t, h_prev, c_prev):
    """One LSTM step: returns (h_t, c_t). Accepts (D,)/(H,) vectors or batched rows."""
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    h = params.hidden_size
    if x_t.shape[-1] != params.input_size:
        raise ShapeError(f"x_t last dim expected {params.input_size}, got {x_t.shape}")
    if h_prev.shape[-1] != h or c_prev.shape[-1] != h:
        raise ShapeError(f"state last dim expected {h}, got h {h_prev.shape}, c {c_prev.shape}")
    z = x_t @ params.input_weights + h_prev @ params.recurrent_weights + params.biases
    i = logistic(z[..., 0 * h:1 * h])
    f = logistic(z[..., 1 * h:2 * h])
    o = logistic(z[..., 2 * h:3 * h])
    g = np.tanh(z[..., 3 * h:4 * h])
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


class LstmLayer(Module):
    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator,
                 forget_bias: float = 1.0):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.Wx = self.add_param("Wx", init_uniform(rng, (input_size, 4 * hidden_size), input_size))
        self.Wh = self.add_param("Wh", init_uniform(rng, (hidden_size, 4 * hidden_size), hidden_size))
        b = np.zeros(4 * hidden_size)
        b[hidden_size:2 * hidden_size] = forget_bias
        self.b = self.add_param("b", b)
        self._cache = None

    def cell_params(self) -> LstmCellParams:
        return LstmCellParams(self.Wx.value, self.Wh.value, self.b.value)

    def forward(self, x, train: bool = False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ShapeError(f"LstmLayer expects (B, T, {self.input_size}), got {x.shape}")
        n, t_len, _ = x.shape
        hsz = self.hidden_size
        h = np.zeros((n, hsz))
        c = np.zeros((n, hsz))
        out = np.empty((n, t_len, hsz))
        steps = []
        for t in range(t_len):
            x_t = x[:, t, :]
            z = x_t @ self.Wx.value + h @ self.Wh.value + self.b.value
            i = logistic(z[:, 0 * hsz:1 * hsz])
            f = logistic(z[:, 1 * hsz:2 * hsz])
            o = logistic(z[:, 2 * hsz:3 * hsz])
            g = np.tanh(z[:, 3 * hsz:4 * hsz])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            steps.append((x_t, h, c, i, f, o, g, c_new, tc))
            h, c = h_new, c_new
            out[:, t, :] = h
        self._cache = (x.shape, steps)
        return out

    def backward(self, dy):
        (x_shape, steps) = self._cache
        n, t_len, _ = x_shape
        hsz = self.hidden_size
        dy = np.asarray(dy, dtype=np.float64)
        dx = np.empty(x_shape)
        dh_next = np.zeros((n, hsz))
        dc_next = np.zeros((n, hsz))
        for t in range(t_len - 1, -1, -1):
            x_t, h_prev, c_prev, i, f, o, g, c_new, tc = steps[t]
            dh = dy[:, t, :] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            df = dc * c_prev
            di = dc * g
            dg = dc * i
            dc_next = dc * f
            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
                dg * (1.0 - g * g),
            ], axis=1)
            self.Wx.grad += x_t.T @ dz
            self.Wh.grad += h_prev.T @ dz
            self.b.grad += dz.sum(axis=0)
            dx[:, t, :] = dz @ self.Wx.value.T
            dh_next = dz @ self.Wh.value.T
        return dx


class LstmStack(Module):
    """Stacked LSTM layers over a batch of sequences, residual skips optional.

    residual=True adds each layer's input to its output per timestep, which
    requires the stack input dimension to equal hidden_size.
    """

    def __init__(self, config: LstmStackConfig, input_size: int, rng: np.random.Generator):
        super().__init__()
        self.config = config
        if config.residual and input_size != config.hidden_size:
            raise ConfigurationError(
                f"residual stack requires input size {input_size} == hidden size {config.hidden_size}"
            )
        self.layers = []
        d = input_size
        for idx in range(config.num_layers):
            layer = LstmLayer(d, config.hidden_size, rng)
            self.add_module(f"l{idx}", layer)
            self.layers.append(layer)
            d = config.hidden_size
        self.dropouts = [Dropout(config.dropout_p, rng) for _ in range(config.num_layers - 1)]

    def forward(self, x, train: bool = False):
        y = np.asarray(x, dtype=np.float64)
        for idx, layer in enumerate(self.layers):
            out = layer(y, train=train)
            if self.config.residual:
                out = out + y
            if idx < len(self.dropouts):
                out = self.dropouts[idx](out, train=train)
            y = out
        return y

    def backward(self, dy):
        for idx in range(len(self.layers) - 1, -1, -1):
            if idx < len(self.dropouts):
                dy = self.dropouts[idx].backward(dy)
            dx = self.layers[idx].backward(dy)
            if self.config.residual:
                dx = dx + dy
            dy = dx
        return dy


def lstm_stack_forward(config: LstmStackConfig, layer_params, sequence) -> np.ndarray:
    """Functional stack forward over a single (T, d) sequence from explicit cell params."""
    sequence = np.asarray(sequence, dtype=np.float64)
    if sequence.ndim != 2:
        raise ShapeError(f"expected a (T, d) sequence, got {sequence.shape}")
    if len(layer_params) != config.num_layers:
        raise ConfigurationError(f"expected {config.num_layers} layer parameter sets, got {len(layer_params)}")
    if config.residual and sequence.shape[1] != config.hidden_size:
        raise ConfigurationError(
            f"residual stack requires input dim {sequence.shape[1]} == hidden size {config.hidden_size}"
        )
    y = sequence
    for params in layer_params:
        h = np.zeros(config.hidden_size)
        c = np.zeros(config.hidden_size)
        rows = []
        for t in range(y.shape[0]):
            h, c = lstm_cell_step(params, y[t], h, c)
            rows.append(h)
        out = np.stack(rows)
        y = out + y if config.residual else out
    return y
