"""Adam optimizer: a pure single-tensor update and a module-level driver."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import NumericError, ShapeError, ValidationError
from .module import Param


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be positive, got {self.learning_rate}")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValidationError(f"{name} must be in (0, 1), got {v}")
        if self.epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.step_count < 0:
            raise ValidationError(f"step_count must be nonnegative, got {self.step_count}")


def adam_update(config: AdamConfig, param, grad, moment1, moment2, name: str = "param"):
    """One bias-corrected Adam step; returns (param, m, v, config) with step_count + 1."""
    param = np.asarray(param, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    moment1 = np.asarray(moment1, dtype=np.float64)
    moment2 = np.asarray(moment2, dtype=np.float64)
    if not (param.shape == grad.shape == moment1.shape == moment2.shape):
        raise ShapeError(
            f"{name}: shapes disagree: param {param.shape}, grad {grad.shape}, "
            f"m {moment1.shape}, v {moment2.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise NumericError(f"non-finite gradient for parameter {name!r}")
    t = config.step_count + 1
    m = config.beta1 * moment1 + (1.0 - config.beta1) * grad
    v = config.beta2 * moment2 + (1.0 - config.beta2) * grad * grad
    m_hat = m / (1.0 - config.beta1 ** t)
    v_hat = v / (1.0 - config.beta2 ** t)
    new_param = param - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return new_param, m, v, replace(config, step_count=t)


class Adam:
    """Adam over a module's named parameters; frozen name prefixes are skipped."""

    def __init__(self, named_params, learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8, frozen_prefixes=()):
        self.config = AdamConfig(learning_rate, beta1, beta2, epsilon)
        self.frozen_prefixes = tuple(frozen_prefixes)
        self.slots = []
        for name, p in named_params:
            if not isinstance(p, Param):
                raise ValidationError(f"expected Param for {name!r}")
            if any(name.startswith(pre) for pre in self.frozen_prefixes):
                continue
            self.slots.append((name, p, np.zeros_like(p.value), np.zeros_like(p.value)))

    @property
    def step_count(self) -> int:
        return self.config.step_count

    def step(self):
        cfg = self.config
        new_cfg = None
        for name, p, m, v in self.slots:
            p.value, new_m, new_v, new_cfg = adam_update(cfg, p.value, p.grad, m, v, name=name)
            m[...] = new_m
            v[...] = new_v
        self.config = new_cfg if new_cfg is not None else replace(cfg, step_count=cfg.step_count + 1)
