"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ProbeError
from .module import Module


@dataclass(frozen=True)
class BlockCheck:
    name: str
    max_rel_error: float
    worst_index: tuple
    analytic: float
    numeric: float


@dataclass(frozen=True)
class GradCheckReport:
    blocks: tuple
    max_rel_error: float

    def worst(self) -> BlockCheck:
        return max(self.blocks, key=lambda b: b.max_rel_error)


def relative_error(a: float, n: float) -> float:
    # Denominator floored at 1e-6: below that, float64 central differences at
    # h ~ 1e-5 are cancellation noise and the ratio stops measuring fidelity.
    return abs(a - n) / max(abs(a), abs(n), 1e-6)


def finite_difference_check(value_fn, params: dict, analytic_grads: dict,
                            h: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients against central differences per parameter block.

    value_fn() must re-evaluate the scalar loss at the current parameter values;
    params maps block name -> mutable array (perturbed in place and restored).
    """
    blocks = []
    for name, arr in params.items():
        grad = np.asarray(analytic_grads[name])
        worst = BlockCheck(name, 0.0, (), 0.0, 0.0)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + h
            fp = value_fn()
            arr[idx] = orig - h
            fm = value_fn()
            arr[idx] = orig
            if not (math.isfinite(fp) and math.isfinite(fm)):
                raise ProbeError(f"loss non-finite probing {name}{list(idx)} around {orig!r}")
            numeric = (fp - fm) / (2.0 * h)
            rel = relative_error(float(grad[idx]), numeric)
            if rel > worst.max_rel_error:
                worst = BlockCheck(name, rel, idx, float(grad[idx]), numeric)
        blocks.append(worst)
    return GradCheckReport(tuple(blocks), max((b.max_rel_error for b in blocks), default=0.0))


def check_module_gradients(module: Module, loss_fn, h: float = 1e-5) -> GradCheckReport:
    """Gradient-check every parameter of a module.

    loss_fn(module) must run a deterministic forward pass and return the scalar
    loss; it is also responsible for calling module.backward when asked to by
    this harness (the analytic pass runs once with gradients zeroed first).
    """
    module.zero_grad()
    loss_fn(module, backward=True)
    named = dict(module.named_params())
    params = {name: p.value for name, p in named.items()}
    grads = {name: p.grad.copy() for name, p in named.items()}
    return finite_difference_check(lambda: loss_fn(module, backward=False), params, grads, h=h)
