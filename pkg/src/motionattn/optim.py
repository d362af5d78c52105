"""Adam with bias correction, plus the patience-based learning-rate schedule.

The optimizer mutates parameter storage in place; per the concurrency
contract this is the single exclusive phase between graph builds. State is
kept as plain arrays keyed by parameter name so it can ride along in
checkpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .tensor import Tensor


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: dict[str, Tensor], grads: dict[str, np.ndarray], state: AdamState
) -> tuple[dict[str, Tensor], AdamState]:
    """One bias-corrected Adam update over named parameters.

    Every parameter must have a gradient of matching shape. Parameters are
    updated in place; the same dicts are returned for chaining.
    """
    for name, p in params.items():
        if name not in grads:
            raise ShapeError(f"adam_step: missing gradient for {name}")
        if grads[name].shape != p.data.shape:
            raise ShapeError(
                f"adam_step: gradient shape {grads[name].shape} != param shape {p.data.shape} for {name}"
            )
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for name, p in params.items():
        g = grads[name]
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.data -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


def lr_schedule_step(
    best_so_far: float,
    current_metric: float,
    counter: int,
    lr: float,
    patience: int = 5,
    factor: float = 10.0,
) -> tuple[int, float]:
    """Patience schedule: an improvement resets the stagnation counter;
    ``patience`` consecutive non-improvements divide the rate by ``factor``
    and reset the counter."""
    if current_metric < best_so_far:
        return 0, lr
    counter += 1
    if counter >= patience:
        return 0, lr / factor
    return counter, lr


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so their global L2 norm is at most
    ``max_norm``; returns the pre-clip norm."""
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if max_norm > 0 and total > max_norm:
        ratio = max_norm / total
        for g in grads.values():
            g *= ratio
    return total
