"""Optimizers, gradient clipping and the plateau learning-rate scheduler."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import ParamStore

__all__ = ["adam_step", "adamw_step", "clip_grad_norm", "LrScheduler"]


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float = 5.0) -> float:
    """Scale all gradients in place so their global L2 norm is <= max_norm.

    Returns the pre-clip norm. Gradients at or below the bound are untouched.
    """
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm > 0.0:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


def _moment_update(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    weight_decay: float,
    decoupled: bool,
) -> None:
    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, node in store.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(node.value)
        if not np.all(np.isfinite(g)):
            raise ValueError(f"optimizer step: non-finite gradient for {name!r}")
        if weight_decay and not decoupled:
            g = g + weight_decay * node.value
        state = store.opt_state.get(name)
        if state is None:
            state = {"m": np.zeros_like(node.value), "v": np.zeros_like(node.value)}
            store.opt_state[name] = state
        m, v = state["m"], state["v"]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        update = (m / bc1) / (np.sqrt(v / bc2) + eps)
        if weight_decay and decoupled:
            node.value -= lr * weight_decay * node.value
        node.value -= lr * update


def adam_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    """Bias-corrected Adam; weight decay (if any) is added to the gradient."""
    _moment_update(store, grads, lr, beta1, beta2, eps, weight_decay, decoupled=False)


def adamw_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    """Adam with decoupled decay: the term -lr*decay*w is applied to weights
    directly and never enters the moment estimates."""
    _moment_update(store, grads, lr, beta1, beta2, eps, weight_decay, decoupled=True)


@dataclass
class LrScheduler:
    """Decay the learning rate when a higher-is-better metric plateaus.

    After `patience` consecutive epochs without improvement the rate is
    multiplied by `factor` and the stale counter resets.
    """

    lr: float
    patience: int
    factor: float = 0.5
    best: float = field(default=-math.inf)
    stale: int = 0

    def __post_init__(self) -> None:
        if self.lr <= 0.0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if not 0.0 < self.factor < 1.0:
            raise ValueError(f"decay factor must be in (0, 1), got {self.factor}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")

    def step(self, metric: float) -> float:
        """Record one epoch's dev metric; returns the (possibly decayed) lr."""
        if not math.isfinite(metric):
            raise ValueError(f"scheduler metric must be finite, got {metric}")
        if metric > self.best:
            self.best = metric
            self.stale = 0
        else:
            self.stale += 1
            if self.stale >= self.patience:
                self.lr *= self.factor
                self.stale = 0
        return self.lr
