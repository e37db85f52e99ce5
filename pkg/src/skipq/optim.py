"""RMSProp with squared-gradient accumulators, plus gradient clipping.

The update is the plain accumulator form:

    acc   <- decay * acc + (1 - decay) * g^2
    param <- param - lr * g / (sqrt(acc) + epsilon_rms)

Clipping has two modes.  ``td_error_clip`` bounds the per-sample TD error
before it ever becomes a gradient and therefore lives in the agent;
``global_norm_clip`` rescales the whole gradient to a maximum L2 norm and is
applied here, inside ``rmsprop_step``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .nets import Gradients, NetworkParams

TD_ERROR_CLIP = "td_error_clip"
GLOBAL_NORM_CLIP = "global_norm_clip"


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.00025
    decay: float = 0.95
    epsilon_rms: float = 0.01
    clip_mode: str = TD_ERROR_CLIP
    clip_value: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if not 0.0 <= self.decay < 1.0:
            raise ConfigError("decay must be in [0, 1)")
        if self.epsilon_rms <= 0:
            raise ConfigError("epsilon_rms must be > 0")
        if self.clip_mode not in (TD_ERROR_CLIP, GLOBAL_NORM_CLIP):
            raise ConfigError(f"unknown clip_mode {self.clip_mode!r}")
        if self.clip_value <= 0:
            raise ConfigError("clip_value must be > 0")


def global_grad_norm(grads: Gradients) -> float:
    """L2 norm over every gradient component."""
    total = 0.0
    for g in grads.weights:
        total += float(np.dot(g, g))
    for g in grads.biases:
        total += float(np.dot(g, g))
    return float(np.sqrt(total))


def clip_by_global_norm(grads: Gradients, clip_value: float) -> Gradients:
    """Scale all gradients so their joint L2 norm is at most clip_value."""
    norm = global_grad_norm(grads)
    if norm <= clip_value or norm == 0.0:
        return grads
    scale = clip_value / norm
    return Gradients(
        weights=[g * scale for g in grads.weights],
        biases=[g * scale for g in grads.biases],
    )


def rmsprop_step(params: NetworkParams, grads: Gradients, cfg: OptimizerConfig) -> NetworkParams:
    """Apply one RMSProp update in place and return the params.

    Fails fast on non-finite gradients without touching the parameters.
    """
    for g in list(grads.weights) + list(grads.biases):
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient; refusing to update")
    if cfg.clip_mode == GLOBAL_NORM_CLIP:
        grads = clip_by_global_norm(grads, cfg.clip_value)
    lr, rho, eps = cfg.learning_rate, cfg.decay, cfg.epsilon_rms
    for p, g, acc in zip(params.weights, grads.weights, params.sq_avg_w):
        acc *= rho
        acc += (1.0 - rho) * g * g
        p -= lr * g / (np.sqrt(acc) + eps)
    for p, g, acc in zip(params.biases, grads.biases, params.sq_avg_b):
        acc *= rho
        acc += (1.0 - rho) * g * g
        p -= lr * g / (np.sqrt(acc) + eps)
    return params
