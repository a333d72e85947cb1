"""Adam with bias correction."""

from typing import Protocol

import numpy as np

from .config import TrainConfig
from .model import AdamState


class Optimizable(Protocol):
    adam_state: AdamState

    def parameters(self) -> dict[str, np.ndarray]: ...


def adam_step(
    model: Optimizable, grads: dict[str, np.ndarray], t: int, cfg: TrainConfig
) -> Optimizable:
    """Apply one Adam update in place to every named parameter.

    Args:
        model: Anything exposing live parameter arrays and an AdamState
        grads: Gradient per parameter name
        t: 1-based step index used for bias correction
        cfg: Supplies learning rate, betas and epsilon

    Returns:
        The same model, updated
    """
    if t < 1:
        raise ValueError(f"Adam step index must be >= 1, got {t}")
    state = model.adam_state
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    correction1 = 1.0 - b1**t
    correction2 = 1.0 - b2**t

    for name, param in model.parameters().items():
        grad = grads[name]
        m = state.m.setdefault(name, np.zeros_like(param))
        v = state.v.setdefault(name, np.zeros_like(param))
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * grad * grad
        param -= cfg.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + cfg.adam_eps)

    state.step = t
    return model
