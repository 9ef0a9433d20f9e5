"""Adam, a central-difference gradient oracle, and Poincare-ball projection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AdamState:
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    first_moment: np.ndarray | None = None
    second_moment: np.ndarray | None = None
    step_count: int = 0

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


def adam_step(params, grads, state):
    """One bias-corrected Adam update. Returns ``(new_params, state)``.

    ``state`` is updated in place and also returned.  Arrays of any shape are
    accepted; moments take the shape of ``params``.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise ValueError(f"params {params.shape} and grads {grads.shape} differ in shape")
    bad = ~np.isfinite(grads)
    if bad.any():
        idx = np.unravel_index(int(np.flatnonzero(bad)[0]), grads.shape)
        raise FloatingPointError(f"non-finite gradient at index {idx if grads.ndim > 1 else idx[0]}")
    if state.first_moment is None:
        state.first_moment = np.zeros_like(params)
        state.second_moment = np.zeros_like(params)
    elif state.first_moment.shape != params.shape:
        raise ValueError("optimizer state does not match parameter shape")

    state.step_count += 1
    t = state.step_count
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads * grads
    state.first_moment = m
    state.second_moment = v
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon), state


def finite_diff(f, x, h=1e-5):
    """Central-difference gradient of scalar ``f`` at ``x`` (any shape)."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.array(x, dtype=np.float64)
    flat = x.reshape(-1)
    grad = np.empty_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(x))
        flat[i] = orig - h
        fm = float(f(x))
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"f is not finite around coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad.reshape(x.shape)


def project_ball(v, eps=1e-5):
    """Rescale rows of ``v`` with norm above ``1 - eps`` back onto that radius."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    v = np.asarray(v, dtype=np.float64)
    radius = 1.0 - eps
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    scale = np.where(norms > radius, radius / np.where(norms > 0, norms, 1.0), 1.0)
    return v * scale


def relative_error(a, b, floor=1e-12):
    a = np.ravel(a)
    b = np.ravel(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), floor))
