"""Embedding families: Wasserstein point clouds, Euclidean and Poincare vectors.

Every family exposes the same surface: a distance between two objects and its
gradient with respect to both objects' parameters.  Training loops use the
batched :func:`pair_distances` which also accumulates parameter gradients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optim import project_ball
from .ot import sinkhorn_batch

KINDS = ("wasserstein", "euclidean", "hyperbolic")
BALL_EPS = 1e-5


@dataclass
class EmbeddingModel:
    kind: str
    params: np.ndarray  # (n, M, k) for wasserstein, (n, d) otherwise
    labels: list | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        self.params = np.asarray(self.params, dtype=np.float64)
        want = 3 if self.kind == "wasserstein" else 2
        if self.params.ndim != want:
            raise ValueError(f"{self.kind} parameters must be {want}-D, got shape {self.params.shape}")
        if self.labels is not None and len(self.labels) != self.n_objects:
            raise ValueError("label count does not match object count")

    @property
    def n_objects(self):
        return self.params.shape[0]

    @property
    def budget(self):
        """Parameters per object: M*k or d."""
        return int(np.prod(self.params.shape[1:]))

    @property
    def n_params(self):
        return int(self.params.size)

    @property
    def shape_info(self):
        if self.kind == "wasserstein":
            return {"M": self.params.shape[1], "k": self.params.shape[2]}
        return {"d": self.params.shape[1]}

    def cloud(self, i):
        if self.kind != "wasserstein":
            raise TypeError("only wasserstein models carry point clouds")
        return self.params[i]

    def index(self, label):
        if self.labels is None:
            raise KeyError("model has no labels")
        return self.labels.index(label)


def budget_shape(kind, budget=None, M=None, k=None, d=None):
    """Resolve a parameter budget into the family's parameter shape.

    Wasserstein models take ``M, k`` directly or ``M = budget // k``; vector
    families use ``d = budget``.
    """
    if kind == "wasserstein":
        if M is None:
            if budget is None or k is None:
                raise ValueError("wasserstein budget needs (M, k) or (budget, k)")
            M = budget // k
        if k is None:
            raise ValueError("wasserstein budget needs ground dimension k")
        if M < 1 or k < 1:
            raise ValueError(f"invalid point-cloud shape M={M}, k={k}")
        return (int(M), int(k))
    if d is None:
        d = budget
    if d is None or d < 1:
        raise ValueError(f"invalid vector dimension {d}")
    return (int(d),)


def init_model(kind, n_objects, shape, seed=0, scale=0.1, labels=None):
    if n_objects < 1:
        raise ValueError("n_objects must be positive")
    shape = tuple(int(s) for s in shape)
    if not shape or min(shape) < 1:
        raise ValueError(f"invalid parameter shape {shape}")
    rng = np.random.default_rng(seed)
    params = rng.normal(0.0, scale, size=(n_objects, *shape))
    if kind == "hyperbolic":
        norms = np.linalg.norm(params, axis=1, keepdims=True)
        target = np.minimum(0.9, norms)
        params = params * np.where(norms > 0, target / np.where(norms > 0, norms, 1.0), 1.0)
    return EmbeddingModel(kind, params, labels)


def _poincare(u, v):
    """Distances and gradients for rows of u vs rows of v."""
    diff = u - v
    delta = np.sum(diff * diff, axis=-1)
    alpha = 1.0 - np.sum(u * u, axis=-1)
    beta = 1.0 - np.sum(v * v, axis=-1)
    gamma = 1.0 + 2.0 * delta / (alpha * beta)
    dist = np.arccosh(np.maximum(gamma, 1.0))
    degenerate = gamma <= 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(degenerate, 0.0, 1.0 / np.sqrt(np.maximum(gamma * gamma - 1.0, 1e-300)))
    s = (4.0 / (alpha * beta) * coef)[:, None]
    gu = s * (diff + (delta / alpha)[:, None] * u)
    gv = s * (-diff + (delta / beta)[:, None] * v)
    return dist, gu, gv, degenerate


def _euclid(u, v):
    diff = u - v
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    degenerate = dist == 0
    unit = diff / np.where(degenerate, 1.0, dist)[:, None]
    return dist, unit, -unit, degenerate


def _check_indices(model, I, J):
    I = np.atleast_1d(np.asarray(I, dtype=np.int64))
    J = np.atleast_1d(np.asarray(J, dtype=np.int64))
    n = model.n_objects
    if I.size and (I.min() < 0 or J.min() < 0 or I.max() >= n or J.max() >= n):
        raise IndexError(f"object index out of range for model with {n} objects")
    return I, J


def pair_terms(model, I, J, cfg=None, grad=True):
    """Per-pair distances and gradients, with pairs put in ascending index order.

    Returns ``(dist, lo, hi, g_lo, g_hi)``.  Wasserstein pairs are evaluated
    with the lower index first so results are symmetric in ``(i, j)``;
    coincident indices give distance 0 and zero gradient.
    """
    I, J = _check_indices(model, I, J)
    lo, hi = np.minimum(I, J), np.maximum(I, J)
    P = model.params
    dist = np.zeros(I.size)
    g_lo = np.zeros((I.size, *P.shape[1:])) if grad else None
    g_hi = np.zeros_like(g_lo) if grad else None
    live = np.flatnonzero(lo != hi)
    if live.size:
        a, b = P[lo[live]], P[hi[live]]
        if model.kind == "wasserstein":
            if grad:
                d, ga, gb = sinkhorn_batch(a, b, cfg, grad=True)
            else:
                d = sinkhorn_batch(a, b, cfg)
        else:
            d, ga, gb, _ = (_euclid if model.kind == "euclidean" else _poincare)(a, b)
        dist[live] = d
        if grad:
            g_lo[live] = ga
            g_hi[live] = gb
    return dist, lo, hi, g_lo, g_hi


def accumulate(model, lo, hi, g_lo, g_hi, weights):
    """Gradient of ``sum(weights * dist)`` in the model's parameter shape."""
    P = model.params
    w = np.asarray(weights, dtype=np.float64).reshape((-1,) + (1,) * (P.ndim - 1))
    grad = np.zeros_like(P)
    np.add.at(grad, lo, w * g_lo)
    np.add.at(grad, hi, w * g_hi)
    return grad


def pair_distances(model, I, J, cfg=None, weights=None):
    """Distances for index pairs; with ``weights`` also the parameter gradient
    of ``sum(weights * dist)``."""
    if weights is None:
        return pair_terms(model, I, J, cfg, grad=False)[0]
    dist, lo, hi, g_lo, g_hi = pair_terms(model, I, J, cfg)
    return dist, accumulate(model, lo, hi, g_lo, g_hi, weights)


def model_distance(model, i, j, cfg=None):
    return float(pair_distances(model, [i], [j], cfg)[0])


@dataclass
class PairGradient:
    grad_i: np.ndarray
    grad_j: np.ndarray
    degenerate: bool = False


def model_distance_grad(model, i, j, cfg=None):
    """Gradient of the distance w.r.t. the parameters of objects ``i`` and ``j``.

    Non-smooth points (coincident vectors, ``i == j``) return zero
    subgradients with ``degenerate=True``.
    """
    _check_indices(model, [i], [j])
    P = model.params
    if i == j:
        z = np.zeros(P.shape[1:])
        return PairGradient(z, z.copy(), True)
    u, v = P[i][None], P[j][None]
    if model.kind == "wasserstein":
        lo, hi = (i, j) if i < j else (j, i)
        _, ga, gb = sinkhorn_batch(P[lo][None], P[hi][None], cfg, grad=True)
        gi, gj = (ga[0], gb[0]) if i < j else (gb[0], ga[0])
        return PairGradient(gi, gj, False)
    fn = _euclid if model.kind == "euclidean" else _poincare
    _, gu, gv, deg = fn(u, v)
    return PairGradient(gu[0], gv[0], bool(deg[0]))


def retract(model):
    """Keep hyperbolic parameters strictly inside the unit ball."""
    if model.kind == "hyperbolic":
        model.params = project_ball(model.params, BALL_EPS)
    return model
