"""Entropic optimal transport between uniform point clouds.

All routines work on clouds given as ``(M, k)`` arrays with implicit uniform
mass ``1/M``.  The batched entry point :func:`sinkhorn_batch` is what the
trainers call; :func:`sinkhorn` and :func:`sinkhorn_grad` are single-pair
wrappers around it.

The differentiated function is the unrolled iteration itself: ``c`` starts at
the all-ones vector, ``L`` alternating updates

    r <- u / (K c),    c <- v / (K^T r)

are applied, and the reported value is ``<D^p, T>^(1/p)`` with
``T = diag(r) K diag(c)``.  Gradients are obtained by replaying the stored
scalings in reverse, so they are exact for that finite procedure rather than
for the limit plan.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatchError, NumericalInstabilityError, UnsupportedInstanceError

__all__ = [
    "CostMatrix",
    "SinkhornConfig",
    "SinkhornResult",
    "as_cloud",
    "ground_cost",
    "sinkhorn",
    "sinkhorn_grad",
    "sinkhorn_batch",
    "exact_wasserstein",
    "marginal_residual",
]

EXACT_MAX_POINTS = 10


@dataclass(frozen=True)
class SinkhornConfig:
    """Knobs for the Sinkhorn divergence.

    ``tol`` switches to evaluation mode: iterate until the marginal residual
    drops below ``tol`` or ``max_iterations`` is hit.  ``mode`` is ``"auto"``
    (log-domain when ``lam / median(D^p) < stabilization_threshold``),
    ``"standard"`` or ``"log"``.
    """

    lam: float = 0.1
    p: float = 1.0
    iterations: int = 50
    stabilization_threshold: float = 1e-2
    tol: float | None = None
    max_iterations: int = 2000
    mode: str = "auto"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.mode not in ("auto", "standard", "log"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")

    def evaluation(self, tol=1e-9):
        return replace(self, tol=tol)


@dataclass
class CostMatrix:
    entries: np.ndarray
    p: float = 1.0

    @property
    def powered(self):
        return self.entries if self.p == 1 else self.entries**self.p


@dataclass
class SinkhornResult:
    value: float
    plan: np.ndarray
    r: np.ndarray
    c: np.ndarray
    log_r: np.ndarray
    log_c: np.ndarray
    iterations: int
    stabilized: bool
    iterates: tuple | None = field(default=None, repr=False)


def as_cloud(x, name="cloud"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty (M, k) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite coordinates")
    return arr


def _pair_distances(X, Y):
    diff = X[:, :, None, :] - Y[:, None, :, :]
    return np.sqrt(np.einsum("bijk,bijk->bij", diff, diff)), diff


def ground_cost(a, b, p=1.0):
    a = as_cloud(a, "a")
    b = as_cloud(b, "b")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(a.shape[1], b.shape[1])
    D, _ = _pair_distances(a[None], b[None])
    return CostMatrix(D[0], float(p))


def marginal_residual(plan, M, N):
    plan = np.asarray(plan, dtype=np.float64)
    rows = np.abs(plan.sum(axis=1) - 1.0 / M)
    cols = np.abs(plan.sum(axis=0) - 1.0 / N)
    return float(max(rows.max(), cols.max()))


def _lse(x, axis):
    m = np.max(x, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def _use_log_domain(Cp, cfg):
    if cfg.mode != "auto":
        return np.full(Cp.shape[0], cfg.mode == "log")
    med = np.median(Cp.reshape(Cp.shape[0], -1), axis=1)
    with np.errstate(divide="ignore"):
        ratio = np.where(med > 0, cfg.lam / np.where(med > 0, med, 1.0), np.inf)
    return ratio < cfg.stabilization_threshold


def _row_residual(logK, a, b, log_u):
    # columns are exact right after the c-update, rows carry the error
    T = np.exp(a[:, :, None] + logK + b[:, None, :])
    return np.abs(T.sum(axis=2) - np.exp(log_u)).max(axis=1)


def _matvec(K, x):
    return np.matmul(K, x[:, :, None])[:, :, 0]


def _rmatvec(K, y):
    return np.matmul(y[:, None, :], K)[:, 0, :]


def _forward(Cp, cfg, log_domain):
    """Run the balancing iterations and store every scaling iterate.

    Returns ``(A, Bs, active)``.  In log-domain mode ``A[t]``, ``Bs[t]`` are
    log r / log c after step ``t``; otherwise they are r / c themselves.
    ``Bs[0]`` is the initial c and ``active[t-1]`` marks pairs for which
    step ``t`` was executed (tolerance mode freezes converged pairs).
    """
    nb, M, N = Cp.shape
    log_u = -np.log(M)
    log_v = -np.log(N)
    logK = -Cp / cfg.lam
    L = cfg.max_iterations if cfg.tol is not None else cfg.iterations

    if log_domain:
        a, b = np.zeros((nb, M)), np.zeros((nb, N))
    else:
        K = np.exp(logK)
        a, b = np.ones((nb, M)), np.ones((nb, N))
    A, Bs, active = [a], [b], []
    done = np.zeros(nb, dtype=bool)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for _ in range(L):
            if log_domain:
                a_new = log_u - _lse(logK + b[:, None, :], axis=2)
                b_new = log_v - _lse(logK + a_new[:, :, None], axis=1)
            else:
                a_new = (1.0 / M) / _matvec(K, b)
                b_new = (1.0 / N) / _rmatvec(K, a_new)
            step = ~done
            if done.any():
                a_new = np.where(step[:, None], a_new, a)
                b_new = np.where(step[:, None], b_new, b)
            a, b = a_new, b_new
            A.append(a)
            Bs.append(b)
            active.append(step)
            if cfg.tol is not None:
                la, lb = (a, b) if log_domain else (np.log(a), np.log(b))
                done = done | (_row_residual(logK, la, lb, log_u) < cfg.tol)
                if done.all():
                    break
    A, Bs, active = np.stack(A), np.stack(Bs), np.stack(active)
    if not log_domain:
        ok = np.isfinite(A).all() and np.isfinite(Bs).all() and (A > 0).all() and (Bs > 0).all()
        if not ok:
            raise NumericalInstabilityError(
                "kernel exp(-D^p/lam) under/overflowed in the multiplicative updates; "
                "use the log-domain (stabilized) mode or a larger lam"
            )
    return A, Bs, active


def _backward(Cp, cfg, A, Bs, active, T, gS, log_domain):
    """Reverse pass: gradient of ``sum(gS * <Cp, T>)`` with respect to ``Cp``.

    ``ga``/``gb`` hold adjoints of log r / log c.  Every step contributes
    ``-K * outer(x, y)`` to the adjoint of log K; in the multiplicative mode
    those outer products are stacked and contracted once after the loop.
    """
    nb, M, N = Cp.shape
    lam = cfg.lam
    logK = -Cp / lam

    gT = gS[:, None, None]
    G = Cp * T * gT  # T = exp(a + logK + b), so d<Cp,T>/dlogK = Cp * T
    gC = T * gT
    ga = G.sum(axis=2)
    gb = G.sum(axis=1)
    n_steps = len(active)
    if log_domain:
        log_u, log_v = -np.log(M), -np.log(N)
        glogK = G.copy()
    else:
        K = np.exp(logK)
        left = np.empty((2 * n_steps, nb, M))
        right = np.empty((2 * n_steps, nb, N))

    for t in range(n_steps, 0, -1):
        act = active[t - 1]
        full = act.all()
        if log_domain:
            a_t, b_t, b_prev = A[t], Bs[t], Bs[t - 1]
            # b_t = log v - LSE_i(logK + a_t)
            Q = np.exp(logK + a_t[:, :, None] + b_t[:, None, :] - log_v)
            Qg = Q * gb[:, None, :]
            ga_t = ga - Qg.sum(axis=2)
            # a_t = log u - LSE_j(logK + b_prev)
            P = np.exp(logK + a_t[:, :, None] + b_prev[:, None, :] - log_u)
            Pg = P * ga_t[:, :, None]
            gb_prev = -Pg.sum(axis=1)
            glogK -= np.where(act[:, None, None], Qg + Pg, 0.0)
        else:
            r_t, c_t, c_prev = A[t], Bs[t], Bs[t - 1]
            wq = c_t * gb * N
            if not full:
                wq = np.where(act[:, None], wq, 0.0)
            ga_t = ga - r_t * _matvec(K, wq)
            wp = r_t * ga_t * M
            if not full:
                wp = np.where(act[:, None], wp, 0.0)
            gb_prev = -c_prev * _rmatvec(K, wp)
            left[2 * t - 2] = r_t
            right[2 * t - 2] = wq
            left[2 * t - 1] = wp
            right[2 * t - 1] = c_prev
        if full:
            ga = np.zeros_like(ga)
            gb = gb_prev
        else:
            ga = np.where(act[:, None], 0.0, ga)
            gb = np.where(act[:, None], gb_prev, gb)

    if not log_domain:
        glogK = G - K * np.matmul(left.transpose(1, 2, 0), right.transpose(1, 0, 2))
    return gC - glogK / lam


def _validate_batch(X, Y):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 3 or Y.ndim != 3 or X.shape[0] != Y.shape[0]:
        raise ValueError(f"expected (B, M, k) and (B, N, k) batches, got {X.shape} and {Y.shape}")
    if X.shape[2] != Y.shape[2]:
        raise DimensionMismatchError(X.shape[2], Y.shape[2])
    if np.isnan(X).any() or np.isnan(Y).any():
        raise ValueError("NaN in point-cloud coordinates")
    if not (np.isfinite(X).all() and np.isfinite(Y).all()):
        raise ValueError("non-finite point-cloud coordinates")
    return X, Y


def _run_group(X, Y, cfg, log_domain, grad, keep):
    D, diff = _pair_distances(X, Y)
    Cp = D if cfg.p == 1 else D**cfg.p
    A, Bs, active = _forward(Cp, cfg, log_domain)
    a, b = A[-1], Bs[-1]
    if not log_domain:
        a, b = np.log(a), np.log(b)
    T = np.exp(a[:, :, None] - Cp / cfg.lam + b[:, None, :])
    nb = X.shape[0]
    S = np.sum((Cp * T).reshape(nb, -1), axis=1)
    S = np.maximum(S, 0.0)
    value = S if cfg.p == 1 else S ** (1.0 / cfg.p)
    out = {"value": value, "plan": T, "a": a, "b": b, "n_iter": active.sum(axis=0)}
    if keep:
        out["iterates"] = (A, Bs, active)
    if grad:
        if cfg.p == 1:
            gS = np.ones(nb)
        else:
            with np.errstate(divide="ignore"):
                gS = np.where(S > 0, S ** (1.0 / cfg.p - 1.0) / cfg.p, 0.0)
        gC = _backward(Cp, cfg, A, Bs, active, T, gS, log_domain)
        if cfg.p == 1:
            gD = gC
        else:
            gD = gC * cfg.p * D ** (cfg.p - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(D > 0, gD / np.where(D > 0, D, 1.0), 0.0)
        wd = w[..., None] * diff
        out["grad_x"] = wd.sum(axis=2)
        out["grad_y"] = -wd.sum(axis=1)
    return out


def sinkhorn_batch(X, Y, cfg=None, grad=False):
    """Sinkhorn values for a batch of cloud pairs ``X[b]`` vs ``Y[b]``.

    Returns ``values`` of shape ``(B,)`` or, with ``grad=True``,
    ``(values, grad_X, grad_Y)``.  Each pair picks its own numerical mode, so
    a pair's result does not depend on what else is in the batch.
    """
    cfg = cfg or SinkhornConfig()
    X, Y = _validate_batch(X, Y)
    nb = X.shape[0]
    values = np.empty(nb)
    gX = np.zeros_like(X) if grad else None
    gY = np.zeros_like(Y) if grad else None
    if nb == 0:
        return (values, gX, gY) if grad else values
    D, _ = _pair_distances(X, Y)
    use_log = _use_log_domain(D if cfg.p == 1 else D**cfg.p, cfg)
    for flag in (False, True):
        idx = np.flatnonzero(use_log == flag)
        if idx.size == 0:
            continue
        res = _run_group(X[idx], Y[idx], cfg, flag, grad, keep=False)
        values[idx] = res["value"]
        if grad:
            gX[idx] = res["grad_x"]
            gY[idx] = res["grad_y"]
    return (values, gX, gY) if grad else values


def sinkhorn(a, b, cfg=None, keep_iterates=False):
    cfg = cfg or SinkhornConfig()
    a = as_cloud(a, "a")
    b = as_cloud(b, "b")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(a.shape[1], b.shape[1])
    D = ground_cost(a, b, cfg.p).powered
    log_domain = bool(_use_log_domain(D[None], cfg)[0])
    res = _run_group(a[None], b[None], cfg, log_domain, grad=False, keep=keep_iterates)
    log_r, log_c = res["a"][0], res["b"][0]
    # in the log domain the scalings themselves may overflow; log_r/log_c stay exact
    with np.errstate(over="ignore"):
        r, c = np.exp(log_r), np.exp(log_c)
    return SinkhornResult(
        value=float(res["value"][0]),
        plan=res["plan"][0],
        r=r,
        c=c,
        log_r=log_r,
        log_c=log_c,
        iterations=int(res["n_iter"][0]),
        stabilized=log_domain,
        iterates=res.get("iterates"),
    )


def sinkhorn_grad(a, b, cfg=None):
    """Value and exact reverse-mode gradients w.r.t. both clouds' points."""
    a = as_cloud(a, "a")
    b = as_cloud(b, "b")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(a.shape[1], b.shape[1])
    v, ga, gb = sinkhorn_batch(a[None], b[None], cfg, grad=True)
    return float(v[0]), ga[0], gb[0]


def exact_wasserstein(a, b, p=1.0):
    """Exact W_p between equal-size uniform clouds (M <= 10).

    With uniform equal masses the transport LP has a permutation optimum, so
    the minimum over assignments is found by dynamic programming over subsets
    of already-matched target points.
    """
    a = as_cloud(a, "a")
    b = as_cloud(b, "b")
    M, N = a.shape[0], b.shape[0]
    if M != N:
        raise UnsupportedInstanceError(f"exact oracle needs equal sizes, got M={M}, N={N}")
    if M > EXACT_MAX_POINTS:
        raise UnsupportedInstanceError(f"exact oracle supports M <= {EXACT_MAX_POINTS}, got {M}")
    Cp = ground_cost(a, b, p).powered
    n_masks = 1 << M
    best = np.full(n_masks, np.inf)
    best[0] = 0.0
    for mask in range(n_masks - 1):
        if best[mask] == np.inf:
            continue
        i = bin(mask).count("1")
        for j in range(M):
            bit = 1 << j
            if not mask & bit:
                cand = best[mask] + Cp[i, j]
                if cand < best[mask | bit]:
                    best[mask | bit] = cand
    total = best[-1] / M
    return float(total if p == 1 else total ** (1.0 / p))
