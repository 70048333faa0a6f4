"""Levenberg-Marquardt training of the 8-5-1 network (Gauss-Newton Hessian)."""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .mlp import N_HIDDEN, N_INPUTS, forward_batch, hidden_preactivation, n_weights, tansig
from .optim.base import ConfigError, TrainResult

__all__ = [
    "LmConfig",
    "LmState",
    "residuals",
    "jacobian",
    "damped_step",
    "lm_step",
    "lm_train",
]


@dataclass(frozen=True)
class LmConfig:
    initial_mu: float = 1e-3
    mu_increase: float = 10.0
    mu_decrease: float = 0.1
    max_epochs: int = 1000
    gradient_tolerance: float = 1e-7
    mu_max: float = 1e10

    def __post_init__(self):
        if not self.initial_mu > 0 or not self.gradient_tolerance > 0 or not self.mu_max > 0:
            raise ConfigError("initial_mu, gradient_tolerance and mu_max must be positive")
        if not 0 < self.mu_decrease < 1 < self.mu_increase:
            raise ConfigError("need 0 < mu_decrease < 1 < mu_increase")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")


@dataclass(frozen=True)
class LmState:
    vector: np.ndarray
    sse: float
    mu: float
    epoch: int = 0
    status: str = "running"


def _check(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    if X.shape[0] != y.size:
        raise ValueError("inputs and targets differ in length")
    return X, y


def residuals(vector, X, y, n_hidden: int = N_HIDDEN) -> np.ndarray:
    """e_i = prediction_i - target_i in row order; their squares sum to V."""
    X, y = _check(X, y)
    return forward_batch(np.asarray(vector, dtype=float), X, n_hidden)[0] - y


def jacobian(vector, X, y, n_hidden: int = N_HIDDEN) -> np.ndarray:
    """Analytic d e_i / d v_k, one row per sample, columns in weight-vector order."""
    X, y = _check(X, y)
    v = np.asarray(vector, dtype=float)
    if v.size != n_weights(n_hidden):
        raise ValueError(f"weight vector must have {n_weights(n_hidden)} entries, got {v.size}")
    pre = hidden_preactivation(v[None, :], X, n_hidden)[0].T      # (rows, hidden)
    z = tansig(pre)
    a = n_hidden * N_INPUTS
    w2 = v[a + n_hidden:a + 2 * n_hidden]
    dz = (1.0 - z * z) * w2                                        # d out / d pre
    n = X.shape[0]
    J = np.empty((n, v.size))
    J[:, :a] = (dz[:, :, None] * X[:, None, :]).reshape(n, a)
    J[:, a:a + n_hidden] = dz
    J[:, a + n_hidden:a + 2 * n_hidden] = z
    J[:, -1] = 1.0
    return J


def damped_step(J: np.ndarray, e: np.ndarray, mu: float) -> np.ndarray:
    """Solve (J^T J + mu I) delta = -J^T e by Cholesky.

    mu = 0 gives the plain Gauss-Newton step and needs J^T J to be non-singular.
    """
    A = J.T @ J
    A[np.diag_indices_from(A)] += mu
    g = J.T @ e
    return cho_solve(cho_factor(A), -g)


def lm_step(state: LmState, config: LmConfig, X, y, n_hidden: int = N_HIDDEN) -> LmState:
    """One epoch: retry with growing damping until V drops or mu exceeds mu_max."""
    X, y = _check(X, y)
    e = residuals(state.vector, X, y, n_hidden)
    J = jacobian(state.vector, X, y, n_hidden)
    mu = state.mu
    while True:
        try:
            delta = damped_step(J, e, mu)
        except np.linalg.LinAlgError:
            delta = None
        if delta is not None:
            if not np.any(delta):
                return replace(state, mu=mu * config.mu_decrease, epoch=state.epoch + 1)
            trial = state.vector + delta
            sse = float(np.sum(residuals(trial, X, y, n_hidden) ** 2))
            if sse < state.sse:
                return LmState(trial, sse, mu * config.mu_decrease, state.epoch + 1, "running")
        mu *= config.mu_increase
        if mu > config.mu_max:
            return replace(state, epoch=state.epoch + 1, status="diverged")


def lm_train(init, config: LmConfig, X, y, n_hidden: int = N_HIDDEN) -> TrainResult:
    """Iterate :func:`lm_step` to the epoch cap, the gradient tolerance or divergence.

    The curve holds the training MSE after each epoch, and ``status`` is
    ``converged``, ``epoch-cap`` or ``diverged``.
    """
    X, y = _check(X, y)
    start = time.perf_counter()
    v = np.array(init, dtype=float)
    n = X.shape[0]
    e = residuals(v, X, y, n_hidden)
    state = LmState(v, float(np.sum(e * e)), config.initial_mu)
    initial = state.sse / n
    curve = []
    status = "epoch-cap"
    evaluations = 1
    while state.epoch < config.max_epochs:
        e = residuals(state.vector, X, y, n_hidden)
        grad = jacobian(state.vector, X, y, n_hidden).T @ e
        if np.linalg.norm(grad) < config.gradient_tolerance:
            status = "converged"
            if not curve:
                curve.append(state.sse / n)
            break
        state = lm_step(state, config, X, y, n_hidden)
        evaluations += 1
        curve.append(state.sse / n)
        if state.status == "diverged":
            status = "diverged"
            break
    return TrainResult(
        "lm",
        state.vector,
        state.sse / n,
        np.array(curve),
        evaluations,
        time.perf_counter() - start,
        initial,
        status,
        {"lm": {k: getattr(config, k) for k in config.__dataclass_fields__}},
    )
