"""Dragonfly algorithm.

Each dragonfly keeps a position and a step vector.  Steps mix separation,
alignment and cohesion inside a neighbourhood that widens over the run,
attraction to the best position seen (food) and repulsion from the worst
(enemy).  A dragonfly with nobody in range makes a Lévy flight instead.
"""
from __future__ import annotations

import math

import numpy as np

from .base import Evaluator, Recorder, TrainConfig, merge_params

DEFAULTS = {
    "inertia_start": 0.9,
    "inertia_end": 0.4,
    "levy_beta": 1.5,
    "levy_scale": 0.01,
    # multipliers on the food (2r) and enemy (c) weights
    "food_factor": 1.0,
    "enemy_factor": 1.0,
}


def levy_flight(rng, shape, beta: float = 1.5, scale: float = 0.01) -> np.ndarray:
    """Mantegna's algorithm for Lévy-stable step lengths."""
    sigma = (math.gamma(1 + beta) * math.sin(math.pi * beta / 2)
             / (math.gamma((1 + beta) / 2) * beta * 2 ** ((beta - 1) / 2))) ** (1 / beta)
    u = rng.standard_normal(shape) * sigma
    v = rng.standard_normal(shape)
    return scale * u / np.abs(v) ** (1 / beta)


def separation(x: np.ndarray, neighbours: np.ndarray) -> np.ndarray:
    return -np.sum(x - neighbours, axis=0) if len(neighbours) else np.zeros_like(x)


def alignment(neighbour_steps: np.ndarray, own_step: np.ndarray) -> np.ndarray:
    return neighbour_steps.mean(axis=0) if len(neighbour_steps) else own_step.copy()


def cohesion(x: np.ndarray, neighbours: np.ndarray) -> np.ndarray:
    return neighbours.mean(axis=0) - x if len(neighbours) else np.zeros_like(x)


def swarm_weights(t: int, iterations: int, rng, food_factor=1.0, enemy_factor=1.0):
    """Separation, alignment, cohesion, food and enemy weights for iteration t (1-based)."""
    c = max(0.0, 0.1 - t * (0.1 / (iterations / 2)))
    r = rng.random(4)
    return 2 * r[0] * c, 2 * r[1] * c, 2 * r[2] * c, 2 * r[3] * food_factor, c * enemy_factor


def neighbourhood_radius(t: int, iterations: int, lower, upper) -> np.ndarray:
    span = upper - lower
    return span / 4 + span * (t / iterations) * 2


def dragonfly_move(X, dX, food, enemy, radius, weights, inertia, max_step, levy):
    """Vectorised position/step update for the whole swarm.

    ``levy`` holds one pre-drawn Lévy step per dragonfly and dimension; it is
    used only by dragonflies that have no neighbour in range.
    Returns the new positions and steps.
    """
    s, a, c, f, e = weights
    n = X.shape[0]
    gaps = np.abs(X[:, None, :] - X[None, :, :])
    near = np.all(gaps <= radius, axis=2) & np.any(gaps != 0, axis=2)
    near[np.arange(n), np.arange(n)] = False
    counts = near.sum(axis=1)
    has = counts > 0
    nearf = near.astype(float)
    safe = np.where(has, counts, 1)[:, None]

    sep = -(counts[:, None] * X - nearf @ X)
    ali = np.where(has[:, None], (nearf @ dX) / safe, dX)
    coh = np.where(has[:, None], (nearf @ X) / safe - X, 0.0)

    food_gap = food - X
    enemy_gap = enemy + X
    food_in = np.all(np.abs(food_gap) <= radius, axis=1, keepdims=True)
    enemy_in = np.all(np.abs(X - enemy) <= radius, axis=1, keepdims=True)
    F = np.where(food_in, food_gap, 0.0)
    E = np.where(enemy_in, enemy_gap, 0.0)

    step = s * sep + a * ali + c * coh + f * F + e * E + inertia * dX
    step = np.clip(step, -max_step, max_step)
    new_X = np.where(has[:, None], X + step, X + levy * X)
    new_dX = np.where(has[:, None], step, 0.0)
    return new_X, new_dX


def run_da(config: TrainConfig, objective):
    p = merge_params(DEFAULTS, config, "da")
    rng = np.random.default_rng(config.seed)
    lower, upper = config.lower, config.upper
    n, d, T = config.population_size, config.n_dim, config.iterations
    max_step = (upper - lower) / 10
    ev = Evaluator(objective, lower, upper, config.workers)
    rec = Recorder("da", config)
    try:
        X = rng.uniform(lower, upper, (n, d))
        dX = rng.uniform(-max_step, max_step, (n, d))
        fit = ev(X)
        rec.start(X, fit)
        worst = int(np.argmax(fit))
        enemy, enemy_fit = X[worst].copy(), fit[worst]

        for t in range(1, T + 1):
            inertia = p["inertia_start"] - t * (p["inertia_start"] - p["inertia_end"]) / T
            radius = neighbourhood_radius(t, T, lower, upper)
            weights = swarm_weights(t, T, rng, p["food_factor"], p["enemy_factor"])
            levy = levy_flight(rng, (n, d), p["levy_beta"], p["levy_scale"])
            X, dX = dragonfly_move(X, dX, rec.best_vector, enemy, radius, weights,
                                   inertia, max_step, levy)
            X = ev.clamp(X)
            fit = ev(X)
            rec.offer(X, fit)
            worst = int(np.argmax(fit))
            if fit[worst] > enemy_fit:
                enemy, enemy_fit = X[worst].copy(), fit[worst]
            rec.record(t - 1)
    finally:
        ev.close()
    return rec.result(ev.count, p)
