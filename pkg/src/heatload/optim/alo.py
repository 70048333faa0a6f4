"""Ant lion optimizer.

Every ant walks randomly around two attractors, an ant lion drawn by
roulette wheel and the elite, and settles at the mean of the two walks.
The trap interval shrinks in stages as the run progresses.
"""
from __future__ import annotations

import numpy as np

from .base import Evaluator, Recorder, TrainConfig, merge_params, rank_weights, roulette_wheel

DEFAULTS = {
    # shrink exponent w switches on at these fractions of the run
    "stage_fractions": (0.10, 0.50, 0.75, 0.90, 0.95),
    "stage_exponents": (2, 3, 4, 5, 6),
    # length of each random walk; the ant reads it at the step matching run progress
    "walk_steps": 100,
}


def shrink_ratio(t: int, iterations: int, fractions=DEFAULTS["stage_fractions"],
                 exponents=DEFAULTS["stage_exponents"]) -> float:
    """I = 1 + 10**w * t/T once t passes a stage, else 1."""
    ratio = 1.0
    for frac, w in zip(fractions, exponents):
        if t > frac * iterations:
            ratio = 1.0 + 10.0 ** w * t / iterations
    return ratio


def trap_bounds(center, lower, upper, ratio, flips):
    """Shrunken box around ``center``; ``flips`` are two uniform draws per row."""
    lo = lower / ratio
    hi = upper / ratio
    lo = np.where(flips[..., 0:1] < 0.5, lo + center, -lo + center)
    hi = np.where(flips[..., 1:2] >= 0.5, hi + center, -hi + center)
    return lo, hi


def walk_positions(steps: np.ndarray, k: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Min-max rescale cumulative +-1 walks into [lo, hi] and read step ``k``.

    ``steps`` has shape (..., dim, walk_steps) of +-1 values.
    """
    dtype = np.int8 if steps.shape[-1] < 128 else np.int32
    walk = np.cumsum(steps, axis=-1, dtype=dtype)
    # the walk starts at 0 before its first step
    a = np.minimum(walk.min(axis=-1), 0).astype(float)
    b = np.maximum(walk.max(axis=-1), 0).astype(float)
    pos = walk[..., k - 1] if k > 0 else np.zeros_like(a)
    span = np.where(b > a, b - a, 1)
    return (pos - a) * (hi - lo) / span + lo


def _random_steps(rng, shape):
    count = int(np.prod(shape))
    bits = np.unpackbits(np.frombuffer(rng.bytes((count + 7) // 8), dtype=np.uint8))[:count]
    return (2 * bits.astype(np.int8) - 1).reshape(shape)


def run_alo(config: TrainConfig, objective) -> "TrainResult":
    p = merge_params(DEFAULTS, config, "alo")
    rng = np.random.default_rng(config.seed)
    lower, upper = config.lower, config.upper
    n, d, T = config.population_size, config.n_dim, config.iterations
    L = int(p["walk_steps"])
    ev = Evaluator(objective, lower, upper, config.workers)
    rec = Recorder("alo", config)
    try:
        antlions = rng.uniform(lower, upper, (n, d))
        fit = ev(antlions)
        order = np.argsort(fit, kind="stable")
        antlions, fit = antlions[order], fit[order]
        rec.start(antlions, fit)
        elite, elite_fit = antlions[0].copy(), fit[0]

        for t in range(1, T + 1):
            ratio = shrink_ratio(t, T, p["stage_fractions"], p["stage_exponents"])
            k = max(1, int(round(t * L / T)))
            picks = roulette_wheel(rank_weights(fit), rng.random(n))
            centers = np.stack([antlions[picks], np.broadcast_to(elite, (n, d))])
            flips = rng.random((2, n, 2))
            lo, hi = trap_bounds(centers, lower, upper, ratio, flips)
            steps = _random_steps(rng, (2, n, d, L))
            walks = walk_positions(steps, k, lo, hi)
            ants = ev.clamp(walks.mean(axis=0))
            ant_fit = ev(ants)
            rec.offer(ants, ant_fit)

            pool = np.concatenate([antlions, ants])
            pool_fit = np.concatenate([fit, ant_fit])
            order = np.argsort(pool_fit, kind="stable")[:n]
            antlions, fit = pool[order], pool_fit[order]
            if fit[0] < elite_fit:
                elite, elite_fit = antlions[0].copy(), fit[0]
            antlions[0], fit[0] = elite, elite_fit
            rec.record(t - 1)
    finally:
        ev.close()
    return rec.result(ev.count, p)
