"""Invasive weed optimization."""
from __future__ import annotations

import numpy as np

from .base import Evaluator, Recorder, TrainConfig, merge_params

DEFAULTS = {
    "min_seeds": 0,
    "max_seeds": 5,
    "modulation": 3.0,
    # dispersal standard deviations as fractions of each dimension's range
    "sigma_initial": 0.10,
    "sigma_final": 0.001,
}


def seed_counts(fitness: np.ndarray, min_seeds: int, max_seeds: int) -> np.ndarray:
    """Seeds per weed, linear in fitness: the best gets max_seeds, the worst min_seeds."""
    best, worst = fitness.min(), fitness.max()
    if worst == best:
        return np.full(fitness.size, max_seeds, dtype=int)
    share = (worst - fitness) / (worst - best)
    return np.floor(min_seeds + share * (max_seeds - min_seeds)).astype(int)


def dispersal_sigma(t: int, iterations: int, sigma_initial, sigma_final, modulation: float):
    """Spread at iteration t in 1..T; equals sigma_final exactly at t = T."""
    return ((iterations - t) / iterations) ** modulation * (sigma_initial - sigma_final) + sigma_final


def run_iwo(config: TrainConfig, objective):
    p = merge_params(DEFAULTS, config, "iwo")
    if not 0 <= p["min_seeds"] <= p["max_seeds"]:
        raise ValueError("need 0 <= min_seeds <= max_seeds")
    rng = np.random.default_rng(config.seed)
    lower, upper = config.lower, config.upper
    cap, d, T = config.population_size, config.n_dim, config.iterations
    span = upper - lower
    ev = Evaluator(objective, lower, upper, config.workers)
    rec = Recorder("iwo", config)
    try:
        weeds = rng.uniform(lower, upper, (cap, d))
        fit = ev(weeds)
        rec.start(weeds, fit)

        for t in range(1, T + 1):
            sigma = dispersal_sigma(t, T, p["sigma_initial"] * span, p["sigma_final"] * span,
                                    p["modulation"])
            counts = seed_counts(fit, int(p["min_seeds"]), int(p["max_seeds"]))
            parents = np.repeat(np.arange(weeds.shape[0]), counts)
            if parents.size:
                seeds = weeds[parents] + sigma * rng.standard_normal((parents.size, d))
                seeds = ev.clamp(seeds)
                seed_fit = ev(seeds)
                rec.offer(seeds, seed_fit)
                weeds = np.concatenate([weeds, seeds])
                fit = np.concatenate([fit, seed_fit])
            # competitive exclusion
            keep = np.argsort(fit, kind="stable")[:cap]
            weeds, fit = weeds[keep], fit[keep]
            rec.record(t - 1)
    finally:
        ev.close()
    return rec.result(ev.count, p)
