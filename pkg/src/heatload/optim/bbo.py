"""Biogeography-based optimization with a linear migration model."""
from __future__ import annotations

import numpy as np

from .base import Evaluator, Recorder, TrainConfig, merge_params, roulette_wheel

DEFAULTS = {
    "max_immigration": 1.0,
    "max_emigration": 1.0,
    "mutation_prob": 0.05,
    # mutation standard deviation as a fraction of each dimension's range
    "mutation_scale": 0.05,
    "elites": 2,
}


def migration_rates(n: int, max_immigration: float = 1.0, max_emigration: float = 1.0):
    """Immigration and emigration rates for habitats sorted best first.

    The best habitat emigrates at the maximal rate and never immigrates.
    """
    rank = np.arange(n, dtype=float)
    emigration = max_emigration * (n - rank) / n
    immigration = max_immigration * rank / n
    return immigration, emigration


def migrate(habitats: np.ndarray, immigration: np.ndarray, emigration: np.ndarray,
            accept: np.ndarray, select: np.ndarray) -> np.ndarray:
    """One synchronous migration sweep over sorted ``habitats``.

    ``accept`` and ``select`` are uniform draws shaped like ``habitats``:
    dimension d of habitat i immigrates when ``accept[i, d] < immigration[i]``
    and copies from the habitat picked by roulette on emigration rates.
    """
    moved = habitats.copy()
    mask = accept < immigration[:, None]
    if np.any(mask):
        source = roulette_wheel(emigration, select[mask])
        cols = np.nonzero(mask)[1]
        moved[mask] = habitats[source, cols]
    return moved


def run_bbo(config: TrainConfig, objective):
    p = merge_params(DEFAULTS, config, "bbo")
    rng = np.random.default_rng(config.seed)
    lower, upper = config.lower, config.upper
    n, d, T = config.population_size, config.n_dim, config.iterations
    elites = min(int(p["elites"]), n)
    sigma = p["mutation_scale"] * (upper - lower)
    immigration, emigration = migration_rates(n, p["max_immigration"], p["max_emigration"])
    ev = Evaluator(objective, lower, upper, config.workers)
    rec = Recorder("bbo", config)
    try:
        pop = rng.uniform(lower, upper, (n, d))
        cost = ev(pop)
        order = np.argsort(cost, kind="stable")
        pop, cost = pop[order], cost[order]
        rec.start(pop, cost)

        for t in range(T):
            kept, kept_cost = pop[:elites].copy(), cost[:elites].copy()
            accept = rng.random((n, d))
            select = rng.random((n, d))
            new = migrate(pop, immigration, emigration, accept, select)
            mutate = rng.random((n, d)) < p["mutation_prob"]
            noise = rng.standard_normal((n, d))
            new = ev.clamp(np.where(mutate, new + sigma * noise, new))
            new_cost = ev(new)
            rec.offer(new, new_cost)

            order = np.argsort(new_cost, kind="stable")
            pop, cost = new[order], new_cost[order]
            if elites:
                # previous elites replace the worst of the new generation
                pop[n - elites:], cost[n - elites:] = kept, kept_cost
                order = np.argsort(cost, kind="stable")
                pop, cost = pop[order], cost[order]
            rec.record(t)
    finally:
        ev.close()
    return rec.result(ev.count, p)
