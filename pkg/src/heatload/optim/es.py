"""(mu + lambda) evolution strategy with one self-adapted step size per individual."""
from __future__ import annotations

import math

import numpy as np

from .base import Evaluator, Recorder, TrainConfig, merge_params

DEFAULTS = {
    # initial step size as a fraction of the mean dimension range
    "initial_sigma": 0.10,
    # log-normal learning rate; None means 1/sqrt(2 * dim)
    "learning_rate": None,
}


def run_es(config: TrainConfig, objective):
    p = merge_params(DEFAULTS, config, "es")
    if p["initial_sigma"] < 0:
        raise ValueError("initial_sigma must be >= 0")
    rng = np.random.default_rng(config.seed)
    lower, upper = config.lower, config.upper
    P, d, T = config.population_size, config.n_dim, config.iterations
    mu, lam = max(1, P // 2), P
    tau = p["learning_rate"] if p["learning_rate"] is not None else 1.0 / math.sqrt(2.0 * d)
    ev = Evaluator(objective, lower, upper, config.workers)
    rec = Recorder("es", config)
    try:
        X = rng.uniform(lower, upper, (P, d))
        fit = ev(X)
        rec.start(X, fit)
        keep = np.argsort(fit, kind="stable")[:mu]
        X, fit = X[keep], fit[keep]
        sigma = np.full(mu, p["initial_sigma"] * float(np.mean(upper - lower)))
        parent_of = np.arange(lam) % mu

        for t in range(T):
            child_sigma = sigma[parent_of] * np.exp(tau * rng.standard_normal(lam))
            children = X[parent_of] + child_sigma[:, None] * rng.standard_normal((lam, d))
            children = ev.clamp(children)
            child_fit = ev(children)
            rec.offer(children, child_fit)

            pool = np.concatenate([X, children])
            pool_fit = np.concatenate([fit, child_fit])
            pool_sigma = np.concatenate([sigma, child_sigma])
            keep = np.argsort(pool_fit, kind="stable")[:mu]
            X, fit, sigma = pool[keep], pool_fit[keep], pool_sigma[keep]
            rec.record(t)
    finally:
        ev.close()
    return rec.result(ev.count, p)
