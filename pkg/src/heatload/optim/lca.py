"""League championship algorithm.

Teams (candidate solutions) play single round-robin seasons.  Every week each
team learns the result of its own match and of its next opponent's match and
rebuilds its formation from its best formation so far, moving towards or away
from the teams involved (strengths/weaknesses vs opportunities/threats).
"""
from __future__ import annotations

import math

import numpy as np

from .base import Evaluator, Recorder, TrainConfig, merge_params

BYE = -1

DEFAULTS = {
    # step coefficients for the "towards" (psi1) and "away" (psi2) moves
    "psi1": 0.2,
    "psi2": 1.0,
    # success probability of the truncated geometric number of changed dimensions
    "change_prob": 0.3,
}


def round_robin(n_teams: int) -> np.ndarray:
    """Circle-method schedule: ``opp[week, team]`` is the opponent or BYE.

    With an odd number of teams a phantom team is added and whoever meets it
    rests that week.
    """
    m = n_teams + (n_teams % 2)
    slots = list(range(m))
    opp = np.full((m - 1, n_teams), BYE, dtype=int)
    for week in range(m - 1):
        for i in range(m // 2):
            a, b = slots[i], slots[m - 1 - i]
            if a < n_teams and b < n_teams:
                opp[week, a], opp[week, b] = b, a
        slots = [slots[0], slots[-1]] + slots[1:-1]
    return opp


def season_schedule(n_teams: int, rng) -> np.ndarray:
    """Round robin with team labels and week order shuffled."""
    base = round_robin(n_teams)
    perm = rng.permutation(n_teams)
    weeks = rng.permutation(base.shape[0])
    opp = np.full_like(base, BYE)
    for w_new, w in enumerate(weeks):
        row = base[w]
        mapped = np.where(row == BYE, BYE, perm[np.maximum(row, 0)])
        opp[w_new, perm] = mapped
    return opp


def win_probability(f_i, f_j, f_worst):
    """Chance that i beats j, from each side's distance to the worst objective."""
    gi = np.asarray(f_worst - f_i, dtype=float)
    gj = np.asarray(f_worst - f_j, dtype=float)
    total = gi + gj
    out = np.where(total > 0, gi / np.where(total > 0, total, 1.0), 0.5)
    return out if out.ndim else float(out)


def changed_dimensions(rng, n_teams: int, dim: int, change_prob: float) -> np.ndarray:
    """Binary masks; each row flips a truncated-geometric number (>= 1) of dimensions."""
    r = rng.random(n_teams)
    if change_prob >= 1.0:
        q = np.ones(n_teams, dtype=int)
    else:
        lg = math.log(1.0 - change_prob)
        tail = 1.0 - (1.0 - change_prob) ** dim
        q = np.ceil(np.log(1.0 - tail * r) / lg).astype(int)
        q = np.clip(q, 1, dim)
    keys = rng.random((n_teams, dim))
    ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
    return ranks < q[:, None]


def play_week(opp_now: np.ndarray, fit: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Match results for one week; a resting team counts as a winner."""
    n = fit.size
    won = np.ones(n, dtype=bool)
    worst = fit.max()
    for i in range(n):
        j = opp_now[i]
        if j == BYE or j < i:
            continue
        i_wins = u[i] < win_probability(fit[i], fit[j], worst)
        won[i], won[j] = i_wins, not i_wins
    return won


def new_formations(X, best, opp_now, opp_next, won, mask, r1, r2, psi1, psi2):
    j = opp_now
    l = opp_next
    has_j = j != BYE
    has_l = l != BYE
    k = np.where(has_l, opp_now[np.maximum(l, 0)], BYE)
    has_k = has_l & (k != BYE)

    xj = X[np.maximum(j, 0)]
    xk = X[np.maximum(k, 0)]
    l_won = np.where(has_l, won[np.maximum(l, 0)], True)

    # l beat k: steer clear of k's style; l lost to k: imitate k
    term_k = np.where(l_won[:, None], psi1 * r1 * (X - xk), psi2 * r1 * (xk - X))
    term_k = np.where(has_k[:, None], term_k, 0.0)
    # i beat j: keep distance from j; i lost to j: move towards j
    term_j = np.where(won[:, None], psi1 * r2 * (X - xj), psi2 * r2 * (xj - X))
    term_j = np.where(has_j[:, None], term_j, 0.0)
    return best + mask * (term_k + term_j)


def run_lca(config: TrainConfig, objective):
    p = merge_params(DEFAULTS, config, "lca")
    rng = np.random.default_rng(config.seed)
    lower, upper = config.lower, config.upper
    n, d, T = config.population_size, config.n_dim, config.iterations
    ev = Evaluator(objective, lower, upper, config.workers)
    rec = Recorder("lca", config)
    try:
        X = rng.uniform(lower, upper, (n, d))
        fit = ev(X)
        rec.start(X, fit)
        best, best_fit = X.copy(), fit.copy()

        season = season_schedule(n, rng)
        upcoming = season_schedule(n, rng)
        week = 0
        for t in range(T):
            opp_now = season[week]
            opp_next = season[week + 1] if week + 1 < len(season) else upcoming[0]
            won = play_week(opp_now, fit, rng.random(n))
            mask = changed_dimensions(rng, n, d, p["change_prob"])
            r1 = rng.random((n, d))
            r2 = rng.random((n, d))
            X = new_formations(X, best, opp_now, opp_next, won, mask, r1, r2, p["psi1"], p["psi2"])
            X = ev.clamp(X)
            fit = ev(X)
            rec.offer(X, fit)
            better = fit < best_fit
            best[better], best_fit[better] = X[better], fit[better]
            rec.record(t)

            week += 1
            if week == len(season):
                season, upcoming, week = upcoming, season_schedule(n, rng), 0
    finally:
        ev.close()
    return rec.result(ev.count, p)
