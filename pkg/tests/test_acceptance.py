"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Criteria 4, 5, 7 (training-R² part) and 9 need the real 768-row
energy-efficiency CSV (``$HEATLOAD_DATA`` or ``data/ENB2012_data.csv``).
Without it they fail with an explanatory message rather than being skipped.
"""
from __future__ import annotations

import statistics
from pathlib import Path

import mpmath
import numpy as np
import pytest

from conftest import find_canonical, record_criterion
from heatload.dataset import fit_scaler, load_csv, split
from heatload.harness import REFERENCE_BEST_POPULATION, run_experiment
from heatload.lm import LmConfig, damped_step, jacobian, lm_train, residuals
from heatload.metrics import mae, mape, r2, read_metrics_csv, rmse, score_models
from heatload.mlp import N_WEIGHTS, Scaler, forward, forward_batch, reference_bbo_predictor
from heatload.optim import ALGORITHMS, TrainConfig, initial_vector, run

DATA = Path(__file__).parent / "data"
SEEDS = (0, 1, 2, 3, 4)
ITERATIONS = 1000
SPHERE_LIMITS = {"alo": 1e-2, "bbo": 1e-2, "da": 1e-1, "es": 1e-3, "iwo": 1e-3, "lca": 1e-1}
NO_DATA = ("canonical dataset not found; set HEATLOAD_DATA or place ENB2012_data.csv under data/ "
           "(the criterion needs the real heating-load values)")


def verdict(number: int, passed: bool, detail: str) -> None:
    record_criterion(number, passed, detail)
    assert passed, detail


@pytest.fixture(scope="module")
def canonical():
    path = find_canonical()
    if path is None:
        return None
    ds = load_csv(path)
    return ds if len(ds) == 768 else None


_RUNS: dict = {}


def acceptance_runs(dataset, algorithm):
    """Five seeded 1000-iteration runs at the algorithm's best reported population size."""
    if algorithm not in _RUNS:
        pop = REFERENCE_BEST_POPULATION[algorithm]
        _RUNS[algorithm] = [
            run_experiment(algorithm, TrainConfig(pop, ITERATIONS, (-10.0, 10.0), s, N_WEIGHTS), dataset)
            for s in SEEDS
        ]
    return _RUNS[algorithm]


def test_criterion_1_ranking_reproduction():
    table = score_models(read_metrics_csv((DATA / "model_metrics.csv").read_text()))
    produced = table.to_csv()
    golden = (DATA / "model_scores.csv").read_text()
    os_pairs = {r.model: (r.train_overall, r.test_overall) for r in table.rows}
    verdict(1, produced == golden, f"scores/OS/ranks exact match with golden table: {produced == golden}; "
                                   f"OS {os_pairs}")


def test_criterion_2_metric_oracles():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    ordered = True
    affine = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 200))
        o = rng.uniform(1.0, 50.0, n)
        p = o + rng.normal(0.0, rng.uniform(0.1, 5.0), n)
        d = o - p
        oracle = {
            "rmse": float(mpmath.sqrt(mpmath.fsum(mpmath.mpf(x) ** 2 for x in d) / n)),
            "mae": float(mpmath.fsum(abs(mpmath.mpf(x)) for x in d) / n),
            "r2": float(1 - mpmath.fsum(mpmath.mpf(x) ** 2 for x in d)
                        / mpmath.fsum((mpmath.mpf(x) - mpmath.fsum(o) / n) ** 2 for x in o)),
            "mape": float(100 * mpmath.fsum(abs(mpmath.mpf(a) - b) / abs(mpmath.mpf(a)) for a, b in zip(o, p)) / n),
        }
        got = {"rmse": rmse(o, p), "mae": mae(o, p), "r2": r2(o, p), "mape": mape(o, p)}
        worst = max(worst, max(abs(got[k] - oracle[k]) for k in got))
        ordered &= got["rmse"] >= got["mae"]
        a, b = rng.uniform(0.1, 10.0), rng.uniform(-100.0, 100.0)
        affine = max(affine, abs(r2(a * o + b, a * p + b) - got["r2"]))
    ok = worst <= 1e-12 and ordered and affine <= 1e-10
    verdict(2, ok, f"max |metric - oracle| = {worst:.2e} (<= 1e-12), rmse >= mae on all: {ordered}, "
                   f"R2 affine drift = {affine:.2e} (<= 1e-10)")


def test_criterion_3_reference_network():
    lines = [l.split() for l in (DATA / "reference_bbo_weights.txt").read_text().splitlines()
             if l.strip() and not l.startswith("#")]
    golden = [w for row in lines for w in row]
    ref = reference_bbo_predictor(Scaler(np.zeros(8), np.ones(8), 0.0, 1.0))
    p = ref.params
    ours = ([f"{w:.4f}" for w in p.hidden_weights.ravel()] + [f"{b:.4f}" for b in p.hidden_biases]
            + [f"{w:.4f}" for w in p.output_weights] + [f"{p.output_bias:.4f}"])
    digits_ok = ours == golden and len(golden) == 51

    mpmath.mp.dps = 50
    x = [0.25, -0.5, 0.75, -1.0, 1.0, -1.0 / 3.0, 0.5, 0.2]
    hw = [lines[j] for j in range(5)]
    out = mpmath.mpf(lines[7][0])
    for j in range(5):
        pre = mpmath.mpf(lines[5][j]) + mpmath.fsum(mpmath.mpf(w) * mpmath.mpf(v) for w, v in zip(hw[j], x))
        out += mpmath.mpf(lines[6][j]) * (2 / (1 + mpmath.exp(-2 * pre)) - 1)
    err = abs(forward(p, x) - float(out))
    verdict(3, digits_ok and err <= 1e-12,
            f"51 constants digit-for-digit: {digits_ok}; forward vs high precision = {err:.2e} (<= 1e-12)")


def test_criterion_4_bbo_training(canonical):
    if canonical is None:
        verdict(4, False, NO_DATA)
    runs = acceptance_runs(canonical, "bbo")
    med_r2 = statistics.median(e.test.r2 for e in runs)
    med_rmse = statistics.median(e.test.rmse for e in runs)
    verdict(4, med_r2 >= 0.90 and med_rmse <= 3.5,
            f"BBO pop 400, 1000 it, 5 seeds: median test R2 = {med_r2:.4f} (>= 0.90), "
            f"median test RMSE = {med_rmse:.4f} (<= 3.5)")


def test_criterion_5_ordering(canonical):
    if canonical is None:
        verdict(5, False, NO_DATA)
    med = {a: statistics.median(e.test.rmse for e in acceptance_runs(canonical, a)) for a in ALGORITHMS}
    ok = med["bbo"] < med["da"] and med["bbo"] < med["lca"]
    verdict(5, ok, "median test RMSE " + ", ".join(f"{a.upper()} {v:.4f}" for a, v in med.items())
            + " (BBO < DA and BBO < LCA)")


def test_criterion_6_sphere_suite():
    worst = {}
    for a in sorted(ALGORITHMS):
        worst[a] = max(run(a, TrainConfig(10, 200, (-10, 10), s, dim=2), lambda x: float(np.dot(x, x)))
                       .best_objective for s in SEEDS)
    ok = all(worst[a] <= SPHERE_LIMITS[a] for a in worst)
    verdict(6, ok, "worst best-objective over seeds 0-4: "
            + ", ".join(f"{a.upper()} {worst[a]:.1e} (<= {SPHERE_LIMITS[a]:.0e})" for a in worst))


def test_criterion_7_lm(canonical):
    rng = np.random.default_rng(77)
    fd = 0.0
    for _ in range(10):
        v = rng.normal(0, 0.7, N_WEIGHTS)
        X, y = rng.uniform(-1, 1, (5, 8)), rng.uniform(-1, 1, 5)
        J = jacobian(v, X, y)
        for k in range(N_WEIGHTS):
            up, down = v.copy(), v.copy()
            up[k] += 1e-6
            down[k] -= 1e-6
            col = (residuals(up, X, y) - residuals(down, X, y)) / 2e-6
            fd = max(fd, float(np.max(np.abs(J[:, k] - col))))
    v = rng.normal(0, 0.7, N_WEIGHTS)
    X, y = rng.uniform(-1, 1, (40, 8)), rng.uniform(-1, 1, 40)
    J, e = jacobian(v, X, y), residuals(v, X, y)
    g = J.T @ e
    d = damped_step(J, e, 1e8)
    cos = float(-g @ d / (np.linalg.norm(g) * np.linalg.norm(d)))
    part = f"Jacobian vs central differences = {fd:.2e} (<= 1e-6), cosine at mu=1e8 = {cos:.6f} (>= 0.9998)"
    if canonical is None:
        verdict(7, False, part + "; training-R2 part: " + NO_DATA)
    parts = split(canonical)
    train = canonical.subset(parts.train_indices)
    sc = fit_scaler(train)
    Xs, ys = sc.transform_features(train.X), sc.transform_target(train.y)
    res = lm_train(initial_vector(0, N_WEIGHTS), LmConfig(max_epochs=200), Xs, ys)
    fit_r2 = r2(train.y, sc.inverse_target(forward_batch(res.best_vector, Xs)[0]))
    verdict(7, fd <= 1e-6 and cos >= 0.9998 and fit_r2 >= 0.9,
            part + f", LM training R2 after {len(res.curve)} epochs = {fit_r2:.4f} (>= 0.9)")


def test_criterion_8_determinism(canonical, surrogate):
    dataset = canonical if canonical is not None else surrogate
    label = "canonical" if canonical is not None else "synthetic stand-in"
    same = True
    for a in sorted(ALGORITHMS):
        cfgs = [TrainConfig(12, 40, (-10.0, 10.0), 11, N_WEIGHTS, {}, w) for w in (1, 1, 3)]
        exps = [run_experiment(a, c, dataset) for c in cfgs]
        for other in exps[1:]:
            same &= bool(np.array_equal(other.result.best_vector, exps[0].result.best_vector))
            same &= bool(np.array_equal(other.result.curve, exps[0].result.curve))
            same &= other.train == exps[0].train and other.test == exps[0].test
            same &= other.model.to_json() == exps[0].model.to_json()
    lm = [run_experiment("lm", TrainConfig(2, 20, (-10.0, 10.0), 5, N_WEIGHTS), dataset) for _ in range(2)]
    same &= bool(np.array_equal(lm[0].result.best_vector, lm[1].result.best_vector)) and lm[0].test == lm[1].test
    verdict(8, same, f"six trainers + LM + pipeline bit-identical across reruns and 1 vs 3 workers "
                     f"({label} data): {same}")


def test_criterion_9_convergence_shape(canonical):
    if canonical is None:
        verdict(9, False, NO_DATA)
    details, ok = [], True
    for a in sorted(ALGORITHMS):
        gaps = [(e.result.curve[0] - e.result.curve[500]) - (e.result.curve[500] - e.result.curve[999])
                for e in acceptance_runs(canonical, a)]
        m = statistics.median(gaps)
        ok &= m >= 0
        details.append(f"{a.upper()} {m:.2e}")
    verdict(9, ok, "median early-minus-late drop (>= 0): " + ", ".join(details))
