"""End-to-end experiments: train/test evaluation, population sweeps, ranking, timing."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .dataset import (
    DEFAULT_SPLIT_SEED,
    DEFAULT_TRAIN_FRACTION,
    DataError,
    Dataset,
    DataSplit,
    fit_scaler,
    load_csv,
    split,
)
from .lm import LmConfig, lm_train
from .metrics import MetricReport, RankTable, evaluate, score_models
from .mlp import N_HIDDEN, N_WEIGHTS, TrainedModel, decode
from .optim import ALGORITHMS, ConfigError, TrainConfig, TrainResult, initial_vector, train_mlp

__all__ = [
    "MODEL_NAMES",
    "REFERENCE_BEST_POPULATION",
    "DEFAULT_POPULATION_SIZES",
    "DATA_ENV",
    "find_data",
    "load_dataset",
    "Experiment",
    "run_experiment",
    "replay",
    "SweepPlan",
    "SweepReport",
    "run_sweep",
    "best_population",
    "rank_models",
    "time_algorithms",
    "timing_csv",
    "build_run_report",
    "verify_run_report",
]

MODEL_NAMES = {
    "alo": "ALO-MLP",
    "bbo": "BBO-MLP",
    "da": "DA-MLP",
    "es": "ES-MLP",
    "iwo": "IWO-MLP",
    "lca": "LCA-MLP",
    "lm": "LM-MLP",
}

REFERENCE_BEST_POPULATION = {"alo": 350, "bbo": 400, "da": 200, "es": 500, "iwo": 50, "lca": 300}

DEFAULT_POPULATION_SIZES = (25, 50, 100, 150, 200, 250, 300, 350, 400, 450, 500)

DATA_ENV = "HEATLOAD_DATA"
_DEFAULT_DATA = ("data/ENB2012_data.csv", "ENB2012_data.csv")


def find_data(path: str | os.PathLike | None = None) -> Path:
    """Locate the dataset: explicit path, then $HEATLOAD_DATA, then ./data/ENB2012_data.csv."""
    if path is not None:
        return Path(path)
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env)
    for candidate in _DEFAULT_DATA:
        if Path(candidate).is_file():
            return Path(candidate)
    raise DataError(
        f"no dataset found; pass --data or set {DATA_ENV} to the 768-row X1..X8,Y1 CSV"
    )


def load_dataset(path: str | os.PathLike | None = None) -> Dataset:
    return load_csv(find_data(path))


@dataclass
class Experiment:
    algorithm: str
    model: TrainedModel
    train: MetricReport
    test: MetricReport
    result: TrainResult
    split: DataSplit

    @property
    def name(self) -> str:
        return MODEL_NAMES.get(self.algorithm, self.algorithm)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "algorithm": self.algorithm,
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "test": self.test.to_dict(),
            "result": self.result.to_dict(),
            "split": self.split.to_dict(),
        }


def _with_dim(config: TrainConfig) -> TrainConfig:
    return config if config.dim is not None else replace(config, dim=N_WEIGHTS)


def run_experiment(algorithm: str, config: TrainConfig, dataset: Dataset,
                   split_seed: int = DEFAULT_SPLIT_SEED,
                   train_fraction: float = DEFAULT_TRAIN_FRACTION,
                   lm_config: LmConfig | None = None) -> Experiment:
    """Split, scale on the training rows, train, and score both phases in kWh/m².

    ``algorithm`` is one of the six metaheuristics or ``"lm"``.  For LM the
    start vector comes from ``config.seed`` and ``config.iterations`` caps the
    epochs unless ``lm_config`` is given.
    """
    parts = split(dataset, train_fraction, split_seed)
    train_set = dataset.subset(parts.train_indices)
    test_set = dataset.subset(parts.test_indices)
    scaler = fit_scaler(train_set)
    X = scaler.transform_features(train_set.X)
    y = scaler.transform_target(train_set.y)

    config = _with_dim(config)
    if algorithm == "lm":
        lm_cfg = lm_config or LmConfig(max_epochs=config.iterations)
        result = lm_train(initial_vector(config.seed, config.n_dim), lm_cfg, X, y)
    elif algorithm in ALGORITHMS:
        result = train_mlp(algorithm, config, X, y)
    else:
        raise ConfigError(f"unknown algorithm {algorithm!r}")

    provenance = {
        "algorithm": algorithm,
        "seed": int(config.seed),
        "population_size": int(config.population_size),
        "iterations": int(config.iterations),
        "split_seed": int(split_seed),
        "train_fraction": float(train_fraction),
        "dataset": dataset.source,
        "version": __version__,
    }
    model = TrainedModel(decode(result.best_vector, N_HIDDEN), scaler, provenance)
    train_rep = evaluate(train_set.y, model.predict_raw(train_set.X), "train")
    test_rep = evaluate(test_set.y, model.predict_raw(test_set.X), "test")
    return Experiment(algorithm, model, train_rep, test_rep, result, parts)


def replay(model: TrainedModel, dataset: Dataset, parts: DataSplit) -> dict[str, MetricReport]:
    """Recompute both phases' metrics from a serialized model and split."""
    out = {}
    for phase, idx in (("train", parts.train_indices), ("test", parts.test_indices)):
        rows = dataset.subset(idx)
        out[phase] = evaluate(rows.y, model.predict_raw(rows.X), phase)
    return out


# ----------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepPlan:
    algorithms: tuple[str, ...]
    population_sizes: tuple[int, ...] = DEFAULT_POPULATION_SIZES
    iterations: int = 1000
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    split_seed: int = DEFAULT_SPLIT_SEED
    bounds: tuple[float, float] = (-10.0, 10.0)
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(str(a).lower() for a in self.algorithms))
        object.__setattr__(self, "population_sizes", tuple(int(p) for p in self.population_sizes))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        object.__setattr__(self, "params", {k: dict(v) for k, v in dict(self.params).items()})
        if not self.algorithms:
            raise ConfigError("a sweep needs at least one algorithm")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithms {unknown}; choose from {sorted(ALGORITHMS)}")
        if not self.population_sizes or min(self.population_sizes) < 2:
            raise ConfigError("population sizes must be a non-empty list of integers >= 2")
        if not self.seeds:
            raise ConfigError("a sweep needs at least one seed")
        if self.iterations < 1:
            raise ConfigError("iterations must be positive")
        if len(self.bounds) != 2 or not self.bounds[0] < self.bounds[1]:
            raise ConfigError("bounds must be (low, high) with low < high")

    def cells(self) -> list[tuple[str, int, int]]:
        return [(a, p, s) for a in self.algorithms for p in self.population_sizes for s in self.seeds]

    def config(self, algorithm: str, population_size: int, seed: int, workers: int = 1) -> TrainConfig:
        return TrainConfig(population_size, self.iterations, self.bounds, seed, N_WEIGHTS,
                           self.params.get(algorithm, {}), workers)

    def to_dict(self) -> dict:
        return {
            "algorithms": list(self.algorithms),
            "population_sizes": list(self.population_sizes),
            "iterations": self.iterations,
            "seeds": list(self.seeds),
            "split_seed": self.split_seed,
            "bounds": list(self.bounds),
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SweepPlan":
        known = {"algorithms", "population_sizes", "iterations", "seeds", "split_seed", "bounds", "params"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown plan fields {sorted(extra)}")
        if "algorithms" not in data:
            raise ConfigError("plan lacks 'algorithms'")
        return cls(**dict(data))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SweepPlan":
        return cls.from_dict(json.loads(text))


def cell_key(plan: SweepPlan, algorithm: str, population_size: int, seed: int, source: str = "") -> str:
    """Stable hash naming one cell's file; any setting that changes the result changes it."""
    payload = json.dumps({
        "algorithm": algorithm,
        "population_size": population_size,
        "seed": seed,
        "iterations": plan.iterations,
        "split_seed": plan.split_seed,
        "bounds": list(plan.bounds),
        "params": plan.params.get(algorithm, {}),
        "dataset": source,
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _run_cell(plan: SweepPlan, dataset: Dataset, algorithm: str, size: int, seed: int) -> dict:
    record = {"algorithm": algorithm, "population_size": size, "seed": seed}
    try:
        exp = run_experiment(algorithm, plan.config(algorithm, size, seed), dataset, plan.split_seed)
    except Exception as exc:  # recorded, the sweep goes on
        record.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return record
    res = exp.result
    record.update(
        status="ok",
        final_mse=float(res.curve[-1]),
        evaluations=int(res.evaluations),
        wall_time=float(res.wall_time),
        curve=[float(v) for v in res.curve],
        best_vector=[float(f"{v:.17g}") for v in res.best_vector],
        train=exp.train.to_dict(),
        test=exp.test.to_dict(),
    )
    return record


def _cell_task(args):
    return _run_cell(*args)


@dataclass
class SweepReport:
    plan: SweepPlan
    cells: list[dict]
    best_sizes: dict[str, int | None]
    dataset: str = ""

    def cell(self, algorithm: str, population_size: int, seed: int) -> dict:
        for c in self.cells:
            if (c["algorithm"], c["population_size"], c["seed"]) == (algorithm, population_size, seed):
                return c
        raise KeyError((algorithm, population_size, seed))

    @property
    def failures(self) -> list[dict]:
        return [c for c in self.cells if c["status"] != "ok"]

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "dataset": self.dataset,
            "best_sizes": self.best_sizes,
            "reference_best_sizes": {a: REFERENCE_BEST_POPULATION[a] for a in self.plan.algorithms},
            "cells": self.cells,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: Mapping) -> "SweepReport":
        return cls(SweepPlan.from_dict(data["plan"]), list(data["cells"]),
                   dict(data["best_sizes"]), data.get("dataset", ""))

    def curves_csv(self) -> str:
        """Long-format convergence curves: algorithm, size, seed, iteration, best MSE."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["algorithm", "population_size", "seed", "iteration", "best_mse"])
        for c in self.cells:
            for i, v in enumerate(c.get("curve", ()), start=1):
                writer.writerow([c["algorithm"], c["population_size"], c["seed"], i, repr(v)])
        return buf.getvalue()


def best_population(cells: Sequence[dict], algorithm: str) -> int | None:
    """Size with the lowest median final training MSE over seeds; ties go to the smaller size."""
    by_size: dict[int, list[float]] = {}
    for c in cells:
        if c["algorithm"] == algorithm and c["status"] == "ok":
            by_size.setdefault(c["population_size"], []).append(c["final_mse"])
    if not by_size:
        return None
    return min(by_size, key=lambda p: (statistics.median(by_size[p]), p))


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def run_sweep(plan: SweepPlan, dataset: Dataset, out_dir: str | os.PathLike | None = None,
              workers: int = 1) -> SweepReport:
    """Run every (algorithm, size, seed) cell and pick each algorithm's best size.

    With ``out_dir`` each finished cell is saved under ``cells/<key>.json`` and
    skipped on a later run, so an interrupted sweep resumes where it stopped.
    Cells may run in ``workers`` processes; the report lists them in plan order.
    """
    cells = plan.cells()
    cell_dir = None
    if out_dir is not None:
        cell_dir = Path(out_dir) / "cells"
        cell_dir.mkdir(parents=True, exist_ok=True)

    records: dict[int, dict] = {}
    todo = []
    for i, (a, p, s) in enumerate(cells):
        if cell_dir is not None:
            f = cell_dir / f"{cell_key(plan, a, p, s, dataset.source)}.json"
            if f.is_file():
                records[i] = json.loads(f.read_text())
                continue
        todo.append(i)

    def store(i: int, rec: dict) -> None:
        records[i] = rec
        if cell_dir is not None and rec["status"] == "ok":
            a, p, s = cells[i]
            _write_atomic(cell_dir / f"{cell_key(plan, a, p, s, dataset.source)}.json", json.dumps(rec))

    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(workers) as pool:
            args = [(plan, dataset, *cells[i]) for i in todo]
            for i, rec in zip(todo, pool.map(_cell_task, args)):
                store(i, rec)
    else:
        for i in todo:
            store(i, _run_cell(plan, dataset, *cells[i]))

    ordered = [records[i] for i in range(len(cells))]
    best = {a: best_population(ordered, a) for a in plan.algorithms}
    report = SweepReport(plan, ordered, best, dataset.source)
    if out_dir is not None:
        _write_atomic(Path(out_dir) / "sweep.json", report.to_json())
    return report


# ----------------------------------------------------------- rank & timing

def rank_models(reports: Mapping[str, Mapping[str, MetricReport]]) -> RankTable:
    """Criterion scoring and ranking; see :func:`heatload.metrics.score_models`."""
    return score_models(reports)


def time_algorithms(plan: SweepPlan, dataset: Dataset, out_dir=None, workers: int = 1) -> list[dict]:
    """Median wall time and evaluation count per (algorithm, population size)."""
    return timing_table(run_sweep(plan, dataset, out_dir, workers))


def timing_table(report: SweepReport) -> list[dict]:
    rows = []
    for a in report.plan.algorithms:
        for p in report.plan.population_sizes:
            ok = [c for c in report.cells
                  if c["algorithm"] == a and c["population_size"] == p and c["status"] == "ok"]
            rows.append({
                "algorithm": a,
                "population_size": p,
                "runs": len(ok),
                "median_wall_time": statistics.median(c["wall_time"] for c in ok) if ok else float("nan"),
                "median_evaluations": statistics.median(c["evaluations"] for c in ok) if ok else float("nan"),
            })
    return rows


def timing_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, ["algorithm", "population_size", "runs", "median_wall_time",
                                  "median_evaluations"], lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


# ------------------------------------------------------------- run reports

def build_run_report(experiments: Sequence[Experiment], dataset: Dataset,
                     timing: Sequence[dict] = ()) -> dict:
    """Self-contained record of a multi-model experiment, verifiable without retraining."""
    if not experiments:
        raise ConfigError("no experiments to report")
    splits = {json.dumps(e.split.to_dict(), sort_keys=True) for e in experiments}
    if len(splits) != 1:
        raise ConfigError("all experiments in a report must share one split")
    models = {e.name: e.to_dict() for e in experiments}
    ranking = None
    if len(experiments) >= 2:
        ranking = rank_models({e.name: {"train": e.train, "test": e.test} for e in experiments}).to_dict()
    return {
        "version": __version__,
        "dataset": dataset.source,
        "split": experiments[0].split.to_dict(),
        "scaler": experiments[0].model.scaler.to_dict(),
        "models": models,
        "ranking": ranking,
        "timing": list(timing),
    }


def verify_run_report(report: Mapping, dataset: Dataset, tol: float = 1e-10) -> float:
    """Recompute every stored metric; return the largest deviation or raise past ``tol``."""
    if report.get("dataset") and dataset.source and report["dataset"] != dataset.source:
        raise DataError("report was produced from a different dataset file")
    parts = DataSplit.from_dict(report["split"])
    worst = 0.0
    for name, entry in report["models"].items():
        model = TrainedModel.from_dict(entry["model"])
        fresh = replay(model, dataset, parts)
        for phase in ("train", "test"):
            stored = MetricReport.from_dict(entry[phase])
            for key in ("rmse", "mae", "r2", "mape"):
                a, b = getattr(stored, key), getattr(fresh[phase], key)
                if np.isnan(a) and np.isnan(b):
                    continue
                worst = max(worst, abs(a - b))
            if stored.n != fresh[phase].n:
                raise DataError(f"{name} {phase}: row count {fresh[phase].n} != stored {stored.n}")
    if worst > tol:
        raise ValueError(f"replayed metrics deviate by {worst:.3g} (> {tol:g})")
    return worst
