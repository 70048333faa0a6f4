"""Configuration, result types and the evaluation wrapper shared by all trainers."""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "ConfigError",
    "ObjectiveError",
    "TrainConfig",
    "TrainResult",
    "Evaluator",
    "Recorder",
    "merge_params",
    "roulette_wheel",
    "rank_weights",
]


class ConfigError(ValueError):
    pass


class ObjectiveError(RuntimeError):
    """The objective returned a non-finite value; ``vector`` is the culprit."""

    def __init__(self, message: str, vector: np.ndarray):
        super().__init__(message)
        self.vector = np.array(vector, copy=True)


@dataclass(frozen=True)
class TrainConfig:
    population_size: int
    iterations: int = 1000
    bounds: tuple = (-10.0, 10.0)
    seed: int = 0
    dim: int | None = None
    params: Mapping = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.population_size, (int, np.integer)) or self.population_size < 2:
            raise ConfigError(f"population_size must be an integer >= 2, got {self.population_size}")
        if not isinstance(self.iterations, (int, np.integer)) or self.iterations < 1:
            raise ConfigError(f"iterations must be a positive integer, got {self.iterations}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        low, high = self.lower, self.upper
        if low.shape != high.shape or low.ndim != 1 or low.size == 0:
            raise ConfigError("bounds must give matching low/high vectors")
        if not np.all(low < high):
            raise ConfigError("every bound needs low < high")
        object.__setattr__(self, "params", dict(self.params))

    def _bound(self, which: int) -> np.ndarray:
        b = self.bounds[which]
        if np.ndim(b) == 0:
            if self.dim is None:
                raise ConfigError("scalar bounds need an explicit dim")
            return np.full(self.dim, float(b))
        arr = np.asarray(b, dtype=float)
        if self.dim is not None and arr.size != self.dim:
            raise ConfigError(f"bounds have {arr.size} entries but dim is {self.dim}")
        return arr

    @property
    def lower(self) -> np.ndarray:
        return self._bound(0)

    @property
    def upper(self) -> np.ndarray:
        return self._bound(1)

    @property
    def n_dim(self) -> int:
        return self.lower.size

    def to_dict(self) -> dict:
        low, high = self.lower, self.upper
        uniform = bool(np.all(low == low[0]) and np.all(high == high[0]))
        return {
            "population_size": int(self.population_size),
            "iterations": int(self.iterations),
            "bounds": [float(low[0]), float(high[0])] if uniform else [low.tolist(), high.tolist()],
            "dim": self.n_dim,
            "seed": int(self.seed),
            "params": dict(self.params),
        }


def merge_params(defaults: Mapping, config: TrainConfig, name: str) -> dict:
    unknown = set(config.params) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown {name} parameters: {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(config.params)
    return merged


@dataclass
class TrainResult:
    algorithm: str
    best_vector: np.ndarray
    best_objective: float
    curve: np.ndarray
    evaluations: int
    wall_time: float
    initial_objective: float = float("nan")
    status: str = "completed"
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "best_vector": [float(f"{v:.17g}") for v in self.best_vector],
            "best_objective": float(self.best_objective),
            "curve": [float(v) for v in self.curve],
            "evaluations": int(self.evaluations),
            "wall_time": float(self.wall_time),
            "initial_objective": float(self.initial_objective),
            "status": self.status,
            "config": self.config,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrainResult":
        return cls(
            data["algorithm"],
            np.array(data["best_vector"], dtype=float),
            float(data["best_objective"]),
            np.array(data["curve"], dtype=float),
            int(data["evaluations"]),
            float(data["wall_time"]),
            float(data.get("initial_objective", float("nan"))),
            data.get("status", "completed"),
            dict(data.get("config", {})),
        )

    def curve_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "best_mse"])
        for i, v in enumerate(self.curve, start=1):
            writer.writerow([i, repr(float(v))])
        return buf.getvalue()


class Evaluator:
    """Counts calls, clamps into the box and rejects non-finite objective values.

    A batch is cut into ``workers`` contiguous chunks that may run on threads;
    results are stitched back in row order, so the outcome does not depend on
    the worker count.
    """

    def __init__(self, objective: Callable, lower: np.ndarray, upper: np.ndarray, workers: int = 1):
        self.objective = objective
        self.lower = lower
        self.upper = upper
        self.workers = workers
        self.count = 0
        self._vectorized = bool(getattr(objective, "vectorized", False))
        self._pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def clamp(self, X: np.ndarray) -> np.ndarray:
        return np.clip(X, self.lower, self.upper)

    def _run(self, X: np.ndarray) -> np.ndarray:
        if self._vectorized:
            return np.asarray(self.objective(X), dtype=float).reshape(-1)
        return np.array([float(self.objective(x)) for x in X])

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = self.clamp(np.atleast_2d(X))
        if self._pool is not None and X.shape[0] > 1:
            chunks = np.array_split(X, min(self.workers, X.shape[0]))
            values = np.concatenate(list(self._pool.map(self._run, chunks)))
        else:
            values = self._run(X)
        self.count += X.shape[0]
        bad = ~np.isfinite(values)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ObjectiveError(f"objective returned {values[i]} for candidate {i}", X[i])
        return values

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()


class Recorder:
    """Best-so-far bookkeeping and the per-iteration convergence curve."""

    def __init__(self, algorithm: str, config: TrainConfig):
        self.algorithm = algorithm
        self.config = config
        self.curve = np.empty(config.iterations)
        self.best_vector = None
        self.best_value = np.inf
        self.initial = np.inf
        self._start = time.perf_counter()

    def offer(self, X: np.ndarray, values: np.ndarray) -> None:
        i = int(np.argmin(values))
        if values[i] < self.best_value:
            self.best_value = float(values[i])
            self.best_vector = np.array(X[i], copy=True)

    def start(self, X: np.ndarray, values: np.ndarray) -> None:
        self.offer(X, values)
        self.initial = self.best_value

    def record(self, t: int) -> None:
        self.curve[t] = self.best_value

    def result(self, evaluations: int, params: Mapping) -> TrainResult:
        cfg = self.config.to_dict()
        cfg["params"] = dict(params)
        return TrainResult(
            self.algorithm,
            self.best_vector,
            self.best_value,
            self.curve.copy(),
            evaluations,
            time.perf_counter() - self._start,
            self.initial,
            "completed",
            cfg,
        )


def rank_weights(values: np.ndarray) -> np.ndarray:
    """Selection weights P, P-1, ..., 1 by ascending objective (stable for ties)."""
    order = np.argsort(values, kind="stable")
    w = np.empty(values.size)
    w[order] = np.arange(values.size, 0, -1, dtype=float)
    return w


def roulette_wheel(weights: np.ndarray, u):
    """Index (or indices) picked with probability proportional to ``weights``.

    ``u`` are uniform draws in [0, 1); passing them in keeps RNG use explicit.
    """
    cum = np.cumsum(weights)
    idx = np.searchsorted(cum, np.asarray(u) * cum[-1], side="right")
    return np.minimum(idx, len(weights) - 1)
