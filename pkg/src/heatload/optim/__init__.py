"""Population-based trainers behind one calling convention.

Each ``run_*`` takes a :class:`TrainConfig` and an objective (a function of
one vector, or an object with ``vectorized = True`` that maps a stack of
vectors to their values) and minimises it inside the configured box.
"""
from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from ..mlp import MseObjective, n_weights
from . import alo, bbo, da, es, iwo, lca
from .alo import run_alo
from .base import ConfigError, ObjectiveError, TrainConfig, TrainResult
from .bbo import run_bbo
from .da import run_da
from .es import run_es
from .iwo import run_iwo
from .lca import run_lca

__all__ = [
    "ALGORITHMS",
    "DEFAULTS",
    "ConfigError",
    "ObjectiveError",
    "TrainConfig",
    "TrainResult",
    "run",
    "run_alo",
    "run_bbo",
    "run_da",
    "run_es",
    "run_iwo",
    "run_lca",
    "train_mlp",
    "load_params",
]

ALGORITHMS = {
    "alo": run_alo,
    "bbo": run_bbo,
    "da": run_da,
    "es": run_es,
    "iwo": run_iwo,
    "lca": run_lca,
}

DEFAULTS = {
    "alo": alo.DEFAULTS,
    "bbo": bbo.DEFAULTS,
    "da": da.DEFAULTS,
    "es": es.DEFAULTS,
    "iwo": iwo.DEFAULTS,
    "lca": lca.DEFAULTS,
}


def run(algorithm: str, config: TrainConfig, objective) -> TrainResult:
    try:
        runner = ALGORITHMS[algorithm]
    except KeyError:
        raise ConfigError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    return runner(config, objective)


def train_mlp(algorithm: str, config: TrainConfig, X, y, n_hidden: int = 5) -> TrainResult:
    """Fit the network weights to scaled rows by minimising the training MSE."""
    if config.n_dim != n_weights(n_hidden):
        raise ConfigError(f"config dimension {config.n_dim} != {n_weights(n_hidden)} network weights")
    return run(algorithm, config, MseObjective(X, y, n_hidden))


def _parse_value(text: str):
    text = text.strip()
    if text.lower() in ("none", "null"):
        return None
    if "," in text:
        return tuple(_parse_value(part) for part in text.split(","))
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def load_params(path: str | Path) -> dict[str, dict]:
    """Read per-algorithm knobs from an INI-style file, one section per algorithm."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read parameter file {path}")
    out = {}
    for section in parser.sections():
        name = section.lower()
        if name not in DEFAULTS:
            raise ConfigError(f"unknown algorithm section [{section}]")
        values = {k: _parse_value(v) for k, v in parser.items(section)}
        unknown = set(values) - set(DEFAULTS[name])
        if unknown:
            raise ConfigError(f"unknown {name} parameters: {sorted(unknown)}")
        out[name] = values
    return out


def initial_vector(seed: int, dim: int, scale: float = 1.0) -> np.ndarray:
    """Uniform start in [-scale, scale] used by gradient baselines."""
    return np.random.default_rng(seed).uniform(-scale, scale, dim)
