"""Regression accuracy criteria and the score-based model ranking."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "MetricError",
    "rmse",
    "mae",
    "r2",
    "mape",
    "MetricReport",
    "evaluate",
    "RankRow",
    "RankTable",
    "score_criterion",
    "competition_rank",
    "score_models",
    "metrics_csv",
    "read_metrics_csv",
]

PHASES = ("train", "test")
CRITERIA = ("rmse", "mae", "r2")


class MetricError(ValueError):
    pass


def _pair(observed, predicted):
    obs = np.asarray(observed, dtype=float).reshape(-1)
    pred = np.asarray(predicted, dtype=float).reshape(-1)
    if obs.size != pred.size:
        raise MetricError(f"length mismatch: {obs.size} observed vs {pred.size} predicted")
    if obs.size == 0:
        raise MetricError("empty input")
    return obs, pred


def rmse(observed, predicted) -> float:
    obs, pred = _pair(observed, predicted)
    return float(np.sqrt(np.mean((obs - pred) ** 2)))


def mae(observed, predicted) -> float:
    obs, pred = _pair(observed, predicted)
    return float(np.mean(np.abs(obs - pred)))


def r2(observed, predicted) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot (may be negative)."""
    obs, pred = _pair(observed, predicted)
    if obs.size < 2:
        raise MetricError("R² needs at least two observations")
    ss_tot = float(np.sum((obs - obs.mean()) ** 2))
    if ss_tot == 0.0:
        raise MetricError("R² is undefined for a constant observed vector")
    return 1.0 - float(np.sum((pred - obs) ** 2)) / ss_tot


def mape(observed, predicted) -> float:
    """Mean absolute percentage error, in percent."""
    obs, pred = _pair(observed, predicted)
    if np.any(obs == 0):
        raise MetricError("MAPE is undefined when an observed value is zero")
    return float(100.0 * np.mean(np.abs(obs - pred) / np.abs(obs)))


@dataclass(frozen=True)
class MetricReport:
    phase: str
    rmse: float
    mae: float
    r2: float
    mape: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "MetricReport":
        return cls(str(data["phase"]), float(data["rmse"]), float(data["mae"]),
                   float(data["r2"]), float(data.get("mape", float("nan"))), int(data.get("n", 0)))


def evaluate(observed, predicted, phase: str) -> MetricReport:
    if phase not in PHASES:
        raise MetricError(f"phase must be one of {PHASES}, got {phase!r}")
    obs, pred = _pair(observed, predicted)
    try:
        pct = mape(obs, pred)
    except MetricError:
        pct = float("nan")
    return MetricReport(phase, rmse(obs, pred), mae(obs, pred), r2(obs, pred), pct, int(obs.size))


def score_criterion(values: Sequence[float], higher_is_better: bool = False) -> list[int]:
    """Give the best of M values score M down to 1 for the worst.

    Tied values share the higher score and the following score is skipped.
    """
    vals = np.asarray(values, dtype=float)
    if higher_is_better:
        vals = -vals
    m = vals.size
    return [int(m - np.sum(vals < v)) for v in vals]


def competition_rank(scores: Sequence[float]) -> list[int]:
    """1 for the highest score; ties share the smaller rank (1, 2, 3, 3, 5)."""
    arr = np.asarray(scores, dtype=float)
    return [int(1 + np.sum(arr > s)) for s in arr]


@dataclass(frozen=True)
class RankRow:
    model: str
    train_scores: tuple[int, int, int]
    train_overall: int
    train_rank: int
    test_scores: tuple[int, int, int]
    test_overall: int
    test_rank: int

    @property
    def total(self) -> int:
        return self.train_overall + self.test_overall


@dataclass(frozen=True)
class RankTable:
    rows: tuple[RankRow, ...]

    def __getitem__(self, model: str) -> RankRow:
        for row in self.rows:
            if row.model == model:
                return row
        raise KeyError(model)

    @property
    def models(self) -> list[str]:
        return [r.model for r in self.rows]

    def to_dict(self) -> dict:
        return {"rows": [
            {
                "model": r.model,
                "train": dict(zip(CRITERIA, r.train_scores), overall=r.train_overall, rank=r.train_rank),
                "test": dict(zip(CRITERIA, r.test_scores), overall=r.test_overall, rank=r.test_rank),
            }
            for r in self.rows
        ]}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self) -> str:
        """Score layout: per phase the three criterion scores, overall score and rank."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([
            "model",
            "train_rmse", "train_mae", "train_r2", "train_overall_score", "train_rank",
            "test_rmse", "test_mae", "test_r2", "test_overall_score", "test_rank",
        ])
        for r in self.rows:
            writer.writerow([r.model, *r.train_scores, r.train_overall, r.train_rank,
                             *r.test_scores, r.test_overall, r.test_rank])
        return buf.getvalue()


def score_models(reports: Mapping[str, Mapping[str, MetricReport]]) -> RankTable:
    """Score and rank models from their train and test reports.

    ``reports`` maps a model name to ``{"train": MetricReport, "test": MetricReport}``.
    Row order in the result follows the mapping's order.
    """
    names = list(reports)
    if len(names) < 2:
        raise MetricError("ranking needs at least two models")
    for name in names:
        for phase in PHASES:
            if phase not in reports[name] or reports[name][phase] is None:
                raise MetricError(f"missing {phase} report for model {name!r}")

    per_phase = {}
    for phase in PHASES:
        cols = [
            score_criterion([reports[n][phase].rmse for n in names]),
            score_criterion([reports[n][phase].mae for n in names]),
            score_criterion([reports[n][phase].r2 for n in names], higher_is_better=True),
        ]
        scores = [tuple(col[i] for col in cols) for i in range(len(names))]
        overall = [sum(s) for s in scores]
        per_phase[phase] = (scores, overall, competition_rank(overall))

    rows = []
    for i, name in enumerate(names):
        tr, te = per_phase["train"], per_phase["test"]
        rows.append(RankRow(name, tr[0][i], tr[1][i], tr[2][i], te[0][i], te[1][i], te[2][i]))
    return RankTable(tuple(rows))


def metrics_csv(reports: Mapping[str, Mapping[str, MetricReport]], digits: int = 4) -> str:
    """Metrics layout: RMSE, MAE, R² for training then testing, one row per model."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "train_rmse", "train_mae", "train_r2", "test_rmse", "test_mae", "test_r2"])
    for name, phases in reports.items():
        row = [name]
        for phase in PHASES:
            rep = phases[phase]
            row += [f"{rep.rmse:.{digits}f}", f"{rep.mae:.{digits}f}", f"{rep.r2:.{digits}f}"]
        writer.writerow(row)
    return buf.getvalue()


def read_metrics_csv(text: str) -> dict[str, dict[str, MetricReport]]:
    reports = {}
    for row in csv.DictReader(io.StringIO(text)):
        reports[row["model"]] = {
            phase: MetricReport(phase, float(row[f"{phase}_rmse"]), float(row[f"{phase}_mae"]),
                                float(row[f"{phase}_r2"]), float("nan"), 0)
            for phase in PHASES
        }
    return reports
