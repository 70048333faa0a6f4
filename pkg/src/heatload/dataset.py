"""Loading, splitting and scaling of the building energy-efficiency corpus.

The CSV layout is the one distributed with the UCI energy-efficiency data:
a header ``X1,...,X8,Y1[,Y2]`` followed by one building per row.  Only the
heating load (``Y1``) is used as a target; ``Y2`` is accepted and dropped.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "FEATURES",
    "CSV_FEATURE_COLUMNS",
    "CSV_TARGET_COLUMN",
    "DEFAULT_SPLIT_SEED",
    "DEFAULT_TRAIN_FRACTION",
    "DataError",
    "Sample",
    "Dataset",
    "DataSplit",
    "Scaler",
    "ScaledSample",
    "load_csv",
    "split",
    "fit_scaler",
    "apply_scaler",
]

FEATURES = (
    "relative_compactness",
    "surface_area",
    "wall_area",
    "roof_area",
    "overall_height",
    "orientation",
    "glazing_area",
    "glazing_area_distribution",
)
CSV_FEATURE_COLUMNS = ("X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8")
CSV_TARGET_COLUMN = "Y1"
_OPTIONAL_COLUMNS = ("Y2",)

DEFAULT_SPLIT_SEED = 7
DEFAULT_TRAIN_FRACTION = 0.70


class DataError(ValueError):
    """Raised for unreadable files and records that violate the sample rules."""


@dataclass(frozen=True)
class Sample:
    """One building: eight design features and its heating load (kWh/m²)."""

    relative_compactness: float
    surface_area: float
    wall_area: float
    roof_area: float
    overall_height: float
    orientation: float
    glazing_area: float
    glazing_area_distribution: float
    heating_load: float = math.nan

    @classmethod
    def from_features(cls, values: Sequence[float], heating_load: float = math.nan) -> "Sample":
        if len(values) != len(FEATURES):
            raise DataError(f"expected {len(FEATURES)} feature values, got {len(values)}")
        return cls(*(float(v) for v in values), heating_load=float(heating_load))

    def features(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURES], dtype=float)

    def check(self, require_target: bool = True) -> None:
        """Raise :class:`DataError` naming the first field that breaks a rule."""
        names = list(FEATURES) + (["heating_load"] if require_target else [])
        for name in names:
            if not math.isfinite(getattr(self, name)):
                raise DataError(f"{name} is not a finite number")
        for name in ("relative_compactness", "surface_area", "wall_area", "roof_area", "overall_height"):
            if getattr(self, name) <= 0:
                raise DataError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.glazing_area <= 0.4:
            raise DataError(f"glazing_area must lie in [0, 0.4], got {self.glazing_area}")
        if self.orientation not in (2, 3, 4, 5):
            raise DataError(f"orientation must be one of 2..5, got {self.orientation}")
        if self.glazing_area_distribution not in (0, 1, 2, 3, 4, 5):
            raise DataError(
                f"glazing_area_distribution must be one of 0..5, got {self.glazing_area_distribution}"
            )


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    source: str = ""

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def X(self) -> np.ndarray:
        if not self.samples:
            return np.empty((0, len(FEATURES)))
        return np.array([s.features() for s in self.samples])

    @property
    def y(self) -> np.ndarray:
        return np.array([s.heating_load for s in self.samples], dtype=float)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.samples[i] for i in indices), self.source)

    def replace(self, index: int, sample: Sample) -> "Dataset":
        samples = list(self.samples)
        samples[index] = sample
        return Dataset(tuple(samples), self.source)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def load_csv(path: str | Path) -> Dataset:
    """Read a ``X1..X8,Y1[,Y2]`` CSV file into a :class:`Dataset`.

    Errors name the 1-based file line so bad rows are easy to find.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        required = list(CSV_FEATURE_COLUMNS) + [CSV_TARGET_COLUMN]
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"{path}: header lacks columns {missing}")
        unknown = [c for c in header if c not in required and c not in _OPTIONAL_COLUMNS]
        if unknown:
            raise DataError(f"{path}: unexpected columns {unknown}")
        order = [header.index(c) for c in required]

        samples = []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"row {line}: expected {len(header)} columns, got {len(row)}")
            try:
                values = [float(row[i]) for i in order]
            except ValueError as exc:
                raise DataError(f"row {line}: non-numeric cell ({exc})") from None
            sample = Sample.from_features(values[:8], values[8])
            try:
                sample.check()
            except DataError as exc:
                raise DataError(f"row {line}: {exc}") from None
            samples.append(sample)
    return Dataset(tuple(samples), f"{path}#sha256={_sha256(path)}")


@dataclass(frozen=True)
class DataSplit:
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    seed: int
    train_fraction: float = DEFAULT_TRAIN_FRACTION

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "train_fraction": self.train_fraction,
            "train_indices": list(self.train_indices),
            "test_indices": list(self.test_indices),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DataSplit":
        return cls(
            tuple(int(i) for i in data["train_indices"]),
            tuple(int(i) for i in data["test_indices"]),
            int(data["seed"]),
            float(data["train_fraction"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DataSplit":
        return cls.from_dict(json.loads(text))


def split(dataset: Dataset, train_fraction: float = DEFAULT_TRAIN_FRACTION,
          seed: int = DEFAULT_SPLIT_SEED) -> DataSplit:
    """Random train/test partition driven only by ``seed``.

    The first ``round(n * train_fraction)`` entries of a seeded permutation
    form the training set (halves round up, so 768 * 0.7 gives 538).
    """
    n = len(dataset)
    if n == 0:
        raise DataError("cannot split an empty dataset")
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(math.floor(n * train_fraction + 0.5))
    if n_train in (0, n):
        raise DataError(f"split of {n} samples at {train_fraction} leaves one side empty")
    perm = np.random.default_rng(seed).permutation(n)
    return DataSplit(
        tuple(int(i) for i in perm[:n_train]),
        tuple(int(i) for i in perm[n_train:]),
        int(seed),
        float(train_fraction),
    )


@dataclass(frozen=True)
class ScaledSample:
    features: np.ndarray
    target: float
    # one flag per feature, then the target
    out_of_range: np.ndarray = field(repr=False)

    @property
    def extrapolated(self) -> bool:
        return bool(np.any(self.out_of_range))


@dataclass(frozen=True)
class Scaler:
    """Affine min-max map of every feature and the target onto [-1, 1]."""

    feature_min: np.ndarray
    feature_max: np.ndarray
    target_min: float
    target_max: float

    def __post_init__(self):
        object.__setattr__(self, "feature_min", np.asarray(self.feature_min, dtype=float))
        object.__setattr__(self, "feature_max", np.asarray(self.feature_max, dtype=float))
        span = self.feature_max - self.feature_min
        for name, width in zip(FEATURES, span):
            if not width > 0:
                raise DataError(f"feature {name} is constant; cannot scale it")
        if not self.target_max > self.target_min:
            raise DataError("heating_load is constant; cannot scale it")

    def transform_features(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return 2.0 * (X - self.feature_min) / (self.feature_max - self.feature_min) - 1.0

    def inverse_features(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return (Z + 1.0) / 2.0 * (self.feature_max - self.feature_min) + self.feature_min

    def transform_target(self, y):
        y = np.asarray(y, dtype=float)
        return 2.0 * (y - self.target_min) / (self.target_max - self.target_min) - 1.0

    def inverse_target(self, z):
        z = np.asarray(z, dtype=float)
        return (z + 1.0) / 2.0 * (self.target_max - self.target_min) + self.target_min

    def state(self) -> tuple:
        return (tuple(self.feature_min), tuple(self.feature_max), self.target_min, self.target_max)

    def to_dict(self) -> dict:
        return {
            "mode": "minmax[-1,1]",
            "features": list(FEATURES),
            "feature_min": [float(v) for v in self.feature_min],
            "feature_max": [float(v) for v in self.feature_max],
            "target_min": float(self.target_min),
            "target_max": float(self.target_max),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scaler":
        return cls(
            np.array(data["feature_min"], dtype=float),
            np.array(data["feature_max"], dtype=float),
            float(data["target_min"]),
            float(data["target_max"]),
        )


def fit_scaler(dataset: Dataset) -> Scaler:
    if len(dataset) == 0:
        raise DataError("cannot fit a scaler on an empty dataset")
    X, y = dataset.X, dataset.y
    return Scaler(X.min(axis=0), X.max(axis=0), float(y.min()), float(y.max()))


def apply_scaler(scaler: Scaler, sample: Sample) -> ScaledSample:
    """Scale one sample. Values outside the fitted range extrapolate and are flagged."""
    x = sample.features()
    z = scaler.transform_features(x)
    flags = list((x < scaler.feature_min) | (x > scaler.feature_max))
    if math.isnan(sample.heating_load):
        target = math.nan
        flags.append(False)
    else:
        target = float(scaler.transform_target(sample.heating_load))
        flags.append(not scaler.target_min <= sample.heating_load <= scaler.target_max)
    return ScaledSample(z, target, np.array(flags, dtype=bool))


# keep dataclass field order in sync with the feature tuple
assert tuple(f.name for f in fields(Sample))[:8] == FEATURES
