"""The 8-5-1 tansig perceptron used as the heating-load regressor.

All weights travel as one flat vector (the search individual for the
metaheuristics) in this order:

    hidden weights (row-major, n_hidden x 8) | hidden biases | output weights | output bias

so for the default five hidden neurons entries 40..44 are the hidden biases
and entry 50 is the output bias.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import FEATURES, Sample, Scaler

__all__ = [
    "N_INPUTS",
    "N_HIDDEN",
    "N_WEIGHTS",
    "n_weights",
    "tansig",
    "tansig_derivative",
    "MlpParams",
    "decode",
    "encode",
    "forward",
    "forward_batch",
    "mse_objective",
    "MseObjective",
    "TrainedModel",
    "reference_bbo_predictor",
    "REFERENCE_HIDDEN_WEIGHTS",
    "REFERENCE_HIDDEN_BIASES",
    "REFERENCE_OUTPUT_WEIGHTS",
    "REFERENCE_OUTPUT_BIAS",
    "predict",
]

N_INPUTS = 8
N_HIDDEN = 5
_SATURATION = 20.0


def n_weights(n_hidden: int = N_HIDDEN, n_inputs: int = N_INPUTS) -> int:
    return n_hidden * n_inputs + n_hidden + n_hidden + 1


N_WEIGHTS = n_weights()


def tansig(x):
    """2 / (1 + exp(-2x)) - 1, saturating to exactly +-1 beyond |x| > 20.

    At the cut-off exp(-40) is below half an ulp of 1, so clipping the
    argument yields +-1 exactly and never overflows.
    """
    a = np.clip(np.asarray(x, dtype=float), -_SATURATION, _SATURATION)
    out = 2.0 / (1.0 + np.exp(-2.0 * a)) - 1.0
    return out if out.ndim else float(out)


def _tansig_inplace(a: np.ndarray) -> np.ndarray:
    np.clip(a, -_SATURATION, _SATURATION, out=a)
    a *= -2.0
    np.exp(a, out=a)
    a += 1.0
    np.divide(2.0, a, out=a)
    a -= 1.0
    return a


def tansig_derivative(x):
    z = tansig(x)
    return 1.0 - np.square(z)


@dataclass(frozen=True)
class MlpParams:
    hidden_weights: np.ndarray
    hidden_biases: np.ndarray
    output_weights: np.ndarray
    output_bias: float

    def __post_init__(self):
        hw = np.array(self.hidden_weights, dtype=float)
        hb = np.array(self.hidden_biases, dtype=float).reshape(-1)
        ow = np.array(self.output_weights, dtype=float).reshape(-1)
        if hw.ndim != 2 or hw.shape[1] != N_INPUTS:
            raise ValueError(f"hidden_weights must have shape (h, {N_INPUTS}), got {hw.shape}")
        h = hw.shape[0]
        if hb.shape != (h,) or ow.shape != (h,):
            raise ValueError("bias and output vectors must match the hidden layer size")
        for arr in (hw, hb, ow):
            arr.setflags(write=False)
        object.__setattr__(self, "hidden_weights", hw)
        object.__setattr__(self, "hidden_biases", hb)
        object.__setattr__(self, "output_weights", ow)
        object.__setattr__(self, "output_bias", float(self.output_bias))
        if not (np.all(np.isfinite(hw)) and np.all(np.isfinite(hb)) and np.all(np.isfinite(ow))
                and math.isfinite(self.output_bias)):
            raise ValueError("network parameters must be finite")

    @property
    def n_hidden(self) -> int:
        return self.hidden_weights.shape[0]


def decode(vector, n_hidden: int = N_HIDDEN) -> MlpParams:
    v = np.asarray(vector, dtype=float).reshape(-1)
    if v.size != n_weights(n_hidden):
        raise ValueError(f"weight vector must have {n_weights(n_hidden)} entries, got {v.size}")
    a = n_hidden * N_INPUTS
    return MlpParams(
        v[:a].reshape(n_hidden, N_INPUTS),
        v[a:a + n_hidden],
        v[a + n_hidden:a + 2 * n_hidden],
        v[-1],
    )


def encode(params: MlpParams) -> np.ndarray:
    return np.concatenate([
        params.hidden_weights.reshape(-1),
        params.hidden_biases,
        params.output_weights,
        [params.output_bias],
    ])


def _split_batch(V: np.ndarray, n_hidden: int):
    a = n_hidden * N_INPUTS
    W1 = np.ascontiguousarray(V[:, :a]).reshape(-1, n_hidden, N_INPUTS)
    b1 = np.ascontiguousarray(V[:, a:a + n_hidden])
    w2 = np.ascontiguousarray(V[:, a + n_hidden:a + 2 * n_hidden])
    b2 = np.ascontiguousarray(V[:, -1])
    return W1, b1, w2, b2


def hidden_preactivation(V: np.ndarray, X: np.ndarray, n_hidden: int = N_HIDDEN) -> np.ndarray:
    """Pre-activations of shape (members, hidden, rows).

    Each member goes through its own identically shaped matrix product, so
    its values do not depend on how a population was cut into batches.
    """
    W1, b1, _, _ = _split_batch(V, n_hidden)
    pre = np.matmul(W1, np.ascontiguousarray(X.T))
    pre += b1[:, :, None]
    return pre


def forward_batch(V, X, n_hidden: int = N_HIDDEN) -> np.ndarray:
    """Network outputs for many weight vectors at once: (members, rows)."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != N_INPUTS:
        raise ValueError(f"inputs must have {N_INPUTS} columns, got {X.shape[1]}")
    _, _, w2, b2 = _split_batch(V, n_hidden)
    z = _tansig_inplace(hidden_preactivation(V, X, n_hidden))
    out = np.matmul(w2[:, None, :], z)[:, 0, :]
    out += b2[:, None]
    return out


def forward(params: MlpParams, scaled_inputs):
    """Scaled heating load for one input row (float) or many rows (array)."""
    x = np.asarray(scaled_inputs, dtype=float)
    out = forward_batch(encode(params), x, params.n_hidden)[0]
    return float(out[0]) if x.ndim == 1 else out


def _batch_mse(V: np.ndarray, X: np.ndarray, y: np.ndarray, n_hidden: int) -> np.ndarray:
    err = forward_batch(V, X, n_hidden)
    err -= y[None, :]
    err *= err
    # running sum keeps a fixed left-to-right order over the rows
    return np.cumsum(err, axis=1)[:, -1] / err.shape[1]


def mse_objective(vector, X, y, n_hidden: int = N_HIDDEN) -> float:
    """Mean squared error of the network ``vector`` over scaled rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    return float(_batch_mse(np.asarray(vector, dtype=float)[None, :], X, y, n_hidden)[0])


class MseObjective:
    """Batched MSE over a fixed scaled training set.

    Called with a (members, 51) array it returns one MSE per member.  The
    metaheuristics detect the ``vectorized`` flag and hand over whole
    generations at once.
    """

    vectorized = True

    def __init__(self, X, y, n_hidden: int = N_HIDDEN):
        self.X = np.ascontiguousarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float).reshape(-1)
        if self.X.shape[0] == 0:
            raise ValueError("training set is empty")
        if self.X.shape[0] != self.y.size:
            raise ValueError("inputs and targets differ in length")
        self.n_hidden = n_hidden
        self.dim = n_weights(n_hidden)

    def __call__(self, V) -> np.ndarray:
        V = np.asarray(V, dtype=float)
        if V.ndim == 1:
            return float(_batch_mse(V[None, :], self.X, self.y, self.n_hidden)[0])
        return _batch_mse(V, self.X, self.y, self.n_hidden)


# Reference BBO-trained network.  Inputs are ordered RC, SA, WA, RA, OH,
# orientation, GA, GAD, which is the same order as FEATURES.
REFERENCE_HIDDEN_WEIGHTS = (
    (-0.8459, 0.2944, -0.7562, 0.1225, -0.2456, 0.3266, -1.0020, 0.6090),
    (-0.2863, 0.4134, -0.1649, -0.8857, 0.8828, -0.9327, 0.1703, 0.4336),
    (0.7094, -0.5079, -0.6916, 0.6346, -0.3142, -0.0794, -0.4306, 0.9990),
    (-1.1274, -0.0470, -0.1336, 0.6061, 0.0406, 0.3088, -0.8939, -0.6135),
    (0.1514, 0.2735, -0.8389, 0.1982, -0.6465, -1.0777, 0.2336, 0.6753),
)
REFERENCE_HIDDEN_BIASES = (1.7120, 0.8560, 0.0000, -0.8560, 1.7120)
REFERENCE_OUTPUT_WEIGHTS = (0.9076, 0.0050, -0.3986, -0.4754, -0.2692)
REFERENCE_OUTPUT_BIAS = 0.0283


@dataclass(frozen=True)
class TrainedModel:
    params: MlpParams
    scaler: Scaler
    provenance: dict = field(default_factory=dict)

    def predict_raw(self, X) -> np.ndarray:
        """Heating load in kWh/m² for raw (unscaled) feature rows."""
        Z = self.scaler.transform_features(np.atleast_2d(X))
        out = forward_batch(encode(self.params), Z, self.params.n_hidden)[0]
        return self.scaler.inverse_target(out)

    def to_dict(self) -> dict:
        return {
            "topology": [N_INPUTS, self.params.n_hidden, 1],
            "activation": "tansig",
            "output_activation": "linear",
            "weights": [float(repr_round(w)) for w in encode(self.params)],
            "scaler": self.scaler.to_dict(),
            "provenance": self.provenance,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedModel":
        topology = data.get("topology", [N_INPUTS, N_HIDDEN, 1])
        if topology[0] != N_INPUTS or topology[2] != 1:
            raise ValueError(f"unsupported topology {topology}")
        params = decode(np.array(data["weights"], dtype=float), int(topology[1]))
        return cls(params, Scaler.from_dict(data["scaler"]), dict(data.get("provenance", {})))

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        return cls.from_dict(json.loads(text))


def repr_round(value: float) -> float:
    # 17 significant digits survive a float round-trip exactly
    return float(f"{value:.17g}")


def reference_bbo_predictor(scaler: Scaler) -> TrainedModel:
    params = MlpParams(
        np.array(REFERENCE_HIDDEN_WEIGHTS),
        np.array(REFERENCE_HIDDEN_BIASES),
        np.array(REFERENCE_OUTPUT_WEIGHTS),
        REFERENCE_OUTPUT_BIAS,
    )
    return TrainedModel(params, scaler, {"algorithm": "bbo", "source": "reference formula"})


def predict(model: TrainedModel, sample: Sample | Sequence[float]) -> float:
    x = sample.features() if isinstance(sample, Sample) else np.asarray(sample, dtype=float)
    if x.shape != (len(FEATURES),):
        raise ValueError(f"expected {len(FEATURES)} feature values, got {x.size}")
    return float(model.predict_raw(x)[0])
