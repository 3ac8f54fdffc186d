"""Trained-model persistence.

A model file is self-describing JSON: format tag, version, architecture
spec, target normalization statistics, input-range statistics, and the
parameter tensors as base64-encoded little-endian float64 buffers. The
round trip is bit-exact on parameters and byte-reproducible on disk.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .network import DenseNetwork, NetworkSpec, forward

FORMAT_TAG = "surropt-model"
FORMAT_VERSION = 1


@dataclass
class SurrogateModel:
    """A trained network plus the statistics needed to interpret it.

    The network predicts on the z-scored target scale; `predict` maps back
    to the original metric scale via y_mean/y_std. `y_constant` flags a
    degenerate training target (zero variance, std stored as 1.0).
    """

    metric: str
    network: DenseNetwork
    x_min: np.ndarray
    x_max: np.ndarray
    y_mean: float
    y_std: float
    y_constant: bool = False
    test_mse: float | None = None

    def predict_normalized(self, x: np.ndarray) -> float:
        return forward(self.network, x)

    def predict(self, x: np.ndarray) -> float:
        return self.y_mean + self.y_std * self.predict_normalized(x)


def _encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(d["shape"]).astype(float)


def save_model(model: SurrogateModel, path: Path | str) -> None:
    net = model.network
    doc = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "metric": model.metric,
        "spec": {
            "hidden_widths": list(net.spec.hidden_widths) if net.spec else None,
            "table_index": net.spec.table_index if net.spec else None,
        },
        "input_dim": net.input_dim,
        "activations": list(net.activations),
        "x_min": _encode_array(model.x_min),
        "x_max": _encode_array(model.x_max),
        "y_mean": model.y_mean,
        "y_std": model.y_std,
        "y_constant": model.y_constant,
        "test_mse": model.test_mse,
        "layers": [
            {"w": _encode_array(w), "b": _encode_array(b)}
            for w, b in zip(net.weights, net.biases)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: Path | str) -> SurrogateModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != FORMAT_TAG:
        raise ValueError(f"{path}: not a {FORMAT_TAG} file")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {doc.get('version')}")
    spec = None
    if doc["spec"]["hidden_widths"] is not None:
        spec = NetworkSpec(tuple(doc["spec"]["hidden_widths"]), doc["spec"]["table_index"])
    weights = [_decode_array(layer["w"]) for layer in doc["layers"]]
    biases = [_decode_array(layer["b"]) for layer in doc["layers"]]
    net = DenseNetwork(weights, biases, list(doc["activations"]), spec=spec)
    return SurrogateModel(
        metric=doc["metric"],
        network=net,
        x_min=_decode_array(doc["x_min"]).reshape(-1),
        x_max=_decode_array(doc["x_max"]).reshape(-1),
        y_mean=float(doc["y_mean"]),
        y_std=float(doc["y_std"]),
        y_constant=bool(doc["y_constant"]),
        test_mse=None if doc["test_mse"] is None else float(doc["test_mse"]),
    )
