"""JSON model files (``"dde-model-v1"``)."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import DataError
from .mlp import MlpConfig, MlpModel

MODEL_VERSION = "dde-model-v1"


def _tensor(a: np.ndarray) -> dict:
    # Row-major values as Python floats; float32 inputs round-trip exactly.
    return {"shape": list(a.shape), "data": [float(v) for v in np.ravel(a)]}


def _untensor(d: dict, dtype) -> np.ndarray:
    return np.asarray(d["data"], dtype=dtype).reshape(d["shape"])


def model_to_dict(model: MlpModel) -> dict:
    return {
        "version": MODEL_VERSION,
        "dtype": model.dtype.name,
        "config": asdict(model.config),
        "params": {k: _tensor(v) for k, v in sorted(model.params.items())},
        "running_mean": [_tensor(v) for v in model.running_mean],
        "running_var": [_tensor(v) for v in model.running_var],
        "train_meta": model.train_meta,
    }


def model_from_dict(d: dict) -> MlpModel:
    if d.get("version") != MODEL_VERSION:
        raise DataError(f"unsupported model version {d.get('version')!r}")
    dtype = np.dtype(d.get("dtype", "float64"))
    cfg = MlpConfig(**d["config"])
    return MlpModel(
        cfg,
        {k: _untensor(v, dtype) for k, v in d["params"].items()},
        [_untensor(v, dtype) for v in d["running_mean"]],
        [_untensor(v, dtype) for v in d["running_var"]],
        d.get("train_meta", {}),
        dtype,
    )


def save_model(model: MlpModel, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model), sort_keys=True) + "\n")
    return path


def load_model(path) -> MlpModel:
    try:
        return model_from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"cannot load model {path}: {exc}") from exc
