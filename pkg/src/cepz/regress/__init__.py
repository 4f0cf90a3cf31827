"""Nonlinear regressors, evaluation metrics and model (de)serialization."""

from __future__ import annotations

import json

import numpy as np

from .forest import ForestModel, ForestParams, Tree, train_forest
from .metrics import BINS, EvalReport, Metrics, evaluate
from .svr import SvrModel, SvrParams, train_svr

__all__ = [
    "ForestParams",
    "ForestModel",
    "train_forest",
    "SvrParams",
    "SvrModel",
    "train_svr",
    "predict",
    "evaluate",
    "EvalReport",
    "Metrics",
    "BINS",
    "MODEL_SCHEMA_VERSION",
    "model_to_dict",
    "model_from_dict",
    "model_to_json",
    "model_from_json",
]

MODEL_SCHEMA_VERSION = 1


def predict(model: ForestModel | SvrModel, X) -> np.ndarray:
    return model.predict(X)


def model_to_dict(model: ForestModel | SvrModel) -> dict:
    """JSON-ready document; floats survive a round trip exactly."""
    if isinstance(model, ForestModel):
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "model_type": "forest",
            "params": model.params.as_dict(),
            "feature_names": list(model.feature_names) if model.feature_names else None,
            "n_features": model.n_features,
            "y_range": [model.y_min, model.y_max],
            "importance": model.importance.tolist(),
            "trees": [t.to_dict() for t in model.trees],
        }
    if isinstance(model, SvrModel):
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "model_type": "svr",
            "params": model.params.as_dict(),
            "feature_names": list(model.feature_names) if model.feature_names else None,
            "gamma": model.gamma,
            "bias": model.bias,
            "x_mean": model.x_mean.tolist(),
            "x_scale": model.x_scale.tolist(),
            "converged": model.converged,
            "n_iter": model.n_iter,
            "support_index": model.support_index.tolist(),
            "support_vectors": model.support_vectors.tolist(),
            "coef": model.coef.tolist(),
        }
    raise TypeError(f"not a model: {type(model).__name__}")


def model_from_dict(doc: dict) -> ForestModel | SvrModel:
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version {doc.get('schema_version')!r}")
    names = tuple(doc["feature_names"]) if doc.get("feature_names") else None
    kind = doc.get("model_type")
    if kind == "forest":
        y_min, y_max = doc["y_range"]
        return ForestModel(
            trees=tuple(Tree.from_dict(t) for t in doc["trees"]),
            params=ForestParams(**doc["params"]),
            importance=np.asarray(doc["importance"], dtype=np.float64),
            n_features=int(doc["n_features"]),
            y_min=float(y_min),
            y_max=float(y_max),
            feature_names=names,
        )
    if kind == "svr":
        x_mean = np.asarray(doc["x_mean"], dtype=np.float64)
        sv = np.asarray(doc["support_vectors"], dtype=np.float64).reshape(-1, x_mean.shape[0])
        return SvrModel(
            support_vectors=sv,
            coef=np.asarray(doc["coef"], dtype=np.float64),
            bias=float(doc["bias"]),
            gamma=float(doc["gamma"]),
            x_mean=x_mean,
            x_scale=np.asarray(doc["x_scale"], dtype=np.float64),
            params=SvrParams(**doc["params"]),
            converged=bool(doc["converged"]),
            n_iter=int(doc["n_iter"]),
            support_index=np.asarray(doc["support_index"], dtype=np.int64),
            feature_names=names,
        )
    raise ValueError(f"unknown model_type {kind!r}")


def model_to_json(model) -> str:
    return json.dumps(model_to_dict(model), allow_nan=False) + "\n"


def model_from_json(text: str):
    return model_from_dict(json.loads(text))
