"""Model lifecycle: train, predict, save, load.

The model file is a JSON container opening with the magic string
"CODETECT-MODEL" and a format version. Version 2 is current; version 1
files (which stored standardization scales under "stdev") load with a
migration note in the metadata. Floats survive the JSON round trip exactly,
so a saved model predicts byte-identically to the in-memory one.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..features import FeatureMatrix
from . import gbdt, linear

FORMAT_VERSION = 2
MAGIC = "CODETECT-MODEL"

_CANONICAL = {"human": 0, "llm": 1, "hybrid": 2}


class DegenerateLabelsError(ValueError):
    pass


class SchemaMismatchError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass
class LinearConfig:
    l2: float = 1e-4
    epochs: int = 20
    learning_rate: float = 0.01
    rff_dims: Optional[int] = None
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "l2": self.l2,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "rff_dims": self.rff_dims,
            "seed": self.seed,
        }


@dataclass
class GbdtConfig:
    trees: int = 2000
    learning_rate: float = 0.1
    max_depth: int = 6
    min_samples_leaf: int = 20
    subsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.trees < 1:
            raise ValueError("trees must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return {
            "trees": self.trees,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "subsample": self.subsample,
            "seed": self.seed,
        }


@dataclass
class TrainedModel:
    kind: str  # "linear" | "gbdt"
    label_space: list[str]
    feature_schema_hash: str
    feature_names: list[str]
    parameters: dict
    standardization: Optional[dict] = None
    metadata: dict = field(default_factory=dict)


def make_label_space(labels: Sequence[str]) -> list[str]:
    """Deterministic class order: human, llm, hybrid first, rest sorted."""
    present = sorted(set(labels))
    known = sorted(
        (l for l in present if l in _CANONICAL), key=lambda l: _CANONICAL[l]
    )
    other = [l for l in present if l not in _CANONICAL]
    return known + other


def _class_indices(labels: Sequence[str], label_space: list[str]) -> np.ndarray:
    lookup = {label: i for i, label in enumerate(label_space)}
    return np.array([lookup[l] for l in labels], dtype=np.intp)


def _check_trainable(matrix: FeatureMatrix) -> list[str]:
    label_space = make_label_space(matrix.labels)
    if len(label_space) < 2:
        raise DegenerateLabelsError("degenerate labels: need at least 2 classes")
    return label_space


def train_linear(matrix: FeatureMatrix, cfg: LinearConfig | None = None) -> TrainedModel:
    cfg = cfg or LinearConfig()
    label_space = _check_trainable(matrix)
    classes = _class_indices(matrix.labels, label_space)

    stats = linear.standardize_fit(matrix.values)
    constant = [matrix.feature_names[i] for i in range(len(matrix.feature_names))
                if i not in set(stats["kept"])]
    metadata = {
        "config": cfg.to_dict(),
        "constant_features": constant,
        "trained_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "n_train": len(matrix.ids),
    }

    if not stats["kept"]:
        # nothing informative: constant model answering the majority class
        counts = np.bincount(classes, minlength=len(label_space)).astype(float)
        parameters = {
            "majority": {"scores": (counts / max(counts.sum(), 1.0)).tolist()}
        }
        return TrainedModel("linear", label_space, matrix.schema_hash,
                            list(matrix.feature_names), parameters, stats, metadata)

    inputs = linear.standardize_apply(matrix.values, stats)
    rff = None
    if cfg.rff_dims:
        rff = linear.make_rff(inputs.shape[1], cfg.rff_dims, cfg.seed)
        inputs = linear.rff_apply(inputs, rff)
    weights, biases = linear.train_hinge_ovr(
        inputs, classes, len(label_space), cfg.l2, cfg.epochs,
        cfg.learning_rate, cfg.seed,
    )
    parameters = {
        "weights": weights.tolist(),
        "biases": biases.tolist(),
        "rff": rff,
    }
    return TrainedModel("linear", label_space, matrix.schema_hash,
                        list(matrix.feature_names), parameters, stats, metadata)


def train_gbdt(matrix: FeatureMatrix, cfg: GbdtConfig | None = None) -> TrainedModel:
    cfg = cfg or GbdtConfig()
    label_space = _check_trainable(matrix)
    classes = _class_indices(matrix.labels, label_space)

    ensembles = []
    losses = None
    gain_by_feature: dict[str, float] = {}
    if len(label_space) == 2:
        targets = (classes == 1).astype(np.float64)
        rng = np.random.default_rng(cfg.seed)
        fit = gbdt.fit_binary_ensemble(
            matrix.values, targets, cfg.trees, cfg.learning_rate,
            cfg.max_depth, cfg.min_samples_leaf, cfg.subsample, rng,
        )
        ensembles.append(fit)
        losses = fit["losses"]
    else:
        per_class_losses = []
        for cls in range(len(label_space)):
            targets = (classes == cls).astype(np.float64)
            rng = np.random.default_rng(cfg.seed + 104729 * cls)
            fit = gbdt.fit_binary_ensemble(
                matrix.values, targets, cfg.trees, cfg.learning_rate,
                cfg.max_depth, cfg.min_samples_leaf, cfg.subsample, rng,
            )
            ensembles.append(fit)
            per_class_losses.append(fit["losses"])
        losses = np.sum(per_class_losses, axis=0).tolist()

    for fit in ensembles:
        for f, gain in fit["gain_by_feature"].items():
            name = matrix.feature_names[f]
            gain_by_feature[name] = gain_by_feature.get(name, 0.0) + gain

    parameters = {
        "learning_rate": cfg.learning_rate,
        "ensembles": [
            {"init": fit["init"], "trees": [t.to_dict() for t in fit["trees"]]}
            for fit in ensembles
        ],
        "gain_by_feature": gain_by_feature,
    }
    metadata = {
        "config": cfg.to_dict(),
        "train_losses": losses,
        "trained_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "n_train": len(matrix.ids),
    }
    return TrainedModel("gbdt", label_space, matrix.schema_hash,
                        list(matrix.feature_names), parameters, None, metadata)


# ---------------------------------------------------------------------------
# prediction


def predict(model: TrainedModel, matrix: FeatureMatrix) -> tuple[list[str], np.ndarray]:
    """Per-row (argmax label, per-class scores); ties take the first label
    in label-space order."""
    if matrix.schema_hash != model.feature_schema_hash:
        raise SchemaMismatchError(
            "feature schema mismatch: matrix "
            f"{matrix.schema_hash[:12]} vs model {model.feature_schema_hash[:12]}"
        )
    scores = predict_scores(model, matrix.values)
    indices = np.argmax(scores, axis=1)
    labels = [model.label_space[i] for i in indices]
    return labels, scores


def predict_scores(model: TrainedModel, values: np.ndarray) -> np.ndarray:
    n_classes = len(model.label_space)
    if model.kind == "linear":
        majority = model.parameters.get("majority")
        if majority is not None:
            return np.tile(np.asarray(majority["scores"]), (len(values), 1))
        inputs = linear.standardize_apply(values, model.standardization)
        if model.parameters.get("rff"):
            inputs = linear.rff_apply(inputs, model.parameters["rff"])
        return linear.decision_scores(
            inputs, model.parameters["weights"], model.parameters["biases"]
        )
    if model.kind == "gbdt":
        rate = model.parameters["learning_rate"]
        margins = np.empty((len(values), len(model.parameters["ensembles"])))
        for k, packed in enumerate(model.parameters["ensembles"]):
            trees = [gbdt.Tree.from_dict(t) for t in packed["trees"]]
            margins[:, k] = gbdt.ensemble_margin(values, packed["init"], trees, rate)
        probs = 1.0 / (1.0 + np.exp(-margins))
        if margins.shape[1] == 1:  # binary: single positive-class ensemble
            out = np.empty((len(values), 2))
            out[:, 1] = probs[:, 0]
            out[:, 0] = 1.0 - probs[:, 0]
            return out
        total = probs.sum(axis=1, keepdims=True)
        total[total == 0.0] = 1.0
        return probs / total
    raise ModelFormatError(f"unknown model kind {model.kind!r}")


# ---------------------------------------------------------------------------
# persistence


def save_model(model: TrainedModel, path: str | Path) -> None:
    payload = {
        "magic": MAGIC,
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "label_space": model.label_space,
        "feature_schema_hash": model.feature_schema_hash,
        "feature_names": model.feature_names,
        "standardization": model.standardization,
        "parameters": model.parameters,
        "metadata": model.metadata,
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError("corrupt model") from exc
    if not isinstance(payload, dict) or payload.get("magic") != MAGIC:
        raise ModelFormatError("corrupt model")
    version = payload.get("format_version")
    if version not in (1, FORMAT_VERSION):
        raise ModelFormatError(
            f"model format version {version} not supported by reader "
            f"version {FORMAT_VERSION}"
        )
    try:
        metadata = dict(payload.get("metadata") or {})
        standardization = payload.get("standardization")
        if version == 1:
            # v1 named the scale vector "stdev"
            if standardization and "stdev" in standardization:
                standardization = dict(standardization)
                standardization["scale"] = standardization.pop("stdev")
            metadata["migrated_from_version"] = 1
        return TrainedModel(
            kind=payload["kind"],
            label_space=list(payload["label_space"]),
            feature_schema_hash=payload["feature_schema_hash"],
            feature_names=list(payload["feature_names"]),
            parameters=payload["parameters"],
            standardization=standardization,
            metadata=metadata,
        )
    except KeyError as exc:
        raise ModelFormatError("corrupt model") from exc
