"""Feature attribution for trained tabular models.

Two backend-agnostic methods: split-gain totals for tree ensembles and
permutation importance (metric drop under column shuffling) for any model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .evaluation import macro_metrics
from .features import FeatureMatrix
from .models import TrainedModel, predict


@dataclass
class ImportanceReport:
    method: str  # "gain" | "permutation"
    ranked: list[tuple[str, float]]
    metric: Optional[str] = None
    seed: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "metric": self.metric,
            "seed": self.seed,
            "ranked": [[name, score] for name, score in self.ranked],
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


def gain_importance(model: TrainedModel) -> ImportanceReport:
    """Total split gain per feature across the ensemble, normalized to 1."""
    if model.kind != "gbdt":
        raise ValueError("gain importance needs a tree ensemble: use permutation")
    gains = dict(model.parameters.get("gain_by_feature", {}))
    for name in model.feature_names:
        gains.setdefault(name, 0.0)
    total = sum(gains.values())
    if total > 0.0:
        scores = {name: gain / total for name, gain in gains.items()}
    else:
        scores = {name: 0.0 for name in gains}
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ImportanceReport("gain", ranked, extra={"total_gain": total})


def _metric_value(metric: str, preds, golds, label_space) -> float:
    scores = macro_metrics(preds, golds, label_space)
    if metric == "macro_f1":
        return scores["F"]
    if metric == "accuracy":
        return scores["A"]
    raise ValueError(f"unknown metric {metric!r}")


def permutation_importance(
    model: TrainedModel,
    matrix: FeatureMatrix,
    metric: str = "macro_f1",
    repeats: int = 5,
    seed: int = 0,
) -> ImportanceReport:
    """Mean metric drop when one column is shuffled; negative values mean
    the shuffle helped. Deterministic per (seed, feature, repeat)."""
    base_preds, _ = predict(model, matrix)
    base = _metric_value(metric, base_preds, matrix.labels, model.label_space)
    n = len(matrix.ids)
    drops: dict[str, float] = {}
    for col, name in enumerate(matrix.feature_names):
        total = 0.0
        for repeat in range(repeats):
            rng = np.random.default_rng([seed, col, repeat])
            shuffled = matrix.values.copy()
            shuffled[:, col] = shuffled[rng.permutation(n), col]
            permuted = FeatureMatrix(matrix.feature_names, matrix.ids,
                                     matrix.labels, shuffled)
            preds, _ = predict(model, permuted)
            total += base - _metric_value(metric, preds, matrix.labels,
                                          model.label_space)
        drops[name] = total / repeats
    ranked = sorted(drops.items(), key=lambda item: (-item[1], item[0]))
    return ImportanceReport("permutation", ranked, metric=metric, seed=seed,
                            extra={"baseline": base, "repeats": repeats})
