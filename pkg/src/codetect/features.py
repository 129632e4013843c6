"""Feature matrices: the sparsity filter, imputation and persistence.

The retained-feature set and the imputation medians are fitted on one set
of vectors (the training split) and frozen into a :class:`FeatureSchema`;
validation and test matrices are built against that schema so they share
the column order, the schema hash and the fit-set medians.

Missing versus zero: a node-density feature of the sample's own language
that simply never occurred counts as zero (the construct was countable);
any feature whose defining construct does not exist for the sample stays
missing and is what the 20% filter measures.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .stylometry import FeatureVector, density_language


class SparseFeaturesError(ValueError):
    pass


@dataclass
class FeatureSchema:
    feature_names: list[str]
    imputation: dict[str, float]
    dropped: list[str] = field(default_factory=list)
    max_missing: float = 0.2

    @property
    def schema_hash(self) -> str:
        return hash_feature_names(self.feature_names)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_hash": self.schema_hash,
                "max_missing": self.max_missing,
                "retained": self.feature_names,
                "dropped": self.dropped,
                "imputation": self.imputation,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "FeatureSchema":
        data = json.loads(text)
        schema = cls(
            feature_names=list(data["retained"]),
            imputation={k: float(v) for k, v in data["imputation"].items()},
            dropped=list(data.get("dropped", [])),
            max_missing=float(data.get("max_missing", 0.2)),
        )
        recorded = data.get("schema_hash")
        if recorded and recorded != schema.schema_hash:
            raise ValueError("feature sidecar hash does not match its content")
        return schema


@dataclass
class FeatureMatrix:
    feature_names: list[str]
    ids: list[str]
    labels: list[str]
    values: np.ndarray  # (n_samples, n_features) float64, no NaN after imputation

    @property
    def schema_hash(self) -> str:
        return hash_feature_names(self.feature_names)


def hash_feature_names(names: Sequence[str]) -> str:
    digest = hashlib.sha256("\n".join(names).encode("utf-8"))
    return digest.hexdigest()


def _raw_value(vector: FeatureVector, name: str) -> float:
    value = vector.values.get(name)
    if value is not None:
        return float(value)
    lang = density_language(name)
    if lang is not None and lang == vector.language:
        return 0.0  # countable construct, absent
    return math.nan


def build_matrix(
    vectors: Sequence[FeatureVector], max_missing: float = 0.2
) -> tuple[FeatureMatrix, FeatureSchema]:
    """Fit the retained-feature set on ``vectors`` and impute with medians.

    A feature survives when its missing fraction over the fit set is at most
    ``max_missing``. Raises SparseFeaturesError when nothing survives.
    """
    if not vectors:
        raise ValueError("no feature vectors")
    all_names = sorted({name for v in vectors for name in v.values})
    keep: list[str] = []
    dropped: list[str] = []
    medians: dict[str, float] = {}
    n = len(vectors)
    for name in all_names:
        column = np.array([_raw_value(v, name) for v in vectors], dtype=np.float64)
        present = column[~np.isnan(column)]
        missing_fraction = 1.0 - len(present) / n
        if missing_fraction > max_missing or len(present) == 0:
            dropped.append(name)
            continue
        keep.append(name)
        medians[name] = float(np.median(present))
    if not keep:
        raise SparseFeaturesError("all features sparse")
    schema = FeatureSchema(keep, medians, dropped, max_missing)
    return apply_schema(vectors, schema), schema


def apply_schema(
    vectors: Sequence[FeatureVector], schema: FeatureSchema
) -> FeatureMatrix:
    """Column-align ``vectors`` against a fitted schema, imputing misses."""
    names = schema.feature_names
    values = np.empty((len(vectors), len(names)), dtype=np.float64)
    for row, vector in enumerate(vectors):
        for col, name in enumerate(names):
            value = _raw_value(vector, name)
            if math.isnan(value):
                value = schema.imputation[name]
            values[row, col] = value
    return FeatureMatrix(
        feature_names=list(names),
        ids=[v.sample_id for v in vectors],
        labels=[v.label for v in vectors],
        values=values,
    )


# ---------------------------------------------------------------------------
# persistence


def write_matrix_csv(matrix: FeatureMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "label", *matrix.feature_names])
        for i, sample_id in enumerate(matrix.ids):
            row = [sample_id, matrix.labels[i]]
            row.extend(repr(v) for v in matrix.values[i].tolist())
            writer.writerow(row)


def read_matrix_csv(path: str | Path) -> FeatureMatrix:
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        names = header[2:]
        ids, labels, rows = [], [], []
        for record in reader:
            ids.append(record[0])
            labels.append(record[1])
            rows.append([float(x) for x in record[2:]])
    values = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(names)))
    return FeatureMatrix(names, ids, labels, values)
