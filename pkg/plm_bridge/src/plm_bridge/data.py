"""Corpus JSONL reading and label handling.

The bridge couples to the detector toolkit only through its file formats:
corpus JSONL in, predictions JSONL out. Records carry at least code,
language and label; llm/hybrid rows name their generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


@dataclass
class Record:
    id: str
    code: str
    language: str
    label: str
    generator: Optional[str] = None
    split: Optional[str] = None


def read_jsonl(path: str | Path, split: Optional[str] = None) -> list[Record]:
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            raw = json.loads(line)
            for field in ("code", "language", "label"):
                if not raw.get(field):
                    raise ValueError(f"line {number}: missing field {field!r}")
            record = Record(
                id=str(raw.get("id") or f"row-{number}"),
                code=raw["code"],
                language=raw["language"],
                label=raw["label"],
                generator=raw.get("generator"),
                split=raw.get("split"),
            )
            if split is None or record.split == split or record.split is None:
                records.append(record)
    if not records:
        raise ValueError(f"no usable records in {path}")
    return records


def task_label(record: Record, task: str) -> str:
    if task == "binary":
        return "llm" if record.label in ("llm", "hybrid") else "human"
    if task == "attribution":
        return record.generator if record.generator else "human"
    if task == "ternary":
        return record.label
    raise ValueError(f"unknown task {task!r}")


_CANONICAL = {"human": 0, "llm": 1, "hybrid": 2}


def label_space(labels) -> list[str]:
    present = sorted(set(labels))
    known = sorted((l for l in present if l in _CANONICAL),
                   key=lambda l: _CANONICAL[l])
    return known + [l for l in present if l not in _CANONICAL]


def macro_f1(preds, golds, labels) -> float:
    """Unweighted mean of per-class F1; 0/0 counts as zero."""
    total = 0.0
    for c in labels:
        tp = sum(1 for p, g in zip(preds, golds) if p == c and g == c)
        fp = sum(1 for p, g in zip(preds, golds) if p == c and g != c)
        fn = sum(1 for p, g in zip(preds, golds) if p != c and g == c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        if precision + recall:
            total += 2 * precision * recall / (precision + recall)
    return total / len(labels)
