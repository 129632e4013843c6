"""Metrics and evaluation protocols.

Macro scores are unweighted means of per-class values, macro-F being the
mean of per-class F1 (not the F of macro P/R). Undefined ratios (0/0) score
zero and are flagged. Single-class gold sets restrict averaging to the
classes actually present and drop precision from the report, which is how
degenerate hold-out sets stay comparable.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .samples import CodeSample


def task_label(sample: CodeSample, task: str) -> str:
    """Gold label of a sample under a task's label space."""
    if task == "binary":
        return "llm" if sample.label in ("llm", "hybrid") else "human"
    if task == "attribution":
        return sample.generator if sample.generator else "human"
    if task == "ternary":
        return sample.label
    raise ValueError(f"unknown task {task!r}")


def confusion_matrix(
    preds: Sequence[str], golds: Sequence[str], label_space: Sequence[str]
) -> np.ndarray:
    index = {label: i for i, label in enumerate(label_space)}
    matrix = np.zeros((len(label_space), len(label_space)), dtype=np.int64)
    for pred, gold in zip(preds, golds):
        matrix[index[gold], index[pred]] += 1
    return matrix


def macro_metrics(
    preds: Sequence[str],
    golds: Sequence[str],
    label_space: Optional[Sequence[str]] = None,
    restrict_to_gold: bool = False,
) -> dict:
    """Macro P/R/F plus accuracy, with 0/0 ratios scored as zero.

    ``restrict_to_gold`` limits the macro average to classes present in the
    gold labels (single-class hold-out reporting).
    """
    if len(preds) != len(golds):
        raise ValueError(
            f"length mismatch: {len(preds)} predictions vs {len(golds)} golds"
        )
    if not golds:
        raise ValueError("empty evaluation set")
    if label_space is None:
        label_space = sorted(set(golds) | set(preds))
    matrix = confusion_matrix(preds, golds, label_space)
    total = int(matrix.sum())
    accuracy = float(np.trace(matrix)) / total

    per_class: dict[str, dict] = {}
    zero_division: list[str] = []
    for i, label in enumerate(label_space):
        tp = float(matrix[i, i])
        gold_count = float(matrix[i, :].sum())
        pred_count = float(matrix[:, i].sum())
        if pred_count == 0.0:
            precision = 0.0
            zero_division.append(f"precision/{label}")
        else:
            precision = tp / pred_count
        if gold_count == 0.0:
            recall = 0.0
            zero_division.append(f"recall/{label}")
        else:
            recall = tp / gold_count
        f1 = 0.0 if precision + recall == 0.0 else \
            2.0 * precision * recall / (precision + recall)
        per_class[label] = {"P": precision, "R": recall, "F": f1,
                            "support": int(gold_count)}

    considered = [l for l in label_space
                  if not restrict_to_gold or per_class[l]["support"] > 0]
    if not considered:
        considered = list(label_space)
    return {
        "P": float(np.mean([per_class[l]["P"] for l in considered])),
        "R": float(np.mean([per_class[l]["R"] for l in considered])),
        "F": float(np.mean([per_class[l]["F"] for l in considered])),
        "A": accuracy,
        "per_class": per_class,
        "confusion": matrix.tolist(),
        "label_space": list(label_space),
        "zero_division": zero_division,
        "n": total,
    }


def breakdown(
    preds: Sequence[str],
    golds: Sequence[str],
    samples: Sequence[CodeSample],
    key: str,
    label_space: Optional[Sequence[str]] = None,
) -> dict[str, dict]:
    """Per-group macro metrics grouped by a sample field; groups with fewer
    than 10 samples are flagged low-support."""
    if not (len(preds) == len(golds) == len(samples)):
        raise ValueError("predictions, golds and samples are not aligned")
    groups: dict[str, list[int]] = {}
    for i, sample in enumerate(samples):
        value = getattr(sample, key)
        if key == "generator" and value is None:
            value = "human"
        groups.setdefault(str(value), []).append(i)
    out = {}
    for value in sorted(groups):
        rows = groups[value]
        group_golds = [golds[i] for i in rows]
        metrics = macro_metrics(
            [preds[i] for i in rows], group_golds, label_space,
            restrict_to_gold=len(set(group_golds)) == 1,
        )
        metrics["low_support"] = len(rows) < 10
        out[value] = metrics
    return out


# ---------------------------------------------------------------------------
# report


@dataclass
class EvalReport:
    task: str
    label_space: list[str]
    overall: dict
    confusion: list[list[int]]
    groups: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "label_space": self.label_space,
            "overall": self.overall,
            "confusion": self.confusion,
            "groups": self.groups,
            "notes": self.notes,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    def write_confusion_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["gold\\pred", *self.label_space])
            for label, row in zip(self.label_space, self.confusion):
                writer.writerow([label, *row])

    @classmethod
    def from_results(
        cls,
        task: str,
        preds: Sequence[str],
        golds: Sequence[str],
        label_space: Sequence[str],
        samples: Optional[Sequence[CodeSample]] = None,
        group_keys: Sequence[str] = (),
        metadata: Optional[dict] = None,
    ) -> "EvalReport":
        single_class = len(set(golds)) == 1
        metrics = macro_metrics(preds, golds, label_space,
                                restrict_to_gold=single_class)
        overall = {"P": metrics["P"], "R": metrics["R"],
                   "F": metrics["F"], "A": metrics["A"], "n": metrics["n"]}
        notes = []
        if single_class:
            overall["P"] = None  # trivially 1 against a one-class gold set
            notes.append("single-class gold")
        if metrics["zero_division"]:
            notes.append("zero-division in: " + ", ".join(metrics["zero_division"]))
        groups = {}
        if samples is not None:
            for key in group_keys:
                groups[key] = {
                    value: {
                        "P": m["P"], "R": m["R"], "F": m["F"], "A": m["A"],
                        "n": m["n"], "low_support": m["low_support"],
                    }
                    for value, m in breakdown(
                        preds, golds, samples, key, label_space
                    ).items()
                }
        return cls(
            task=task,
            label_space=list(label_space),
            overall=overall,
            confusion=metrics["confusion"],
            groups=groups,
            notes=notes,
            metadata=metadata or {},
        )


def render_table(report: EvalReport) -> str:
    """Paper-style table: P/R/F/A scaled by 100, two decimals."""

    def fmt(value) -> str:
        return "     -" if value is None else f"{100.0 * value:6.2f}"

    lines = [f"{'slice':<24} {'P':>6} {'R':>6} {'F':>6} {'A':>6} {'n':>7}"]
    o = report.overall
    lines.append(
        f"{'overall':<24} {fmt(o.get('P'))} {fmt(o.get('R'))} "
        f"{fmt(o.get('F'))} {fmt(o.get('A'))} {o.get('n', 0):>7}"
    )
    for key in sorted(report.groups):
        for value in sorted(report.groups[key]):
            m = report.groups[key][value]
            tag = f"{key}={value}"
            if m.get("low_support"):
                tag += " *"
            lines.append(
                f"{tag:<24} {fmt(m.get('P'))} {fmt(m.get('R'))} "
                f"{fmt(m.get('F'))} {fmt(m.get('A'))} {m.get('n', 0):>7}"
            )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# out-of-domain protocols


@dataclass
class OodProtocol:
    generators: frozenset[str] = frozenset()
    sources: frozenset[str] = frozenset()
    languages: frozenset[str] = frozenset()

    def __post_init__(self):
        if not (self.generators or self.sources or self.languages):
            raise ValueError("hold out at least one value on one axis")

    def axes(self) -> dict[str, frozenset[str]]:
        return {
            "generator": self.generators,
            "source": self.sources,
            "language": self.languages,
        }


class DisjointnessError(AssertionError):
    pass


def ood_split(
    samples: Sequence[CodeSample], protocol: OodProtocol
) -> tuple[list[CodeSample], list[CodeSample]]:
    """Train/test lists under a hold-out protocol.

    Held-out values are excluded from train on every axis; the test side
    keeps only samples matching every held-out axis. Disjointness is
    asserted, not assumed.
    """

    def value(sample: CodeSample, axis: str):
        return getattr(sample, axis)

    train, test = [], []
    for sample in samples:
        held = {axis: value(sample, axis) in values
                for axis, values in protocol.axes().items() if values}
        if any(held.values()):
            if all(held.values()) and sample.split in (None, "test"):
                test.append(sample)
        elif sample.split in (None, "train", "val"):
            train.append(sample)

    assert_disjoint(train, test, protocol)
    if not train:
        raise ValueError("empty filtered train set under this protocol")
    if not test:
        raise ValueError("empty held-out test set under this protocol")
    return train, test


def assert_disjoint(train, test, protocol: OodProtocol) -> None:
    """Verify the hold-out contract on concrete train/test lists."""
    for axis, values in protocol.axes().items():
        if not values:
            continue
        train_values = {getattr(s, axis) for s in train}
        test_values = {getattr(s, axis) for s in test}
        overlap = train_values & values
        if overlap:
            raise DisjointnessError(
                f"held-out {axis} values leaked into train: {sorted(overlap)}"
            )
        if test_values - values:
            raise DisjointnessError(
                f"test contains non-held-out {axis} values: "
                f"{sorted(test_values - values)}"
            )


def run_ood(
    samples: Sequence[CodeSample],
    protocol: OodProtocol,
    fit_predict: Callable[[list[CodeSample], list[CodeSample]], list[str]],
    task: str = "binary",
    label_space: Optional[Sequence[str]] = None,
    metadata: Optional[dict] = None,
) -> EvalReport:
    """Train on the filtered corpus, evaluate on the held-out slice."""
    train, test = ood_split(samples, protocol)
    preds = fit_predict(train, test)
    golds = [task_label(s, task) for s in test]
    if label_space is None:
        label_space = sorted(set(golds) | set(preds))
    meta = dict(metadata or {})
    meta["protocol"] = {
        axis: sorted(values) for axis, values in protocol.axes().items() if values
    }
    meta["n_train"] = len(train)
    meta["n_test"] = len(test)
    return EvalReport.from_results(
        task, preds, golds, label_space, samples=test,
        group_keys=("language", "source", "generator"), metadata=meta,
    )


# ---------------------------------------------------------------------------
# hybrid degradation


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    if len(xs) != len(ys):
        raise ValueError("length mismatch")
    if len(xs) < 2:
        return 0.0

    def ranks(values):
        order = np.argsort(values, kind="stable")
        out = np.empty(len(values))
        sorted_values = np.asarray(values)[order]
        i = 0
        while i < len(values):
            j = i
            while j + 1 < len(values) and sorted_values[j + 1] == sorted_values[i]:
                j += 1
            out[order[i:j + 1]] = (i + j) / 2.0
            i = j + 1
        return out

    rx, ry = ranks(list(xs)), ranks(list(ys))
    sx, sy = rx.std(), ry.std()
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float(((rx - rx.mean()) * (ry - ry.mean())).mean() / (sx * sy))


def degradation_curve(
    preds: Sequence[str],
    golds: Sequence[str],
    fractions: Sequence[float],
    bins: int = 10,
) -> list[dict]:
    """Metrics per preserved-human-fraction bin.

    Bins are left-closed tenths of [0, 1] by default, the last bin closed on
    both sides. Empty bins are omitted.
    """
    if not (len(preds) == len(golds) == len(fractions)):
        raise ValueError("predictions, golds and fractions are not aligned")
    for f in fractions:
        if not (0.0 <= f <= 1.0):
            raise ValueError(f"human fraction {f} outside [0, 1]")
    # arithmetic binning with an epsilon nudge so decile-valued annotations
    # land in their own bin despite float representation
    assignments: dict[int, list[int]] = {}
    for i, f in enumerate(fractions):
        idx = min(bins - 1, int(f * bins + 1e-9))
        assignments.setdefault(idx, []).append(i)
    out = []
    for b in sorted(assignments):
        rows = assignments[b]
        metrics = macro_metrics(
            [preds[i] for i in rows], [golds[i] for i in rows]
        )
        out.append({
            "bin": [b / bins, (b + 1) / bins],
            "n": len(rows),
            "A": metrics["A"],
            "F": metrics["F"],
        })
    return out


def degradation_trend(curve: Sequence[dict]) -> float:
    """Spearman correlation between bin midpoints and accuracy."""
    mids = [(b["bin"][0] + b["bin"][1]) / 2.0 for b in curve]
    accs = [b["A"] for b in curve]
    return spearman(mids, accs)
