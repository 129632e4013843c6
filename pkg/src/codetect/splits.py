"""Stratified train/val/test assignment with largest-remainder rounding."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .samples import CodeSample, SPLITS


@dataclass
class SplitAssignment:
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    stratify_keys: tuple[str, ...] = ("label", "language", "source")
    seed: int = 0

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
            raise ValueError("ratios must be three non-negative reals")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError("ratios must sum to 1")


@dataclass
class SplitReport:
    strata: int = 0
    small_strata: list = field(default_factory=list)  # keys sent wholly to train
    counts: dict = field(default_factory=lambda: {s: 0 for s in SPLITS})


def _stratum_key(sample: CodeSample, keys: tuple[str, ...]) -> tuple:
    return tuple(str(getattr(sample, key)) for key in keys)


def _apportion(n: int, ratios: tuple[float, float, float]) -> list[int]:
    """Largest-remainder split of n items; ties go to the earlier split."""
    exact = [n * r for r in ratios]
    counts = [int(e) for e in exact]
    remainders = [e - c for e, c in zip(exact, counts)]
    short = n - sum(counts)
    # stable sort keeps split order (train, val, test) on remainder ties
    order = sorted(range(3), key=lambda i: -remainders[i])
    for i in order[:short]:
        counts[i] += 1
    return counts


def assign_splits(
    samples: list[CodeSample], plan: SplitAssignment | None = None
) -> tuple[list[CodeSample], SplitReport]:
    """Assign every sample to train/val/test, stratified and seeded.

    Within each stratum the observed proportions stay within one sample of
    the requested ratios. Strata smaller than 3 go entirely to train and are
    listed in the report. Input order is preserved in the returned list.
    """
    plan = plan or SplitAssignment()
    report = SplitReport()

    strata: dict[tuple, list[int]] = {}
    for idx, sample in enumerate(samples):
        strata.setdefault(_stratum_key(sample, plan.stratify_keys), []).append(idx)
    report.strata = len(strata)

    assignment: dict[int, str] = {}
    rng = random.Random(plan.seed)
    for key in sorted(strata):
        indices = list(strata[key])
        if len(indices) < 3:
            for idx in indices:
                assignment[idx] = "train"
            report.small_strata.append(list(key))
            continue
        rng.shuffle(indices)
        counts = _apportion(len(indices), plan.ratios)
        cursor = 0
        for split, count in zip(SPLITS, counts):
            for idx in indices[cursor:cursor + count]:
                assignment[idx] = split
            cursor += count

    out = []
    for idx, sample in enumerate(samples):
        split = assignment[idx]
        report.counts[split] += 1
        out.append(replace(sample, split=split))
    return out, report
