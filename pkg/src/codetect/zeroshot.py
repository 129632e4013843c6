"""Zero-shot detection via probability curvature.

The statistic compares a sample's log-likelihood under a scoring model with
the distribution of log-likelihoods of perturbed variants sampled from the
same model's conditionals: machine-generated code tends to sit near a local
likelihood maximum, human code does not. Any model exposing a
log-likelihood and conditional resampling can back the scorer; a
character-level n-gram model ships as the offline reference backend, and an
external process speaking the JSONL adapter protocol can stand in for an
LLM server.
"""

from __future__ import annotations

import json
import math
import subprocess
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from .evaluation import macro_metrics

_BOS = "\x02"
_STD_FLOOR = 1e-8


class BackendError(RuntimeError):
    pass


class LikelihoodBackend(Protocol):
    def log_likelihood(self, code: str) -> float:
        ...

    def sample_perturbations(self, code: str, k: int, seed: int) -> list[float]:
        ...


# ---------------------------------------------------------------------------
# reference n-gram backend


class NgramBackend:
    """Character n-gram model with add-k smoothing.

    Probabilities for a context are normalized over the training vocabulary
    plus one unseen slot, so they sum to one exactly. Perturbation
    log-likelihoods are analytic resamples: each position is redrawn from
    the model's conditional given the original context.
    """

    def __init__(self, order: int = 4, add_k: float = 0.01):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.add_k = add_k
        self.vocab: list[str] = []
        self._index: dict[str, int] = {}
        self._counts: dict[str, np.ndarray] = {}
        self._totals: dict[str, float] = {}
        self.corpus_digest = ""

    def fit(self, corpus: Iterable[str]) -> "NgramBackend":
        import hashlib

        texts = list(corpus)
        digest = hashlib.sha256()
        charset = set()
        for text in texts:
            charset.update(text)
            digest.update(text.encode("utf-8", "replace"))
            digest.update(b"\x00")
        self.corpus_digest = digest.hexdigest()[:16]
        self.vocab = sorted(charset)
        self._index = {c: i for i, c in enumerate(self.vocab)}
        counts: dict[str, np.ndarray] = {}
        pad = _BOS * (self.order - 1)
        for text in texts:
            padded = pad + text
            for t in range(len(text)):
                context = padded[t:t + self.order - 1]
                row = counts.get(context)
                if row is None:
                    row = np.zeros(len(self.vocab))
                    counts[context] = row
                row[self._index[padded[t + self.order - 1]]] += 1.0
        self._counts = counts
        self._totals = {ctx: float(row.sum()) for ctx, row in counts.items()}
        return self

    def _distribution(self, context: str) -> tuple[np.ndarray, float]:
        """Smoothed probabilities over vocab plus the mass of the unseen
        slot. Sums to 1 with the unseen mass included."""
        size = len(self.vocab)
        row = self._counts.get(context)
        total = self._totals.get(context, 0.0)
        denom = total + self.add_k * (size + 1)
        if row is None:
            probs = np.full(size, self.add_k / denom)
        else:
            probs = (row + self.add_k) / denom
        unseen = self.add_k / denom
        return probs, unseen

    def _contexts(self, code: str) -> list[str]:
        pad = _BOS * (self.order - 1)
        padded = pad + code
        return [padded[t:t + self.order - 1] for t in range(len(code))]

    def log_likelihood(self, code: str) -> float:
        if not code:
            raise ValueError("empty input")
        total = 0.0
        for context, char in zip(self._contexts(code), code):
            probs, unseen = self._distribution(context)
            idx = self._index.get(char)
            p = probs[idx] if idx is not None else unseen
            total += math.log(p)
        return total

    def sample_perturbations(self, code: str, k: int, seed: int) -> list[float]:
        if not code:
            raise ValueError("empty input")
        rng = np.random.default_rng(seed)
        contexts = self._contexts(code)
        length = len(code)
        logliks = np.zeros(k)
        draws = rng.random((k, length))
        for t, context in enumerate(contexts):
            probs, unseen = self._distribution(context)
            support = np.append(probs, unseen)
            cumulative = np.cumsum(support)
            cumulative[-1] = 1.0
            picks = np.searchsorted(cumulative, draws[:, t], side="right")
            picks = np.minimum(picks, len(support) - 1)
            logliks += np.log(support[picks])
        return logliks.tolist()


# ---------------------------------------------------------------------------
# external process adapter


class ProcessBackend:
    """Adapter for an external scorer process.

    The process reads JSONL records {"id", "code"} on stdin and writes one
    JSONL record {"id", "loglik", "perturbation_logliks"} per input. The
    perturbation count is the worker's configuration; the k and seed
    arguments of the protocol are ignored here.
    """

    def __init__(self, command: Sequence[str], timeout: float = 120.0):
        self.command = list(command)
        self.timeout = timeout
        # one worker invocation serves both the likelihood and the
        # perturbation calls for the same snippet
        self._cache: dict[str, dict] = {}

    def _lookup(self, code: str) -> dict:
        record = self._cache.get(code)
        if record is None:
            record = self._run([code])[0]
            self._cache[code] = record
        return record

    def _run(self, codes: Sequence[str]) -> list[dict]:
        payload = "".join(
            json.dumps({"id": str(i), "code": code}) + "\n"
            for i, code in enumerate(codes)
        )
        try:
            proc = subprocess.run(
                self.command, input=payload, capture_output=True,
                text=True, timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise BackendError(f"backend process failed: {exc}") from exc
        if proc.returncode != 0:
            raise BackendError(
                f"backend process exited {proc.returncode}: {proc.stderr.strip()}"
            )
        by_id = {}
        for line in proc.stdout.splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            by_id[str(record["id"])] = record
        missing = [str(i) for i in range(len(codes)) if str(i) not in by_id]
        if missing:
            raise BackendError(f"backend returned no record for ids {missing}")
        return [by_id[str(i)] for i in range(len(codes))]

    def log_likelihood(self, code: str) -> float:
        return float(self._lookup(code)["loglik"])

    def sample_perturbations(self, code: str, k: int, seed: int) -> list[float]:
        return [float(v) for v in self._lookup(code)["perturbation_logliks"]]

    def score_batch(self, codes: Sequence[str]) -> list[tuple[float, list[float]]]:
        records = self._run(codes)
        return [
            (float(r["loglik"]), [float(v) for v in r["perturbation_logliks"]])
            for r in records
        ]


# ---------------------------------------------------------------------------
# the statistic


def curvature_score(
    code: str, backend: LikelihoodBackend, k: int = 64, seed: int = 0
) -> float:
    """Normalized likelihood discrepancy of ``code`` against ``k``
    perturbations; the spread is clamped below at 1e-8."""
    if not code:
        raise ValueError("empty input")
    if k < 2:
        raise ValueError("k must be >= 2")
    try:
        loglik = backend.log_likelihood(code)
        perturbed = list(backend.sample_perturbations(code, k, seed))
    except (ValueError, BackendError):
        raise
    except Exception as exc:  # backend failures carry context
        raise BackendError(f"likelihood backend failed: {exc}") from exc
    if len(perturbed) < 2:
        raise BackendError("backend returned fewer than 2 perturbations")
    ordered = np.sort(np.asarray(perturbed, dtype=np.float64))
    mean = float(ordered.mean())
    spread = float(ordered.std())  # population convention
    return (loglik - mean) / max(spread, _STD_FLOOR)


@dataclass
class FittedThreshold:
    threshold: float
    macro_f1: float
    inverted_polarity: bool = False

    def __float__(self) -> float:
        return self.threshold


def _macro_f1_at(scores, golds, threshold: float, flipped: bool) -> float:
    if flipped:
        preds = ["llm" if s < threshold else "human" for s in scores]
    else:
        preds = ["llm" if s >= threshold else "human" for s in scores]
    return macro_metrics(preds, golds, ["human", "llm"])["F"]


def fit_threshold(scores: Sequence[float], golds: Sequence[str]) -> FittedThreshold:
    """Threshold maximizing validation macro-F1; ties take the smallest
    candidate. Candidates are the unique scores and their midpoints."""
    if len(scores) != len(golds):
        raise ValueError("scores and golds differ in length")
    if len(set(golds)) < 2:
        raise ValueError("threshold fitting needs both classes")
    unique = sorted(set(float(s) for s in scores))
    candidates = list(unique)
    for a, b in zip(unique, unique[1:]):
        candidates.append((a + b) / 2.0)
    candidates.sort()

    best_threshold = candidates[0]
    best_f1 = -1.0
    for t in candidates:
        f1 = _macro_f1_at(scores, golds, t, flipped=False)
        if f1 > best_f1 + 1e-12:
            best_f1 = f1
            best_threshold = t
    inverted_best = max(
        _macro_f1_at(scores, golds, t, flipped=True) for t in candidates
    )
    return FittedThreshold(best_threshold, best_f1, inverted_best > best_f1 + 1e-12)


def classify_zero_shot(
    code: str, backend: LikelihoodBackend, threshold: float,
    k: int = 64, seed: int = 0,
) -> str:
    """"llm" when the curvature score reaches the threshold, else "human"."""
    score = curvature_score(code, backend, k=k, seed=seed)
    return "llm" if score >= float(threshold) else "human"
