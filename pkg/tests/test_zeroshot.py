"""Probability-curvature baseline."""

import itertools
import sys

import numpy as np
import pytest

from codetect import zeroshot
from codetect.evaluation import macro_metrics
from codetect.zeroshot import (
    BackendError,
    NgramBackend,
    ProcessBackend,
    classify_zero_shot,
    curvature_score,
    fit_threshold,
)


class StubBackend:
    """Hand-built backend returning fixed numbers."""

    def __init__(self, loglik, perturbations):
        self.loglik = loglik
        self.perturbations = perturbations

    def log_likelihood(self, code):
        return self.loglik

    def sample_perturbations(self, code, k, seed):
        return list(self.perturbations)


class ShiftedBackend:
    def __init__(self, inner, shift):
        self.inner = inner
        self.shift = shift

    def log_likelihood(self, code):
        return self.inner.log_likelihood(code) + self.shift

    def sample_perturbations(self, code, k, seed):
        return [v + self.shift for v in
                self.inner.sample_perturbations(code, k, seed)]


# ---------------------------------------------------------------------------
# curvature statistic


def test_identical_perturbations_score_zero():
    backend = StubBackend(-10.0, [-10.0, -10.0, -10.0])
    assert curvature_score("code", backend) == 0.0


def test_two_point_arithmetic():
    backend = StubBackend(-10.0, [-12.0, -14.0])
    # mean -13, population stdev 1 -> (13 - 10) / 1 = 3
    assert curvature_score("code", backend) == pytest.approx(3.0, abs=1e-12)


def test_location_invariance():
    rng = np.random.default_rng(3)
    base = StubBackend(-50.0, list(rng.normal(-60, 5, size=64)))
    score = curvature_score("x", base)
    for shift in (-1000.0, -3.5, 12.25, 1e6):
        shifted = ShiftedBackend(base, shift)
        assert curvature_score("x", shifted) == pytest.approx(score, abs=1e-9)


def test_empty_code_rejected():
    with pytest.raises(ValueError, match="empty input"):
        curvature_score("", StubBackend(0, [0, 0]))


def test_k_below_two_rejected():
    with pytest.raises(ValueError):
        curvature_score("x", StubBackend(0, [0, 0]), k=1)


def test_score_deterministic_under_seed():
    backend = NgramBackend(order=3).fit(["def f():\n    return 1\n"] * 3)
    a = curvature_score("def g():\n    return 2\n", backend, k=16, seed=5)
    b = curvature_score("def g():\n    return 2\n", backend, k=16, seed=5)
    c = curvature_score("def g():\n    return 2\n", backend, k=16, seed=6)
    assert a == b
    assert a != c


# ---------------------------------------------------------------------------
# n-gram backend


def test_ngram_probabilities_sum_to_one():
    backend = NgramBackend(order=3, add_k=0.05).fit(["abcabcabd", "xyz"])
    for context in ("ab", "xy", "zz", "\x02\x02"):
        probs, unseen = backend._distribution(context)
        assert probs.sum() + unseen == pytest.approx(1.0, abs=1e-9)


def test_ngram_loglik_finite_and_ordered():
    backend = NgramBackend(order=4).fit(["for i in range(10):\n    print(i)\n"])
    seen = backend.log_likelihood("for i in range(10):\n")
    unseen = backend.log_likelihood("ZZ!!@@##QQ~~\x7f")
    assert np.isfinite(seen) and np.isfinite(unseen)
    assert seen / len("for i in range(10):\n") > unseen / len("ZZ!!@@##QQ~~\x7f")


def test_ngram_separates_fixture_styles(split_corpus):
    train = [s for s in split_corpus if s.split == "train"]
    test = [s for s in split_corpus if s.split == "test"]
    backend = NgramBackend(order=4).fit(
        [s.code for s in train if s.label == "llm"]
    )
    human_scores = [curvature_score(s.code, backend, k=24, seed=1)
                    for s in test if s.label == "human"]
    llm_scores = [curvature_score(s.code, backend, k=24, seed=1)
                  for s in test if s.label == "llm"]
    assert np.mean(llm_scores) > np.mean(human_scores)


# ---------------------------------------------------------------------------
# threshold fitting


def brute_force_best_threshold(scores, golds):
    unique = sorted(set(scores))
    candidates = unique + [(a + b) / 2 for a, b in zip(unique, unique[1:])]
    best = None
    for t in sorted(candidates):
        preds = ["llm" if s >= t else "human" for s in scores]
        f1 = macro_metrics(preds, golds, ["human", "llm"])["F"]
        if best is None or f1 > best[1] + 1e-12:
            best = (t, f1)
    return best


def test_fit_threshold_two_point_case():
    fitted = fit_threshold([0.0, 1.0], ["human", "llm"])
    assert fitted.threshold == pytest.approx(0.5)
    assert fitted.macro_f1 == 1.0
    assert not fitted.inverted_polarity


def test_fit_threshold_matches_sweep_oracle():
    rng = np.random.default_rng(21)
    for _ in range(25):
        n = int(rng.integers(4, 40))
        scores = list(np.round(rng.normal(size=n), 3))
        golds = ["llm" if rng.random() < 0.5 else "human" for _ in range(n)]
        if len(set(golds)) < 2:
            golds[0] = "llm" if golds[1] == "human" else "human"
        fitted = fit_threshold(scores, golds)
        t_oracle, f_oracle = brute_force_best_threshold(scores, golds)
        assert fitted.macro_f1 == pytest.approx(f_oracle, abs=1e-12)
        assert fitted.threshold == pytest.approx(t_oracle, abs=1e-12)


def test_fit_threshold_inverted_polarity_flag():
    scores = [1.0, 0.9, 0.8, 0.1, 0.2, 0.3]
    golds = ["human", "human", "human", "llm", "llm", "llm"]
    fitted = fit_threshold(scores, golds)
    assert fitted.inverted_polarity


def test_fit_threshold_degenerate_identical_scores():
    fitted = fit_threshold([2.5, 2.5, 2.5], ["human", "llm", "llm"])
    assert fitted.threshold == 2.5


def test_fit_threshold_single_class_errors():
    with pytest.raises(ValueError):
        fit_threshold([0.1, 0.2], ["llm", "llm"])


# ---------------------------------------------------------------------------
# classification


def test_classify_boundary_inclusive():
    backend = StubBackend(-10.0, [-12.0, -14.0])  # score exactly 3.0
    assert classify_zero_shot("x", backend, threshold=3.0) == "llm"
    assert classify_zero_shot("x", backend, threshold=3.0 + 1e-9) == "human"


def test_threshold_monotonicity():
    backend = NgramBackend(order=3).fit(["aaa bbb ccc"] * 2)
    code = "aaa bbb"
    score = curvature_score(code, backend, k=8, seed=0)
    verdicts = [classify_zero_shot(code, backend, t, k=8, seed=0)
                for t in (score - 1, score, score + 1)]
    # raising the threshold never flips human -> llm
    for earlier, later in itertools.combinations(verdicts, 2):
        assert not (earlier == "human" and later == "llm")


# ---------------------------------------------------------------------------
# process adapter


_WORKER = r"""
import json, sys
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    record = json.loads(line)
    code = record["code"]
    loglik = -float(len(code))
    perturbations = [loglik - 1.0, loglik - 2.0, loglik - 3.0]
    print(json.dumps({"id": record["id"], "loglik": loglik,
                      "perturbation_logliks": perturbations}))
"""


def test_process_backend_round_trip():
    backend = ProcessBackend([sys.executable, "-c", _WORKER])
    assert backend.log_likelihood("abcd") == -4.0
    assert backend.sample_perturbations("abcd", k=3, seed=0) == [-5.0, -6.0, -7.0]
    # mean -6, population stdev sqrt(2/3)
    expected = 2.0 / np.sqrt(2.0 / 3.0)
    assert curvature_score("abcd", backend) == pytest.approx(expected, rel=1e-9)


def test_process_backend_batch():
    backend = ProcessBackend([sys.executable, "-c", _WORKER])
    results = backend.score_batch(["a", "bb", "ccc"])
    assert [r[0] for r in results] == [-1.0, -2.0, -3.0]


def test_process_backend_failure_carries_context():
    backend = ProcessBackend([sys.executable, "-c", "import sys; sys.exit(3)"])
    with pytest.raises(BackendError, match="exited 3"):
        backend.log_likelihood("x")
