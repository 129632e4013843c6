"""Primal subgradient training for the L2-regularized hinge loss.

One binary margin per class (one-vs-rest). Features are standardized on the
training matrix; an optional random Fourier feature map approximates an RBF
kernel while keeping the primal update. Deterministic under the seed.
"""

from __future__ import annotations

import numpy as np


def standardize_fit(values: np.ndarray) -> dict:
    mean = values.mean(axis=0)
    scale = values.std(axis=0)
    kept = np.flatnonzero(scale > 0.0)
    return {
        "mean": mean[kept].tolist(),
        "scale": scale[kept].tolist(),
        "kept": kept.tolist(),
    }


def standardize_apply(values: np.ndarray, stats: dict) -> np.ndarray:
    kept = np.asarray(stats["kept"], dtype=np.intp)
    mean = np.asarray(stats["mean"], dtype=np.float64)
    scale = np.asarray(stats["scale"], dtype=np.float64)
    return (values[:, kept] - mean) / scale


def make_rff(n_features: int, dims: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    gamma = 1.0 / max(n_features, 1)
    weights = rng.normal(0.0, np.sqrt(2.0 * gamma), size=(n_features, dims))
    offsets = rng.uniform(0.0, 2.0 * np.pi, size=dims)
    return {"weights": weights.tolist(), "offsets": offsets.tolist()}


def rff_apply(values: np.ndarray, rff: dict) -> np.ndarray:
    weights = np.asarray(rff["weights"], dtype=np.float64)
    offsets = np.asarray(rff["offsets"], dtype=np.float64)
    dims = weights.shape[1]
    return np.sqrt(2.0 / dims) * np.cos(values @ weights + offsets)


def train_hinge_ovr(
    inputs: np.ndarray,
    class_indices: np.ndarray,
    n_classes: int,
    l2: float,
    epochs: int,
    learning_rate: float,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Train one-vs-rest hinge classifiers; returns (weights, biases)."""
    n, d = inputs.shape
    weights = np.zeros((n_classes, d))
    biases = np.zeros(n_classes)
    for cls in range(n_classes):
        rng = np.random.default_rng(seed + 7919 * cls)
        target = np.where(class_indices == cls, 1.0, -1.0)
        w = np.zeros(d)
        b = 0.0
        step = 0
        for _ in range(epochs):
            order = rng.permutation(n)
            for idx in order:
                step += 1
                eta = learning_rate / (1.0 + learning_rate * l2 * step)
                x = inputs[idx]
                y = target[idx]
                margin = y * (x @ w + b)
                w *= 1.0 - eta * l2
                if margin < 1.0:
                    w += eta * y * x
                    b += eta * y
        weights[cls] = w
        biases[cls] = b
    return weights, biases


def decision_scores(inputs: np.ndarray, weights, biases) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    b = np.asarray(biases, dtype=np.float64)
    return inputs @ w.T + b
