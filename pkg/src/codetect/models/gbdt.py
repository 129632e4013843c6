"""Gradient-boosted regression trees, built from scratch on numpy.

Second-order (Newton) boosting on the logistic loss with histogram split
search. Splits learn a default direction for missing values; prediction
walks real-valued thresholds so unseen data never needs the training bins.
Everything is deterministic under the seed: ties in split gain resolve to
the lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_LAMBDA = 1.0  # L2 on leaf values
_MIN_GAIN = 1e-12
_MAX_BINS = 255


@dataclass
class Tree:
    feature: list[int] = field(default_factory=list)   # -1 for leaves
    threshold: list[float] = field(default_factory=list)
    default_left: list[bool] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.default_left.append(True)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def predict(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros(len(values))
        # frontier evaluation: one boolean mask per reachable node
        frontier = [(0, np.arange(len(values)))]
        while frontier:
            node, rows = frontier.pop()
            if len(rows) == 0:
                continue
            f = self.feature[node]
            if f < 0:
                out[rows] = self.value[node]
                continue
            column = values[rows, f]
            missing = np.isnan(column)
            goes_left = column <= self.threshold[node]
            if self.default_left[node]:
                goes_left = goes_left | missing
            else:
                goes_left = goes_left & ~missing
            frontier.append((self.left[node], rows[goes_left]))
            frontier.append((self.right[node], rows[~goes_left]))
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "default_left": [int(x) for x in self.default_left],
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Tree":
        return cls(
            feature=[int(x) for x in data["feature"]],
            threshold=[float(x) for x in data["threshold"]],
            default_left=[bool(x) for x in data["default_left"]],
            left=[int(x) for x in data["left"]],
            right=[int(x) for x in data["right"]],
            value=[float(x) for x in data["value"]],
        )


def _bin_columns(values: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Quantile-bin every column; missing becomes bin -1."""
    n, d = values.shape
    bins = np.empty((n, d), dtype=np.int32)
    edges: list[np.ndarray] = []
    for f in range(d):
        column = values[:, f]
        finite = column[~np.isnan(column)]
        if len(finite) == 0:
            edge = np.array([0.0])
        else:
            distinct = np.unique(finite)
            if len(distinct) <= _MAX_BINS:
                edge = distinct
            else:
                quantiles = np.linspace(0.0, 1.0, _MAX_BINS + 1)
                edge = np.unique(np.quantile(finite, quantiles))
        edges.append(edge)
        col_bins = np.searchsorted(edge, column, side="left")
        col_bins = np.minimum(col_bins, len(edge) - 1)
        col_bins[np.isnan(column)] = -1
        bins[:, f] = col_bins
    return bins, edges


class _TreeGrower:
    def __init__(self, bins, edges, grad, hess, max_depth, min_leaf):
        self.bins = bins
        self.edges = edges
        self.grad = grad
        self.hess = hess
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.tree = Tree()
        self.gain_by_feature: dict[int, float] = {}

    def grow(self, rows: np.ndarray) -> Tree:
        root = self.tree.new_node()
        self._split(root, rows, 0)
        return self.tree

    def _leaf(self, node: int, rows: np.ndarray) -> None:
        g = float(self.grad[rows].sum())
        h = float(self.hess[rows].sum())
        self.tree.value[node] = -g / (h + _LAMBDA)

    def _split(self, node: int, rows: np.ndarray, depth: int) -> None:
        tree = self.tree
        if depth >= self.max_depth or len(rows) < 2 * self.min_leaf:
            self._leaf(node, rows)
            return
        g_total = float(self.grad[rows].sum())
        h_total = float(self.hess[rows].sum())
        base = g_total * g_total / (h_total + _LAMBDA)

        best = (None, _MIN_GAIN)  # ((feature, bin, default_left), gain)
        for f in range(self.bins.shape[1]):
            found = self._best_for_feature(f, rows, g_total, h_total, base)
            if found is not None and found[1] > best[1]:
                best = found
        if best[0] is None:
            self._leaf(node, rows)
            return
        (f, split_bin, default_left), gain = best
        self.gain_by_feature[f] = self.gain_by_feature.get(f, 0.0) + gain

        column = self.bins[rows, f]
        missing = column < 0
        goes_left = (column <= split_bin) & ~missing
        if default_left:
            goes_left = goes_left | missing
        tree.feature[node] = f
        tree.threshold[node] = float(self.edges[f][split_bin])
        tree.default_left[node] = bool(default_left)
        left = tree.new_node()
        right = tree.new_node()
        tree.left[node] = left
        tree.right[node] = right
        self._split(left, rows[goes_left], depth + 1)
        self._split(right, rows[~goes_left], depth + 1)

    def _best_for_feature(self, f, rows, g_total, h_total, base):
        column = self.bins[rows, f]
        missing = column < 0
        n_bins = len(self.edges[f])
        if n_bins < 2:
            return None
        present = column[~missing]
        if len(present) == 0:
            return None
        g = self.grad[rows]
        h = self.hess[rows]
        hist_g = np.bincount(present, weights=g[~missing], minlength=n_bins)
        hist_h = np.bincount(present, weights=h[~missing], minlength=n_bins)
        hist_c = np.bincount(present, minlength=n_bins)
        g_miss = float(g[missing].sum())
        h_miss = float(h[missing].sum())
        c_miss = int(missing.sum())

        gl = np.cumsum(hist_g)[:-1]
        hl = np.cumsum(hist_h)[:-1]
        cl = np.cumsum(hist_c)[:-1]

        best = None
        best_gain = _MIN_GAIN
        for default_left in (True, False):
            if default_left:
                left_g, left_h, left_c = gl + g_miss, hl + h_miss, cl + c_miss
            else:
                left_g, left_h, left_c = gl, hl, cl
            right_g = g_total - left_g
            right_h = h_total - left_h
            right_c = (len(rows)) - left_c
            valid = (left_c >= self.min_leaf) & (right_c >= self.min_leaf)
            if not valid.any():
                continue
            gain = 0.5 * (
                left_g ** 2 / (left_h + _LAMBDA)
                + right_g ** 2 / (right_h + _LAMBDA)
                - base
            )
            gain = np.where(valid, gain, -np.inf)
            b = int(np.argmax(gain))
            if gain[b] > best_gain:
                best_gain = float(gain[b])
                best = (f, b, default_left)
        if best is None:
            return None
        return best, best_gain


def fit_binary_ensemble(
    values: np.ndarray,
    targets: np.ndarray,
    trees: int,
    learning_rate: float,
    max_depth: int,
    min_samples_leaf: int,
    subsample: float,
    rng: np.random.Generator,
) -> dict:
    """Boost ``trees`` rounds of logistic loss; returns the ensemble parts."""
    n = len(values)
    bins, edges = _bin_columns(values)
    p0 = float(np.clip(targets.mean(), 1e-6, 1.0 - 1e-6))
    init = float(np.log(p0 / (1.0 - p0)))
    scores = np.full(n, init)
    fitted: list[Tree] = []
    losses: list[float] = []
    gain_by_feature: dict[int, float] = {}
    signed = 2.0 * targets - 1.0

    for _ in range(trees):
        prob = 1.0 / (1.0 + np.exp(-scores))
        grad = prob - targets
        hess = prob * (1.0 - prob)
        if subsample < 1.0:
            size = max(1, int(round(n * subsample)))
            rows = np.sort(rng.choice(n, size=size, replace=False))
        else:
            rows = np.arange(n)
        grower = _TreeGrower(bins, edges, grad, hess, max_depth, min_samples_leaf)
        tree = grower.grow(rows)
        for f, gain in grower.gain_by_feature.items():
            gain_by_feature[f] = gain_by_feature.get(f, 0.0) + gain
        fitted.append(tree)
        scores += learning_rate * tree.predict(values)
        losses.append(float(np.logaddexp(0.0, -signed * scores).mean()))

    return {
        "init": init,
        "trees": fitted,
        "losses": losses,
        "gain_by_feature": gain_by_feature,
    }


def ensemble_margin(values: np.ndarray, init: float, trees: list[Tree],
                    learning_rate: float) -> np.ndarray:
    margin = np.full(len(values), init)
    for tree in trees:
        margin += learning_rate * tree.predict(values)
    return margin
