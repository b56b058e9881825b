"""Classical baselines over the 31 manual features.

L1-penalized logistic regression is trained full-batch by proximal gradient
descent (gradient step on the logistic loss, then soft-thresholding of the
weights; the bias is unpenalized). The random forest grows 70 trees on
bootstrap resamples with Gini splits, sqrt(p) candidate features per node,
unlimited depth and single-sample leaves. Tree i draws from its own
generator seeded seed+i, so serial and tree-parallel training would agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Label
from .errors import DataError, NumericError

N_TREES = 70


@dataclass
class StandardScaler:
    means: np.ndarray
    stds: np.ndarray


def fit_scaler(rows: np.ndarray) -> StandardScaler:
    """Column-wise z-score parameters; zero-variance columns get std 1."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise DataError("scaler needs at least one row")
    means = rows.mean(axis=0)
    stds = rows.std(axis=0)
    stds[stds == 0.0] = 1.0
    return StandardScaler(means=means, stds=stds)


def apply_scaler(scaler: StandardScaler, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    return (rows - scaler.means) / scaler.stds


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    l1_lambda: float = 1e-3


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_logreg(
    rows: np.ndarray,
    labels: np.ndarray,
    l1_lambda: float = 1e-3,
    epochs: int = 500,
    lr: float = 0.1,
) -> LogRegModel:
    x = np.asarray(rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise DataError("rows and labels must be a non-empty aligned pair")
    n, d = x.shape
    w = np.zeros(d)
    b = 0.0
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is detected, not warned
        for epoch in range(epochs):
            p = _sigmoid(x @ w + b)
            residual = p - y
            w -= lr * (x.T @ residual) / n
            b -= lr * float(residual.mean())
            w = soft_threshold(w, lr * l1_lambda)
            if not (np.all(np.isfinite(w)) and np.isfinite(b)):
                raise NumericError(
                    f"logistic regression diverged at epoch {epoch + 1} "
                    f"(lr={lr}, l1_lambda={l1_lambda})"
                )
    return LogRegModel(weights=w, bias=b, l1_lambda=l1_lambda)


def logreg_scores(model: LogRegModel, rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    return _sigmoid(rows @ model.weights + model.bias)


def predict_logreg(model: LogRegModel, row: np.ndarray) -> tuple[Label, float]:
    score = float(logreg_scores(model, row)[0])
    return (Label.PHISHING if score > 0.5 else Label.LEGITIMATE), score


@dataclass
class _Tree:
    # flat node arrays; feature == -1 marks a leaf
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    vote: list[int] = field(default_factory=list)
    importance: np.ndarray | None = None

    def add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.vote.append(0)
        return len(self.feature) - 1

    def predict_one(self, row: np.ndarray) -> int:
        node = 0
        while self.feature[node] != -1:
            if row[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return self.vote[node]


@dataclass
class RandomForestModel:
    trees: list[_Tree]
    seed: int
    n_features: int


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    frac = counts / total
    return float(1.0 - np.dot(frac, frac))


def _leaf_vote(y: np.ndarray) -> int:
    pos = int(y.sum())
    neg = y.size - pos
    return 1 if pos > neg else 0  # ties go to legitimate


def _best_split(x, y, idx, feature_ids):
    """Lowest weighted-child-Gini (feature, threshold) over the candidates."""
    best = (np.inf, -1, 0.0)
    n = idx.size
    for f in feature_ids:
        values = x[idx, f]
        order = np.argsort(values, kind="stable")
        sorted_vals = values[order]
        sorted_y = y[idx][order]
        # cumulative positive counts give left/right class counts per cut
        pos_cum = np.cumsum(sorted_y)
        distinct = np.nonzero(sorted_vals[1:] > sorted_vals[:-1])[0]
        for cut in distinct:
            n_left = cut + 1
            n_right = n - n_left
            left_pos = pos_cum[cut]
            right_pos = pos_cum[-1] - left_pos
            gini_left = _gini(np.array([n_left - left_pos, left_pos]))
            gini_right = _gini(np.array([n_right - right_pos, right_pos]))
            cost = (n_left * gini_left + n_right * gini_right) / n
            if cost < best[0]:
                threshold = (sorted_vals[cut] + sorted_vals[cut + 1]) / 2.0
                best = (cost, int(f), float(threshold))
    return best


def _grow_tree(x: np.ndarray, y: np.ndarray, rng: np.random.Generator,
               n_candidates: int) -> _Tree:
    tree = _Tree()
    tree.importance = np.zeros(x.shape[1])
    n_total = x.shape[0]
    root = tree.add_node()
    stack = [(root, np.arange(n_total))]
    while stack:
        node, idx = stack.pop()
        y_node = y[idx]
        pos = int(y_node.sum())
        tree.vote[node] = _leaf_vote(y_node)
        impurity = _gini(np.array([idx.size - pos, pos]))
        if impurity == 0.0 or idx.size < 2:
            continue
        candidates = rng.choice(x.shape[1], size=n_candidates, replace=False)
        cost, feature, threshold = _best_split(x, y, idx, candidates)
        if feature == -1:
            continue  # all candidate columns constant on this node
        gain = impurity - cost
        if gain <= 0.0:
            continue
        tree.importance[feature] += (idx.size / n_total) * gain
        go_left = x[idx, feature] <= threshold
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        tree.feature[node] = feature
        tree.threshold[node] = threshold
        left = tree.add_node()
        right = tree.add_node()
        tree.left[node] = left
        tree.right[node] = right
        stack.append((left, left_idx))
        stack.append((right, right_idx))
    return tree


def train_random_forest(rows: np.ndarray, labels: np.ndarray, seed: int,
                        n_trees: int = N_TREES) -> RandomForestModel:
    x = np.asarray(rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.shape[0] or x.shape[0] < 2:
        raise DataError("random forest needs at least two aligned rows")
    n, d = x.shape
    n_candidates = max(1, int(np.sqrt(d)))
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng(seed + i)
        bootstrap = rng.integers(0, n, size=n)  # resample size equals training size
        trees.append(_grow_tree(x[bootstrap], y[bootstrap], rng, n_candidates))
    return RandomForestModel(trees=trees, seed=seed, n_features=d)


def rf_scores(model: RandomForestModel, rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    votes = np.zeros(rows.shape[0])
    for tree in model.trees:
        votes += [tree.predict_one(row) for row in rows]
    return votes / len(model.trees)


def predict_rf(model: RandomForestModel, row: np.ndarray) -> tuple[Label, float]:
    score = float(rf_scores(model, row)[0])
    return (Label.PHISHING if score > 0.5 else Label.LEGITIMATE), score


def feature_importance(model: RandomForestModel) -> np.ndarray:
    """Mean impurity decrease per feature, normalized to sum 1.

    A forest that never split (constant trees) reports all zeros,
    unnormalized.
    """
    total = np.zeros(model.n_features)
    for tree in model.trees:
        total += tree.importance
    total /= len(model.trees)
    s = total.sum()
    if s > 0:
        total /= s
    return total
