"""Binary CART decision tree with weighted Gini impurity."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError, SingleClassError
from .timeseries import kfold_split

# relative slack when comparing impurity decreases; near-equal splits tie
_GAIN_RTOL = 1e-12


def gini(counts) -> float:
    """``1 - sum p_c^2`` from (weighted) class counts."""
    c = np.asarray(counts, dtype=float)
    total = c.sum()
    if not total > 0:
        raise ParameterError("gini needs a positive total weight")
    p = c / total
    return float(1.0 - np.dot(p, p))


@dataclass(eq=False)
class TreeNode:
    counts: tuple[float, float]
    depth: int = 0
    feature: int = -1
    threshold: float = float("nan")
    gain: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def prediction(self) -> int:
        # ties go to the no-fault class
        return int(self.counts[1] > self.counts[0])


@dataclass(eq=False)
class TrainedTree:
    root: TreeNode
    n_features: int
    max_depth: int
    feature_names: tuple[str, ...] = ()
    importances: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.feature_names:
            self.feature_names = tuple(f"f{i}" for i in range(self.n_features))
        self.feature_names = tuple(self.feature_names)
        if len(self.feature_names) != self.n_features:
            raise ShapeError("feature_names length does not match feature count")
        if self.importances is None:
            self.importances = feature_importances(self)
        self._flat = None

    def nodes(self):
        """Nodes in preorder."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)

    @property
    def depth(self) -> int:
        return max(n.depth for n in self.nodes())

    @property
    def n_splits(self) -> int:
        return sum(not n.is_leaf for n in self.nodes())

    def _arrays(self):
        if self._flat is None:
            nodes = list(self.nodes())
            index = {id(n): i for i, n in enumerate(nodes)}
            feat = np.array([n.feature for n in nodes], dtype=np.int64)
            thr = np.array([n.threshold for n in nodes])
            left = np.array([index[id(n.left)] if not n.is_leaf else -1 for n in nodes])
            right = np.array([index[id(n.right)] if not n.is_leaf else -1 for n in nodes])
            pred = np.array([n.prediction for n in nodes], dtype=np.int8)
            self._flat = feat, thr, left, right, pred
        return self._flat

    def predict(self, X, depth: int | None = None) -> np.ndarray:
        """Vectorized prediction; ``depth`` truncates the tree for evaluation."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} features, got {X.shape[1]}")
        feat, thr, left, right, pred = self._arrays()
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        limit = self.max_depth if depth is None else min(depth, self.max_depth)
        for _ in range(limit):
            active = left[node] >= 0
            if not active.any():
                break
            r, nd = rows[active], node[active]
            go_left = X[r, feat[nd]] <= thr[nd]
            node[r] = np.where(go_left, left[nd], right[nd])
        return pred[node].astype(np.int8)


def tree_predict(tree: TrainedTree, sample) -> int:
    sample = np.asarray(sample, dtype=float).reshape(-1)
    if sample.size != tree.n_features:
        raise ShapeError(f"expected {tree.n_features} features, got {sample.size}")
    node = tree.root
    while not node.is_leaf:
        node = node.left if sample[node.feature] <= node.threshold else node.right
    return node.prediction


def _best_split(X, y, w, idx):
    """Best (gain, feature, threshold) over midpoints of sorted distinct values."""
    wi = w[idx]
    w1 = wi * y[idx]
    w0 = wi - w1
    W0, W1 = w0.sum(), w1.sum()
    W = W0 + W1
    parent = W - (W0 * W0 + W1 * W1) / W
    best = None
    for j in range(X.shape[1]):
        xj = X[idx, j]
        order = np.argsort(xj, kind="stable")
        xs = xj[order]
        cand = np.flatnonzero(xs[:-1] < xs[1:])
        if cand.size == 0:
            continue
        L0 = np.cumsum(w0[order])[cand]
        L1 = np.cumsum(w1[order])[cand]
        R0, R1 = W0 - L0, W1 - L1
        WL, WR = L0 + L1, R0 + R1
        with np.errstate(divide="ignore", invalid="ignore"):
            imp_l = np.where(WL > 0, WL - (L0 * L0 + L1 * L1) / WL, 0.0)
            imp_r = np.where(WR > 0, WR - (R0 * R0 + R1 * R1) / WR, 0.0)
        gains = parent - imp_l - imp_r
        top = gains.max()
        tol = _GAIN_RTOL * W
        i = int(np.flatnonzero(gains >= top - tol)[0])
        if best is None or gains[i] > best[0] + tol:
            lo, hi = xs[cand[i]], xs[cand[i] + 1]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best = (max(float(gains[i]), 0.0), j, float(thr))
    return best


def _grow(X, y, w, idx, depth, max_depth) -> TreeNode:
    c1 = float(np.sum(w[idx] * y[idx]))
    c0 = float(np.sum(w[idx])) - c1
    node = TreeNode((c0, c1), depth)
    if depth >= max_depth or c0 <= 0 or c1 <= 0:
        return node
    split = _best_split(X, y, w, idx)
    if split is None:
        return node
    node.gain, node.feature, node.threshold = split
    go_left = X[idx, node.feature] <= node.threshold
    node.left = _grow(X, y, w, idx[go_left], depth + 1, max_depth)
    node.right = _grow(X, y, w, idx[~go_left], depth + 1, max_depth)
    return node


def _prune_zero_gain(node: TreeNode, tol: float) -> float:
    """Collapse subtrees whose splits remove no impurity; returns subtree gain."""
    if node.is_leaf:
        return 0.0
    total = node.gain + _prune_zero_gain(node.left, tol) + _prune_zero_gain(node.right, tol)
    if total <= tol:
        node.left = node.right = None
        node.feature, node.threshold, node.gain = -1, float("nan"), 0.0
        return 0.0
    return total


def tree_fit(features, labels, weights=None, max_depth: int = 5,
             feature_names=()) -> TrainedTree:
    """Greedy CART on weighted Gini impurity.

    Ties between equal-gain splits go to the lowest feature index, then the
    smallest threshold.  Zero-gain splits are tried (so XOR-like structure can
    be found one level down) but pruned away again if nothing below them
    reduces impurity, since such subtrees leave class proportions unchanged.
    """
    X = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels).reshape(-1)
    if X.shape[0] == 0:
        raise ShapeError("empty training set")
    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if not X.shape[0] == y.size == w.size:
        raise ShapeError(f"{X.shape[0]} rows, {y.size} labels, {w.size} weights")
    if not set(np.unique(y)) <= {0, 1}:
        raise ParameterError("labels must be 0/1")
    if np.any(w < 0) or not w.sum() > 0:
        raise ParameterError("weights must be nonnegative with positive sum")
    if int(max_depth) != max_depth or max_depth < 1:
        raise ParameterError(f"max_depth must be a positive integer, got {max_depth}")
    y = y.astype(float)
    root = _grow(X, y, w, np.arange(y.size), 0, int(max_depth))
    _prune_zero_gain(root, _GAIN_RTOL * w.sum())
    return TrainedTree(root, X.shape[1], int(max_depth), tuple(feature_names))


def feature_importances(tree: TrainedTree) -> np.ndarray:
    """Per-feature impurity decrease, normalized to sum 1 (zeros for a bare leaf)."""
    imp = np.zeros(tree.n_features)
    for node in tree.nodes():
        if not node.is_leaf:
            imp[node.feature] += node.gain
    total = imp.sum()
    return imp / total if total > 0 else imp


def class_reweight(labels) -> np.ndarray:
    """Inverse-frequency weights ``n / (2 n_c)`` so both classes carry equal mass."""
    y = np.asarray(labels).reshape(-1).astype(int)
    n1 = int(np.sum(y == 1))
    n0 = int(np.sum(y == 0))
    if n0 + n1 != y.size:
        raise ParameterError("labels must be 0/1")
    if n0 == 0 or n1 == 0:
        raise SingleClassError(f"both classes are required (got {n0} negatives, {n1} positives)")
    return np.where(y == 1, y.size / (2.0 * n1), y.size / (2.0 * n0))


def cross_validate(features, labels, weights=None, depth_grid=range(1, 8), k: int = 5,
                   seed: int = 0) -> tuple[int, float]:
    """Pick the shallowest depth whose mean holdout accuracy is within 1e-9 of the best.

    Greedy growth does not depend on the depth cap, so each fold grows one tree
    to the deepest grid value and evaluates truncations of it.
    """
    grid = sorted({int(d) for d in depth_grid})
    if not grid:
        raise ParameterError("depth grid is empty")
    X = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels).reshape(-1)
    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float)
    acc = np.zeros((len(grid), k))
    for f, (train, test) in enumerate(kfold_split(y.size, k, seed)):
        tree = tree_fit(X[train], y[train], w[train], max_depth=grid[-1])
        for g, depth in enumerate(grid):
            acc[g, f] = np.mean(tree.predict(X[test], depth=depth) == y[test])
    means = acc.mean(axis=1)
    best = means.max()
    g = int(np.flatnonzero(means >= best - 1e-9)[0])
    return grid[g], float(means[g])
