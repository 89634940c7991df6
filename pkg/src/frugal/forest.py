"""Entropy-split decision trees bagged into a random forest.

Trees are stored as flat node arrays. Growth and traversal are compiled with
numba because the tuner fits thousands of forests per experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .cla import Predictions
from .dataset import UNKNOWN, Dataset
from .errors import ContractError

LEAF = -1
_GAIN_EPS = 1e-12


def entropy(class_counts) -> float:
    """Shannon entropy in bits of a (negatives, positives) count pair."""
    counts = [int(c) for c in class_counts]
    if any(c < 0 for c in counts):
        raise ContractError("class counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise ContractError("entropy of an empty node")
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


@numba.njit(cache=True)
def _h(n0, n1):
    n = n0 + n1
    if n == 0 or n0 == 0 or n1 == 0:
        return 0.0
    p = n0 / n
    q = n1 / n
    return -(p * np.log2(p) + q * np.log2(q))


@numba.njit(cache=True)
def _scan_feature(X, y, idx, start, end, f):
    """Best midpoint split of rows idx[start:end] on column f: (gain, threshold)."""
    n = end - start
    vals = np.empty(n)
    labs = np.empty(n, dtype=np.int64)
    for i in range(n):
        vals[i] = X[idx[start + i], f]
        labs[i] = y[idx[start + i]]
    order = np.argsort(vals, kind="mergesort")
    total1 = 0
    for i in range(n):
        total1 += labs[i]
    total0 = n - total1
    parent = _h(total0, total1)
    best_gain = -1.0
    best_thr = 0.0
    left1 = 0
    for i in range(n - 1):
        left1 += labs[order[i]]
        a = vals[order[i]]
        b = vals[order[i + 1]]
        if a == b:
            continue
        nl = i + 1
        nr = n - nl
        left0 = nl - left1
        right1 = total1 - left1
        right0 = nr - right1
        gain = parent - (nl * _h(left0, left1) + nr * _h(right0, right1)) / n
        if gain > best_gain:
            best_gain = gain
            thr = (a + b) / 2.0
            if thr >= b:
                thr = a
            best_thr = thr
    return best_gain, best_thr


@numba.njit(cache=True)
def _best_split(X, y, idx, start, end, features):
    best_f = -1
    best_gain = -1.0
    best_thr = 0.0
    for j in range(features.shape[0]):
        f = features[j]
        gain, thr = _scan_feature(X, y, idx, start, end, f)
        if gain > best_gain:
            best_gain = gain
            best_f = f
            best_thr = thr
    return best_f, best_gain, best_thr


@numba.njit(cache=True)
def _grow(X, y, idx, k, max_depth, min_split, seed):
    np.random.seed(seed)
    n, m = idx.shape[0], X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    counts = np.zeros((cap, 2), dtype=np.int64)

    stack = np.empty((cap, 4), dtype=np.int64)  # node, start, end, depth
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n1 = 0
        for i in range(start, end):
            n1 += y[idx[i]]
        n0 = (end - start) - n1
        counts[node, 0] = n0
        counts[node, 1] = n1
        if n0 == 0 or n1 == 0 or (end - start) < min_split:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        perm = np.random.permutation(m)
        drawn = np.sort(perm[:k])
        f, gain, thr = _best_split(X, y, idx, start, end, drawn)
        if gain <= _GAIN_EPS and k < m:
            rest = np.sort(perm[k:])
            f, gain, thr = _best_split(X, y, idx, start, end, rest)
        if gain <= _GAIN_EPS:
            continue

        # partition idx[start:end] in place: x <= thr to the left
        lo = start
        hi = end - 1
        while lo <= hi:
            if X[idx[lo], f] <= thr:
                lo += 1
            else:
                tmp = idx[lo]
                idx[lo] = idx[hi]
                idx[hi] = tmp
                hi -= 1
        feature[node] = f
        threshold[node] = thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0] = n_nodes + 1
        stack[top, 1] = lo
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = n_nodes
        stack[top, 1] = start
        stack[top, 2] = lo
        stack[top, 3] = depth + 1
        top += 1
        n_nodes += 2
    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        counts[:n_nodes].copy(),
    )


@numba.njit(cache=True)
def _apply(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] != -1:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@numba.njit(cache=True)
def _bootstrap(n, seed):
    np.random.seed(seed)
    return np.random.randint(0, n, n)


def best_split(X, y, features=None):
    """Best (feature, threshold, gain) over the given columns; ``feature`` is -1 if none.

    Exposed so tests can re-scan a node independently of tree growth.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if features is None:
        features = np.arange(X.shape[1])
    idx = np.arange(X.shape[0], dtype=np.int64)
    f, gain, thr = _best_split(X, y, idx, 0, X.shape[0], np.asarray(features, dtype=np.int64))
    return int(f), float(thr), float(gain)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_split: int = 2
    features_per_split: int | None = None  # None: floor(log2(m)), at least 1
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ContractError("n_trees must be at least 1")
        if self.min_split < 2:
            raise ContractError("min_split must be at least 2")
        if self.max_depth is not None and self.max_depth < 1:
            raise ContractError("max_depth must be positive")

    def split_width(self, m: int) -> int:
        if self.features_per_split is not None:
            if not 1 <= self.features_per_split <= m:
                raise ContractError(f"features_per_split must lie in [1, {m}]")
            return self.features_per_split
        return max(1, int(math.floor(math.log2(m)))) if m > 0 else 1


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def leaves(self, X: np.ndarray) -> np.ndarray:
        return _apply(self.feature, self.threshold, self.left, self.right, X)

    def votes(self, X: np.ndarray) -> np.ndarray:
        c = self.counts[self.leaves(X)]
        return (c[:, 1] >= c[:, 0]).astype(np.int64)

    def to_dict(self, node: int = 0) -> dict:
        if self.feature[node] == LEAF:
            return {"counts": self.counts[node].tolist()}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node])),
        }


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: list[Tree]
    feature_count: int
    params: ForestParams = field(default_factory=ForestParams)

    def to_dict(self) -> dict:
        return {
            "feature_count": self.feature_count,
            "trees": [t.to_dict() for t in self.trees],
        }


def fit_tree(X, y, params: ForestParams, seed: int, sample=None) -> Tree:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    idx = np.arange(X.shape[0], dtype=np.int64) if sample is None else np.array(sample, dtype=np.int64)
    depth = -1 if params.max_depth is None else params.max_depth
    parts = _grow(X, y, idx, params.split_width(X.shape[1]), depth, params.min_split, seed)
    return Tree(*parts)


def tree_seeds(seed: int, n_trees: int) -> np.ndarray:
    """Per-tree seeds fixed by the master seed, independent of fitting order."""
    return np.random.SeedSequence(seed).generate_state(n_trees * 2).reshape(n_trees, 2) % (2**31)


def forest_fit(d: Dataset, p: ForestParams = ForestParams()) -> ForestModel:
    """Bag ``p.n_trees`` trees, each on a bootstrap sample of ``d``."""
    if d.n_rows == 0:
        raise ContractError("cannot fit a forest on zero rows")
    if d.labels is None or (d.labels == UNKNOWN).any():
        raise ContractError("forest_fit needs every label to be known")
    X = np.ascontiguousarray(d.X)
    y = d.labels.astype(np.int64)
    trees = []
    for boot_seed, grow_seed in tree_seeds(p.seed, p.n_trees):
        sample = _bootstrap(d.n_rows, int(boot_seed)) if p.bootstrap else None
        trees.append(fit_tree(X, y, p, int(grow_seed), sample))
    return ForestModel(trees, d.n_features, p)


def forest_predict(m: ForestModel, d) -> Predictions:
    """Score each row by the fraction of trees voting positive; ties go positive."""
    X = np.ascontiguousarray(d.X if isinstance(d, Dataset) else d, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.feature_count:
        raise ContractError(f"forest expects {m.feature_count} features, got {X.shape[-1]}")
    votes = np.zeros(X.shape[0], dtype=np.int64)
    for t in m.trees:
        votes += t.votes(X)
    scores = votes / len(m.trees)
    return Predictions((scores >= 0.5).astype(np.int8), scores)
