"""Random forest of Gini CART trees, from scratch.

Each tree is grown on a bootstrap sample until leaves are pure or no split
separates the rows.  At every node ``floor(sqrt(F))`` features are drawn;
if none of them can split the node, further features are drawn one at a
time.  Among candidate splits the lowest weighted Gini impurity wins, ties
going to the lower feature index and then the lower threshold.  Rows with
``x[f] <= threshold`` go left.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

FORMAT = "aimsel-forest"
FORMAT_VERSION = 1


@dataclass
class Tree:
    feature: np.ndarray    # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n_pos: np.ndarray
    n_total: np.ndarray

    def leaf_of(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def votes(self, X: np.ndarray) -> np.ndarray:
        """True where this tree votes positive (strict majority in the leaf)."""
        leaf = self.leaf_of(X)
        return self.n_pos[leaf] * 2 > self.n_total[leaf]


def _best_split(Xn: np.ndarray, yn: np.ndarray, feats: Sequence[int]):
    """(score, feature, threshold) of the best split over ``feats`` or None."""
    feats = np.sort(np.asarray(feats))
    n = len(yn)
    cols = Xn[:, feats]
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    ys = yn[order]
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    nl = np.arange(1, n, dtype=np.float64)[:, None]
    pl = np.cumsum(ys, axis=0)[:-1].astype(np.float64)
    nr = n - nl
    pr = yn.sum() - pl
    # weighted Gini n_l*g_l + n_r*g_r equals n - a / (n_l * n_r) with an integer a
    # that float64 holds exactly, so equal scores compare equal
    a = (pl ** 2 + (nl - pl) ** 2) * nr + (pr ** 2 + (nr - pr) ** 2) * nl
    gain = np.where(valid, a / (nl * nr), -np.inf)
    # first maximum in (feature, position) order: lower index, then lower threshold
    flat = int(np.argmax(gain.T.ravel()))
    j, i = divmod(flat, n - 1)
    lo, hi = xs[i, j], xs[i + 1, j]
    thr = (lo + hi) / 2.0
    if not (lo <= thr < hi):
        thr = lo
    return n - float(gain[i, j]), int(feats[j]), float(thr)


def _grow(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, k: int) -> Tree:
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    n_pos: List[int] = []
    n_total: List[int] = []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        n_pos.append(int(y[idx].sum()))
        n_total.append(len(idx))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)))]
    F = X.shape[1]
    while stack:
        node, idx = stack.pop()
        if n_pos[node] in (0, n_total[node]):
            continue
        Xn, yn = X[idx], y[idx]
        perm = rng.permutation(F)
        best = _best_split(Xn, yn, perm[:k])
        pos = k
        while best is None and pos < F:
            best = _best_split(Xn, yn, perm[pos:pos + 1])
            pos += 1
        if best is None:
            continue
        _, f, thr = best
        mask = Xn[:, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri))
        stack.append((left[node], li))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(n_pos, dtype=np.int64), np.array(n_total, dtype=np.int64))


@dataclass
class ForestModel:
    trees: List[Tree]
    feature_count: int
    seed: int

    @property
    def features_per_split(self) -> int:
        return max(1, int(math.isqrt(self.feature_count)))

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.feature_count:
            raise ValueError(f"expected {self.feature_count} features, got {X.shape[1]}")
        return X

    def tree_votes(self, X) -> np.ndarray:
        """Bool matrix (trees, rows) of individual positive votes."""
        X = self._check(X)
        return np.array([t.votes(X) for t in self.trees])

    def scores(self, X) -> np.ndarray:
        return self.tree_votes(X).sum(axis=0) / len(self.trees)

    def save(self, path) -> None:
        header = {"format": FORMAT, "version": FORMAT_VERSION,
                  "feature_count": self.feature_count, "seed": self.seed,
                  "sizes": [len(t.feature) for t in self.trees]}
        arrays = {name: np.concatenate([getattr(t, name) for t in self.trees])
                  for name in ("feature", "threshold", "left", "right", "n_pos", "n_total")}
        with open(path, "wb") as fh:
            np.savez(fh, header=np.array(json.dumps(header)), **arrays)

    @classmethod
    def load(cls, path) -> "ForestModel":
        with np.load(path) as data:
            header = json.loads(str(data["header"]))
            if header.get("format") != FORMAT or header.get("version") != FORMAT_VERSION:
                raise ValueError(f"{path}: not a version {FORMAT_VERSION} forest file")
            arrays = {k: data[k] for k in data.files if k != "header"}
        trees, start = [], 0
        for size in header["sizes"]:
            sl = slice(start, start + size)
            trees.append(Tree(*(arrays[k][sl] for k in
                                ("feature", "threshold", "left", "right", "n_pos", "n_total"))))
            start += size
        return cls(trees, header["feature_count"], header["seed"])


def train_forest(X, y, seed: int, n_trees: int = 100) -> ForestModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool).astype(np.int64)
    if len(y) == 0:
        raise ValueError("cannot train a forest on an empty set")
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-d with one row per label")
    k = max(1, int(math.isqrt(X.shape[1])))
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        boot = rng.integers(0, len(y), size=len(y))
        trees.append(_grow(X[boot], y[boot], rng, k))
    return ForestModel(trees, X.shape[1], seed)


def predict_many(model: ForestModel, X) -> List[Tuple[bool, float]]:
    return [(bool(s > 0.5), float(s)) for s in model.scores(X)]


def predict(model: ForestModel, x) -> Tuple[bool, float]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict takes a single vector")
    return predict_many(model, x[None, :])[0]
