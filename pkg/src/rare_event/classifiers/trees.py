"""CART decision trees with Gini impurity, and forests built from them.

Split ties are broken deterministically: the lowest feature index wins, then
the lowest threshold. Samples with ``x <= threshold`` go left.
"""

from __future__ import annotations

import math

import numpy as np

from ..rng import make_rng

LEAF = -1


def _resolve_max_features(max_features, p: int) -> int:
    if max_features is None:
        return p
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(p)))
    return max(1, min(int(max_features), p))


def _best_split(x: np.ndarray, y: np.ndarray, w: np.ndarray, min_leaf: int):
    """Lowest weighted child Gini for one feature.

    Returns ``(score, threshold)`` or ``None`` when no admissible split exists.
    The score is ``sum_children W_c * 2 p_c (1 - p_c)``.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    n = xs.shape[0]
    cw = np.cumsum(w[order])
    cp = np.cumsum((w * y)[order])
    # candidate cut after position i (left = 0..i)
    i = np.arange(min_leaf - 1, n - min_leaf)
    if i.size == 0:
        return None
    i = i[xs[i] < xs[i + 1]]
    if i.size == 0:
        return None
    wl, pl = cw[i], cp[i]
    wr, pr = cw[-1] - wl, cp[-1] - pl
    score = 2.0 * (pl * (wl - pl) / wl + pr * (wr - pr) / wr)
    best = int(np.argmin(score))
    cut = i[best]
    thr = 0.5 * (xs[cut] + xs[cut + 1])
    if thr >= xs[cut + 1]:
        thr = xs[cut]
    return float(score[best]), float(thr)


class DecisionTree:
    """Binary CART classifier storing P(1) at each leaf.

    ``fit`` accepts optional per-row weights; forests pass bootstrap counts
    there instead of duplicating rows.
    """

    def __init__(self, max_depth=None, min_samples_leaf: int = 1, max_features=None):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features

    def fit(self, X, y, rng=None, sample_weight=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        w = np.ones(X.shape[0]) if sample_weight is None else np.asarray(sample_weight, float)
        keep = w > 0
        X, y, w = X[keep], y[keep], w[keep]
        n, p = X.shape
        n_try = _resolve_max_features(self.max_features, p)
        if rng is None and n_try < p:
            rng = make_rng(0)
        max_depth = np.inf if self.max_depth is None else self.max_depth
        min_leaf = self.min_samples_leaf

        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(rows):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            ww = w[rows]
            value.append(float((ww * y[rows]).sum() / ww.sum()))
            return len(feature) - 1

        stack = [(new_node(np.arange(n)), np.arange(n), 0)]
        while stack:
            node, rows, depth = stack.pop()
            frac = value[node]
            if depth >= max_depth or rows.size < 2 * min_leaf or frac in (0.0, 1.0):
                continue
            if n_try < p:
                candidates = rng.permutation(p)
            else:
                candidates = np.arange(p)
            Xn = X[rows]
            # draw candidates until n_try non-constant features were examined
            found = []
            for f in candidates:
                col = Xn[:, f]
                if col.min() == col.max():
                    continue
                found.append(int(f))
                if len(found) == n_try:
                    break
            best = None
            for f in sorted(found):
                res = _best_split(Xn[:, f], y[rows], w[rows], min_leaf)
                if res is not None and (best is None or res[0] < best[0]):
                    best = (res[0], f, res[1])
            if best is None:
                continue
            _, f, thr = best
            go_left = Xn[:, f] <= thr
            lrows, rrows = rows[go_left], rows[~go_left]
            feature[node], threshold[node] = f, thr
            left[node] = new_node(lrows)
            right[node] = new_node(rrows)
            stack.append((right[node], rrows, depth + 1))
            stack.append((left[node], lrows, depth + 1))

        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold, dtype=float)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.array(value, dtype=float)
        return self

    @property
    def n_nodes(self) -> int:
        return self.feature_.shape[0]

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature_[node] != LEAF)
        while active.size:
            nd = node[active]
            f = self.feature_[nd]
            go_left = X[active, f] <= self.threshold_[nd]
            node[active] = np.where(go_left, self.left_[nd], self.right_[nd])
            active = active[self.feature_[node[active]] != LEAF]
        return node

    def predict_proba(self, X) -> np.ndarray:
        return self.value_[self.apply(X)]

    def get_state(self) -> dict:
        return {
            "feature": self.feature_,
            "threshold": self.threshold_,
            "left": self.left_,
            "right": self.right_,
            "value": self.value_,
        }

    def set_state(self, state: dict):
        self.feature_ = state["feature"]
        self.threshold_ = state["threshold"]
        self.left_ = state["left"]
        self.right_ = state["right"]
        self.value_ = state["value"]
        return self


class RandomForest:
    """Bagged CART trees with per-node feature subsampling.

    Each tree sees a bootstrap sample (as integer weights) and gets its own
    seed drawn from the forest's generator. P(1) is the mean over trees of
    the positive fraction in the leaf reached.
    """

    def __init__(
        self,
        n_estimators: int = 100,
        max_depth=None,
        min_samples_leaf: int = 1,
        max_features="sqrt",
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features

    def _new_tree(self) -> DecisionTree:
        return DecisionTree(self.max_depth, self.min_samples_leaf, self.max_features)

    def _tree_weights(self, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = y.shape[0]
        return np.bincount(rng.integers(0, n, size=n), minlength=n).astype(float)

    def fit(self, X, y, rng=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        rng = make_rng(0) if rng is None else rng
        seeds = rng.integers(0, 2**32, size=self.n_estimators, dtype=np.uint64)
        self.trees_ = []
        self.tree_class_counts_ = np.zeros((self.n_estimators, 2), dtype=np.int64)
        for t, seed in enumerate(seeds):
            tree_rng = make_rng(int(seed))
            weights = self._tree_weights(y, tree_rng)
            self.tree_class_counts_[t] = [weights[y == 0].sum(), weights[y == 1].sum()]
            tree = self._new_tree().fit(X, y, rng=tree_rng, sample_weight=weights)
            self.trees_.append(tree)
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        total = np.zeros(X.shape[0])
        for tree in self.trees_:
            total += tree.predict_proba(X)
        return total / len(self.trees_)

    def get_state(self) -> dict:
        return {
            "trees": [t.get_state() for t in self.trees_],
            "tree_class_counts": self.tree_class_counts_,
        }

    def set_state(self, state: dict):
        self.trees_ = [DecisionTree().set_state(s) for s in state["trees"]]
        self.tree_class_counts_ = state["tree_class_counts"]
        return self


class BalancedRandomForest(RandomForest):
    """Random forest whose per-tree bootstrap is class balanced.

    Each tree draws both classes with replacement to a common size: the
    minority count for ``"under"``, the majority count for ``"over"``.
    """

    def __init__(
        self,
        n_estimators: int = 100,
        max_depth=None,
        min_samples_leaf: int = 1,
        max_features="sqrt",
        sampling_strategy: str = "under",
    ):
        super().__init__(n_estimators, max_depth, min_samples_leaf, max_features)
        self.sampling_strategy = sampling_strategy

    def _tree_weights(self, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        pos = np.flatnonzero(y == 1)
        neg = np.flatnonzero(y == 0)
        if pos.size == 0 or neg.size == 0:
            return super()._tree_weights(y, rng)
        sizes = (pos.size, neg.size)
        size = min(sizes) if self.sampling_strategy == "under" else max(sizes)
        drawn = np.concatenate(
            [rng.choice(neg, size=size, replace=True), rng.choice(pos, size=size, replace=True)]
        )
        return np.bincount(drawn, minlength=y.shape[0]).astype(float)
