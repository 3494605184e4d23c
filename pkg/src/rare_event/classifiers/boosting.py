"""Two-class SAMME boosting over decision stumps."""

from __future__ import annotations

import numpy as np
from scipy.special import expit


def fit_stump(X_sorted_idx: np.ndarray, X: np.ndarray, s: np.ndarray, w: np.ndarray):
    """Weighted-error-minimising stump.

    ``s`` holds labels in {-1, +1}; ``X_sorted_idx`` is ``argsort(X, axis=0)``.
    Returns ``(error, feature, threshold, left_sign, right_sign)`` with the error
    as a fraction of the total weight. Ties go to the lowest feature, then the
    lowest threshold.
    """
    n, p = X.shape
    total = w.sum()
    pos_total = w[s > 0].sum()
    # a constant prediction is the candidate to beat
    sign = 1.0 if pos_total > total - pos_total else -1.0
    best = (min(pos_total, total - pos_total) / total, 0, np.inf, sign, sign)
    ws = w[X_sorted_idx]
    wp = (w * (s > 0))[X_sorted_idx]
    cw = np.cumsum(ws, axis=0)[:-1]
    cp = np.cumsum(wp, axis=0)[:-1]
    xs = np.take_along_axis(X, X_sorted_idx, axis=0)
    valid = xs[:-1] < xs[1:]
    wr, pr = total - cw, pos_total - cp
    err_left = np.minimum(cp, cw - cp)
    err_right = np.minimum(pr, wr - pr)
    err = np.where(valid, err_left + err_right, np.inf) / total
    # argmin over the transposed array visits feature-major, threshold-minor
    flat = int(np.argmin(err.T))
    f, i = divmod(flat, n - 1) if n > 1 else (0, 0)
    if n > 1 and err[i, f] < best[0]:
        thr = 0.5 * (xs[i, f] + xs[i + 1, f])
        if thr >= xs[i + 1, f]:
            thr = xs[i, f]
        left_sign = 1.0 if cp[i, f] > cw[i, f] - cp[i, f] else -1.0
        right_sign = 1.0 if pr[i, f] > wr[i, f] - pr[i, f] else -1.0
        best = (float(err[i, f]), int(f), float(thr), left_sign, right_sign)
    return best


class AdaBoost:
    """SAMME with depth-one stumps.

    A stump whose weighted error reaches 0.5 is discarded and boosting stops;
    a perfect stump is kept with weight ``learning_rate`` and boosting stops.
    P(1) is ``sigmoid(F / sum(alpha))`` where ``F`` is the alpha-weighted vote
    in {-1, +1}.
    """

    def __init__(self, n_estimators: int = 50, learning_rate: float = 1.0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate

    def fit(self, X, y, rng=None):
        X = np.asarray(X, dtype=float)
        s = np.where(np.asarray(y) == 1, 1.0, -1.0)
        n = X.shape[0]
        order = np.argsort(X, axis=0, kind="stable")
        w = np.full(n, 1.0 / n)
        stumps, alphas, errors = [], [], []
        for _ in range(self.n_estimators):
            err, f, thr, ls, rs = fit_stump(order, X, s, w)
            if err >= 0.5:
                break
            if err <= 0.0:
                stumps.append((f, thr, ls, rs))
                alphas.append(self.learning_rate)
                errors.append(err)
                break
            alpha = self.learning_rate * np.log((1.0 - err) / err)
            pred = np.where(X[:, f] <= thr, ls, rs)
            miss = pred != s
            stumps.append((f, thr, ls, rs))
            alphas.append(alpha)
            errors.append(err)
            w = w * np.exp(alpha * miss)
            w /= w.sum()
        if not stumps:
            # even the first stump is no better than chance: abstain everywhere
            stumps.append((0, np.inf, 0.0, 0.0))
            alphas.append(1.0)
            errors.append(0.5)
        self.stumps_ = np.array(stumps, dtype=float).reshape(-1, 4)
        self.alphas_ = np.array(alphas, dtype=float)
        self.errors_ = np.array(errors, dtype=float)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        F = np.zeros(X.shape[0])
        for (f, thr, ls, rs), a in zip(self.stumps_, self.alphas_):
            F += a * np.where(X[:, int(f)] <= thr, ls, rs)
        return F / self.alphas_.sum()

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def get_state(self) -> dict:
        return {"stumps": self.stumps_, "alphas": self.alphas_, "errors": self.errors_}

    def set_state(self, state: dict):
        self.stumps_ = state["stumps"]
        self.alphas_ = state["alphas"]
        self.errors_ = state["errors"]
        return self
