from __future__ import annotations

import numpy as np


class KNearestNeighbors:
    """Euclidean k-NN; P(1) is the share of positives among the k nearest.

    Equal distances are resolved in favour of the earlier training row.
    """

    def __init__(self, k: int = 5, chunk: int = 256):
        self.k = k
        self.chunk = chunk

    def fit(self, X, y, rng=None):
        self.X_ = np.asarray(X, dtype=float).copy()
        self.y_ = np.asarray(y, dtype=float).copy()
        return self

    def kneighbors(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        k = min(self.k, self.X_.shape[0])
        out = np.empty((X.shape[0], k), dtype=np.int64)
        for lo in range(0, X.shape[0], self.chunk):
            block = X[lo:lo + self.chunk]
            d2 = ((block[:, None, :] - self.X_[None, :, :]) ** 2).sum(axis=2)
            out[lo:lo + self.chunk] = np.argsort(d2, axis=1, kind="stable")[:, :k]
        return out

    def predict_proba(self, X) -> np.ndarray:
        return self.y_[self.kneighbors(X)].mean(axis=1)

    def get_state(self) -> dict:
        return {"X": self.X_, "y": self.y_}

    def set_state(self, state: dict):
        self.X_ = state["X"]
        self.y_ = state["y"]
        return self
