"""Soft-margin RBF support vector machine solved by SMO.

The dual ``min 1/2 a'Qa - e'a`` s.t. ``0 <= a <= C``, ``y'a = 0`` with
``Q_ij = y_i y_j K(x_i, x_j)`` is solved by pairwise updates using
second-order working-set selection (Fan, Chen & Lin 2005). Probabilities
come from a Platt sigmoid fitted on the training decision values.
"""

from __future__ import annotations

import logging
from collections import OrderedDict

import numpy as np

log = logging.getLogger(__name__)

TAU = 1e-12
FULL_KERNEL_LIMIT = 6000


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    d2 = (A**2).sum(axis=1)[:, None] + (B**2).sum(axis=1)[None, :] - 2.0 * A @ B.T
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


class _KernelRows:
    """Kernel rows on demand, with the full matrix for small problems."""

    def __init__(self, X: np.ndarray, gamma: float, cache_rows: int = 512):
        self.X = X
        self.gamma = gamma
        self.sq = (X**2).sum(axis=1)
        self.full = rbf_kernel(X, X, gamma) if X.shape[0] <= FULL_KERNEL_LIMIT else None
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self.cache_rows = cache_rows

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        r = self.cache.get(i)
        if r is None:
            d2 = self.sq + self.sq[i] - 2.0 * self.X @ self.X[i]
            r = np.exp(-self.gamma * np.maximum(d2, 0.0))
            self.cache[i] = r
            if len(self.cache) > self.cache_rows:
                self.cache.popitem(last=False)
        else:
            self.cache.move_to_end(i)
        return r


def smo(K: _KernelRows, y: np.ndarray, C: float, eps: float = 1e-3, max_iter: int = 200_000):
    """Dual coefficients ``alpha`` and offset ``rho`` (decision = sum - rho)."""
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    diag = np.ones(n)  # K(x, x) = 1 for the RBF kernel
    it = 0
    while it < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        score = -y * G
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, score, -np.inf)))
        m = score[i]
        M = np.min(np.where(low, score, np.inf))
        if m - M < eps:
            break
        Ki = K.row(i)
        b = m - score
        cand = low & (b > 0)
        a = diag[i] + diag - 2.0 * Ki
        a = np.where(a > 0, a, TAU)
        gain = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(gain))
        Kj = K.row(j)

        old_i, old_j = alpha[i], alpha[j]
        yi, yj = y[i], y[j]
        quad = diag[i] + diag[j] - 2.0 * Ki[j]
        if quad <= 0:
            quad = TAU
        if yi != yj:
            delta = (-G[i] - G[j]) / quad
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        # Q rows are y_i y_t K_it
        G += y * (yi * (ai - old_i) * Ki + yj * (aj - old_j) * Kj)
        it += 1
    else:
        log.warning("SMO stopped at max_iter=%d before reaching eps=%g", max_iter, eps)

    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub, lb = np.inf, -np.inf
        at_upper = alpha >= C
        at_lower = alpha <= 0
        for mask, is_ub_pos in ((at_upper, False), (at_lower, True)):
            # lower-bound alphas bound rho from above for y=+1 and below for y=-1
            pos, neg = mask & (y > 0), mask & (y < 0)
            if is_ub_pos:
                if pos.any():
                    ub = min(ub, yG[pos].min())
                if neg.any():
                    lb = max(lb, yG[neg].max())
            else:
                if pos.any():
                    lb = max(lb, yG[pos].max())
                if neg.any():
                    ub = min(ub, yG[neg].min())
        if np.isinf(ub) and np.isinf(lb):
            rho = 0.0
        elif np.isinf(ub):
            rho = lb
        elif np.isinf(lb):
            rho = ub
        else:
            rho = 0.5 * (ub + lb)
    return alpha, rho, it


def platt_fit(f: np.ndarray, y01: np.ndarray, max_iter: int = 100):
    """Sigmoid ``P(1|f) = 1 / (1 + exp(A f + B))`` by Newton's method.

    Follows Lin, Lin & Weng (2007), including Platt's smoothed targets.
    """
    n_pos = float((y01 == 1).sum())
    n_neg = float(y01.shape[0] - n_pos)
    hi, lo = (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)
    t = np.where(y01 == 1, hi, lo)
    A, B = 0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))
    sigma, min_step, eps = 1e-12, 1e-10, 1e-5

    def value(A, B):
        fApB = f * A + B
        return np.sum(np.where(fApB >= 0, t * fApB + np.log1p(np.exp(-np.abs(fApB))),
                               (t - 1.0) * fApB + np.log1p(np.exp(-np.abs(fApB)))))

    fval = value(A, B)
    for _ in range(max_iter):
        fApB = f * A + B
        e = np.exp(-np.abs(fApB))
        p = np.where(fApB >= 0, e / (1.0 + e), 1.0 / (1.0 + e))
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + (f * f * d2).sum()
        h22 = sigma + d2.sum()
        h21 = (f * d2).sum()
        d1 = t - p
        g1 = (f * d1).sum()
        g2 = d1.sum()
        if abs(g1) < eps and abs(g2) < eps:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            newA, newB = A + step * dA, B + step * dB
            newf = value(newA, newB)
            if newf < fval + 1e-4 * step * gd:
                A, B, fval = newA, newB, newf
                break
            step /= 2.0
        else:
            break
    return float(A), float(B)


class SVM:
    """RBF-kernel C-SVM with Platt-calibrated probabilities.

    ``gamma="auto"`` means ``1 / n_features``.
    """

    def __init__(self, C: float = 1.0, gamma="auto", tol: float = 1e-3, max_iter: int = 200_000):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y, rng=None):
        X = np.asarray(X, dtype=float)
        y01 = np.asarray(y)
        s = np.where(y01 == 1, 1.0, -1.0)
        self.gamma_ = 1.0 / X.shape[1] if self.gamma == "auto" else float(self.gamma)
        K = _KernelRows(X, self.gamma_)
        alpha, rho, self.n_iter_ = smo(K, s, self.C, self.tol, self.max_iter)
        self.alpha_full_ = alpha
        self.rho_ = rho
        sv = alpha > 0
        self.support_vectors_ = X[sv]
        self.dual_coef_ = alpha[sv] * s[sv]
        if K.full is not None:
            train_dec = K.full[:, sv] @ self.dual_coef_ - rho
        else:
            train_dec = self.decision_function(X)
        self.platt_ = platt_fit(train_dec, y01)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.support_vectors_.shape[0] == 0:
            return np.full(X.shape[0], -self.rho_)
        out = np.empty(X.shape[0])
        for lo in range(0, X.shape[0], 2048):
            Kx = rbf_kernel(X[lo:lo + 2048], self.support_vectors_, self.gamma_)
            out[lo:lo + 2048] = Kx @ self.dual_coef_ - self.rho_
        return out

    def predict_proba(self, X) -> np.ndarray:
        A, B = self.platt_
        z = A * self.decision_function(X) + B
        # 1 / (1 + exp(z)) without overflow
        return np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))

    def get_state(self) -> dict:
        return {
            "gamma": self.gamma_,
            "rho": self.rho_,
            "support_vectors": self.support_vectors_,
            "dual_coef": self.dual_coef_,
            "platt": np.array(self.platt_),
        }

    def set_state(self, state: dict):
        self.gamma_ = state["gamma"]
        self.rho_ = state["rho"]
        self.support_vectors_ = state["support_vectors"]
        self.dual_coef_ = state["dual_coef"]
        self.platt_ = tuple(float(v) for v in state["platt"])
        return self
