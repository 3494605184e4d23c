"""L2-regularised logistic regression trained by gradient descent."""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import expit

log = logging.getLogger(__name__)


def objective(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean logistic loss plus ``l2 / (2 n) * ||w||^2`` and its gradient.

    ``params`` is ``[w..., b]``; the intercept is not penalised. The
    minimiser equals that of the summed loss with penalty ``l2 / 2 * ||w||^2``.
    """
    n = X.shape[0]
    w, b = params[:-1], params[-1]
    s = 2.0 * y - 1.0
    margin = s * (X @ w + b)
    loss = np.logaddexp(0.0, -margin).mean() + 0.5 * l2 / n * (w @ w)
    coef = -s * expit(-margin) / n
    grad = np.empty_like(params)
    grad[:-1] = X.T @ coef + l2 / n * w
    grad[-1] = coef.sum()
    return loss, grad


class LogisticRegression:
    """Binary logistic regression.

    Gradient descent where each step starts from a Barzilai-Borwein length
    and is shortened by backtracking until the Armijo condition holds.
    Stops when the gradient's max-norm drops below ``tol`` or after
    ``max_iter`` steps.
    """

    def __init__(self, l2: float = 1.0, max_iter: int = 5000, tol: float = 1e-6):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y, rng=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        params = np.zeros(X.shape[1] + 1)
        f, g = objective(params, X, y, self.l2)
        step = 1.0
        prev_params = prev_g = None
        self.n_iter_ = 0
        for it in range(self.max_iter):
            if np.abs(g).max() < self.tol:
                break
            if prev_g is not None:
                s_vec = params - prev_params
                y_vec = g - prev_g
                sy = s_vec @ y_vec
                if sy > 0:
                    step = (s_vec @ s_vec) / sy
            gg = g @ g
            while True:
                trial = params - step * g
                f_new, g_new = objective(trial, X, y, self.l2)
                if f_new <= f - 1e-4 * step * gg or step < 1e-16:
                    break
                step *= 0.5
            prev_params, prev_g = params, g
            params, f, g = trial, f_new, g_new
            self.n_iter_ = it + 1
        else:
            log.warning("logistic regression stopped at max_iter=%d", self.max_iter)
        self.coef_ = params[:-1].copy()
        self.intercept_ = float(params[-1])
        self.grad_norm_ = float(np.abs(g).max())
        return self

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def get_state(self) -> dict:
        return {"coef": self.coef_, "intercept": self.intercept_}

    def set_state(self, state: dict):
        self.coef_ = state["coef"]
        self.intercept_ = state["intercept"]
        return self
