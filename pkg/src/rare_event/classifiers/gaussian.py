"""Gaussian generative classifiers: naive Bayes and quadratic discriminant."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

LOG_2PI = np.log(2.0 * np.pi)


def _posterior_from_joint(jll: np.ndarray) -> np.ndarray:
    """P(class 1) from per-class joint log-likelihoods of shape (n, 2).

    The logistic of the log-odds equals ``exp(jll_1 - logsumexp(jll))`` but
    returns exactly 0.5 for equal likelihoods.
    """
    with np.errstate(invalid="ignore"):
        log_odds = jll[:, 1] - jll[:, 0]
    # both classes impossible (-inf - -inf): fall back to even odds
    return expit(np.where(np.isnan(log_odds), 0.0, log_odds))


class GaussianNB:
    """Per-class independent Gaussians with variance smoothing.

    Every class variance is inflated by ``var_smoothing`` times the largest
    per-feature variance of the whole training set. A class absent from the
    training data gets zero prior and never wins.
    """

    def __init__(self, var_smoothing: float = 1e-9):
        self.var_smoothing = var_smoothing

    def fit(self, X, y, rng=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        p = X.shape[1]
        max_var = float(np.var(X, axis=0).max())
        self.epsilon_ = self.var_smoothing * max_var if max_var > 0 else self.var_smoothing
        self.means_ = np.zeros((2, p))
        self.vars_ = np.ones((2, p))
        self.class_log_prior_ = np.full(2, -np.inf)
        for c in (0, 1):
            Xc = X[y == c]
            if Xc.shape[0] == 0:
                continue
            self.means_[c] = Xc.mean(axis=0)
            self.vars_[c] = Xc.var(axis=0) + self.epsilon_
            self.class_log_prior_[c] = np.log(Xc.shape[0] / X.shape[0])
        return self

    @classmethod
    def from_parameters(cls, means, variances, priors) -> "GaussianNB":
        """Model with fixed class means, variances and priors (no fitting)."""
        model = cls()
        model.means_ = np.asarray(means, dtype=float)
        model.vars_ = np.asarray(variances, dtype=float)
        with np.errstate(divide="ignore"):
            model.class_log_prior_ = np.log(np.asarray(priors, dtype=float))
        model.epsilon_ = 0.0
        return model

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty((X.shape[0], 2))
        for c in (0, 1):
            norm = -0.5 * np.sum(LOG_2PI + np.log(self.vars_[c]))
            sq = ((X - self.means_[c]) ** 2 / self.vars_[c]).sum(axis=1)
            out[:, c] = norm - 0.5 * sq + self.class_log_prior_[c]
        return out

    def predict_proba(self, X) -> np.ndarray:
        return _posterior_from_joint(self.joint_log_likelihood(X))

    def get_state(self) -> dict:
        return {
            "means": self.means_,
            "vars": self.vars_,
            "class_log_prior": self.class_log_prior_,
            "epsilon": self.epsilon_,
        }

    def set_state(self, state: dict):
        self.means_ = state["means"]
        self.vars_ = state["vars"]
        self.class_log_prior_ = state["class_log_prior"]
        self.epsilon_ = state["epsilon"]
        return self


class QDA:
    """Per-class full-covariance Gaussians, covariance ridged by ``reg * I``."""

    def __init__(self, reg: float = 1e-9):
        self.reg = reg

    def fit(self, X, y, rng=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        n, p = X.shape
        self.means_ = np.zeros((2, p))
        self.rotations_ = np.zeros((2, p, p))
        self.scalings_ = np.ones((2, p))
        self.class_log_prior_ = np.full(2, -np.inf)
        for c in (0, 1):
            Xc = X[y == c]
            nc = Xc.shape[0]
            if nc == 0:
                continue
            mu = Xc.mean(axis=0)
            centered = Xc - mu
            cov = centered.T @ centered / max(nc - 1, 1)
            cov[np.diag_indices(p)] += self.reg
            w, v = np.linalg.eigh(cov)
            # round-off can leave tiny negative eigenvalues on rank-deficient data
            w = np.maximum(w, self.reg if self.reg > 0 else np.finfo(float).tiny)
            self.means_[c] = mu
            self.rotations_[c] = v
            self.scalings_[c] = w
            self.class_log_prior_[c] = np.log(nc / n)
        return self

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        p = X.shape[1]
        out = np.empty((X.shape[0], 2))
        for c in (0, 1):
            z = (X - self.means_[c]) @ self.rotations_[c]
            maha = (z**2 / self.scalings_[c]).sum(axis=1)
            logdet = np.log(self.scalings_[c]).sum()
            out[:, c] = -0.5 * (maha + logdet + p * LOG_2PI) + self.class_log_prior_[c]
        return out

    def predict_proba(self, X) -> np.ndarray:
        return _posterior_from_joint(self.joint_log_likelihood(X))

    def get_state(self) -> dict:
        return {
            "means": self.means_,
            "rotations": self.rotations_,
            "scalings": self.scalings_,
            "class_log_prior": self.class_log_prior_,
        }

    def set_state(self, state: dict):
        self.means_ = state["means"]
        self.rotations_ = state["rotations"]
        self.scalings_ = state["scalings"]
        self.class_log_prior_ = state["class_log_prior"]
        return self
