"""Conditional densities and posterior-mean estimates for the two-user MAC.

All density arithmetic is done in the log domain; exponents grow like
snr * ||H P x||^2 and overflow quickly otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .model import MacModel


class InputError(ValueError):
    """Non-finite or wrongly shaped channel output."""


@dataclass(frozen=True)
class PosteriorPair:
    xhat1: np.ndarray
    xhat2: np.ndarray
    py: float


def noiseless_points(model: MacModel, snr: float | None = None):
    """sqrt(snr) H_i P_i x for every point of each constellation, shapes (K_i, n_r)."""
    s = math.sqrt(model.snr if snr is None else snr)
    return s * (model.c1.points @ model.A.T), s * (model.c2.points @ model.B.T)


class JointPosterior:
    """Posterior quantities for a batch of outputs `y` of shape (N, n_r).

    `loglik[n, k1, k2]` is log p(y_n | x1 = point k1, x2 = point k2).
    """

    def __init__(self, model: MacModel, y: np.ndarray):
        y = np.asarray(y, dtype=complex)
        if y.ndim == 1:
            y = y[None, :]
        if y.shape[-1] != model.n_r:
            raise InputError(f"y has dimension {y.shape[-1]}, model n_r is {model.n_r}")
        if not np.all(np.isfinite(y)):
            raise InputError("y must be finite")
        self.model = model
        self.y = y
        self.s1, self.s2 = noiseless_points(model)

    @cached_property
    def loglik(self) -> np.ndarray:
        r = self.y[:, None, None, :] - self.s1[None, :, None, :] - self.s2[None, None, :, :]
        sq = np.einsum("nabr,nabr->nab", r.real, r.real) + np.einsum("nabr,nabr->nab", r.imag, r.imag)
        return -self.model.n_r * math.log(math.pi) - sq

    @cached_property
    def _logprior(self) -> np.ndarray:
        return np.log(self.model.c1.priors)[:, None] + np.log(self.model.c2.priors)[None, :]

    @cached_property
    def log_joint(self) -> np.ndarray:
        return self.loglik + self._logprior[None]

    @cached_property
    def logpy(self) -> np.ndarray:
        """log p_y(y), shape (N,)."""
        return logsumexp(self.log_joint, axis=(1, 2))

    @cached_property
    def weights(self) -> np.ndarray:
        """Posterior probabilities of each joint input, shape (N, K1, K2)."""
        return np.exp(self.log_joint - self.logpy[:, None, None])

    @cached_property
    def xhat1(self) -> np.ndarray:
        return self.weights.sum(axis=2) @ self.model.c1.points

    @cached_property
    def xhat2(self) -> np.ndarray:
        return self.weights.sum(axis=1) @ self.model.c2.points

    @cached_property
    def log_py_given_x1(self) -> np.ndarray:
        """log p(y | x1 = k1), user 2 marginalised exactly; shape (N, K1)."""
        return logsumexp(self.loglik + np.log(self.model.c2.priors)[None, None, :], axis=2)

    @cached_property
    def log_py_given_x2(self) -> np.ndarray:
        """log p(y | x2 = k2), user 1 marginalised exactly; shape (N, K2)."""
        return logsumexp(self.loglik + np.log(self.model.c1.priors)[None, :, None], axis=1)


def _check_y(model: MacModel, y) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    if y.shape != (model.n_r,):
        raise InputError(f"y must have shape ({model.n_r},), got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InputError("y must be finite")
    return y


def log_likelihood(model: MacModel, y, i1: int, i2: int) -> float:
    y = _check_y(model, y)
    s1, s2 = noiseless_points(model)
    r = y - s1[i1] - s2[i2]
    return float(-model.n_r * math.log(math.pi) - np.vdot(r, r).real)


def likelihood(model: MacModel, y, i1: int, i2: int) -> float:
    """pi^(-n_r) exp(-||y - sqrt(snr) H1 P1 x1 - sqrt(snr) H2 P2 x2||^2)."""
    return math.exp(log_likelihood(model, y, i1, i2))


def log_output_density(model: MacModel, y) -> float:
    return float(JointPosterior(model, _check_y(model, y)).logpy[0])


def output_density(model: MacModel, y) -> float:
    """Prior-weighted sum of likelihoods over the joint alphabet."""
    return math.exp(log_output_density(model, y))


def posterior_means(model: MacModel, y) -> PosteriorPair:
    post = JointPosterior(model, _check_y(model, y))
    return PosteriorPair(post.xhat1[0], post.xhat2[0], float(np.exp(post.logpy[0])))


def sic_posterior_mean(points: np.ndarray, priors: np.ndarray, G: np.ndarray,
                       residual: np.ndarray, snr: float) -> np.ndarray:
    """E[x | r] for the single-user channel r = sqrt(snr) G x + n; `residual` is (N, n_r)."""
    s = math.sqrt(snr) * (points @ G.T)
    d = residual[:, None, :] - s[None]
    logw = np.log(priors)[None] - np.sum(np.abs(d) ** 2, axis=2)
    w = np.exp(logw - logsumexp(logw, axis=1, keepdims=True))
    return w @ points


def posterior_mean_sic_user2(model: MacModel, y, i1: int) -> np.ndarray:
    """E[x2 | y - sqrt(snr) H1 P1 x1] after exact cancellation of the known x1."""
    y = _check_y(model, y)
    s1, _ = noiseless_points(model)
    r = (y - s1[i1])[None]
    return sic_posterior_mean(model.c2.points, model.c2.priors, model.B, r, model.snr)[0]
