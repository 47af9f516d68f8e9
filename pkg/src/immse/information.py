"""Joint, non-conditional and conditional mutual information of the two-user MAC.

Values are in nats; `InfoReport` also carries bits. Inner marginalisations over
the other user's alphabet are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .expectation import Estimate, expect_model, outputs
from .model import Draws, ExpectationConfig, MacModel, UserLink, null_constellation
from .posterior import JointPosterior, noiseless_points
from .reporting import LN2


def _single_user_logratio(points_s: np.ndarray, priors: np.ndarray, r: np.ndarray,
                          idx: np.ndarray) -> np.ndarray:
    """log p(r | x = idx) - log p(r) for r = s_x + CN(0, I); points_s is (K, n_r)."""
    d = r[:, None, :] - points_s[None]
    ll = -np.sum(np.abs(d) ** 2, axis=2)
    return ll[np.arange(len(r)), idx] - logsumexp(ll + np.log(priors)[None], axis=1)


def info_terms(model: MacModel, d: Draws, snr: float | None = None,
               cond: str = "cancel") -> dict[str, np.ndarray]:
    """Per-sample log-ratios whose expectations are the five MI quantities."""
    m = model if snr is None else model.with_snr(snr)
    y = outputs(m, d)
    post = JointPosterior(m, y)
    n = np.arange(len(d))
    ll = post.loglik[n, d.i1, d.i2]
    lx1 = post.log_py_given_x1[n, d.i1]
    lx2 = post.log_py_given_x2[n, d.i2]
    out = {
        "joint": ll - post.logpy,
        "i1_nc": lx1 - post.logpy,
        "i2_nc": lx2 - post.logpy,
    }
    if cond == "ratio":
        out["i2_cond"] = ll - lx1
        out["i1_cond"] = ll - lx2
    elif cond == "cancel":
        s1, s2 = noiseless_points(m)
        out["i2_cond"] = _single_user_logratio(s2, m.c2.priors, y - s1[d.i1], d.i2)
        out["i1_cond"] = _single_user_logratio(s1, m.c1.priors, y - s2[d.i2], d.i1)
    else:
        raise ValueError(f"cond must be 'cancel' or 'ratio', got {cond!r}")
    return out


def _one(model: MacModel, cfg: ExpectationConfig, key: str, **kw) -> Estimate:
    return expect_model(model, cfg, lambda d: {key: info_terms(model, d, **kw)[key]})[key]


def joint_info(model: MacModel, cfg: ExpectationConfig) -> Estimate:
    """I(x1, x2; y) = E[log p(y | x1, x2) - log p_y(y)]."""
    return _one(model, cfg, "joint")


def nc_info_user1(model: MacModel, cfg: ExpectationConfig) -> Estimate:
    """I(x1; y) with user 2 treated as noise."""
    return _one(model, cfg, "i1_nc")


def nc_info_user2(model: MacModel, cfg: ExpectationConfig) -> Estimate:
    return _one(model, cfg, "i2_nc")


def cond_info_user2(model: MacModel, cfg: ExpectationConfig, method: str = "cancel") -> Estimate:
    """I(x2; y | x1): user 1 known and subtracted before estimating x2."""
    return _one(model, cfg, "i2_cond", cond=method)


def cond_info_user1(model: MacModel, cfg: ExpectationConfig, method: str = "cancel") -> Estimate:
    return _one(model, cfg, "i1_cond", cond=method)


def gaussian_interference_model(model: MacModel, user: int) -> MacModel:
    """Whitened single-user surrogate for decoding `user` with the other user as Gaussian noise.

    The interferer is replaced by Gaussian noise of the same covariance, so the
    decoded user sees y = sqrt(snr) H P x + w with w ~ CN(0, K),
    K = I + snr (HP)_other (HP)_other^H. Whitening by the Cholesky factor of K
    gives an ordinary single-user channel with matrix L^{-1} H P. The user keeps
    its slot (1 or 2) so draws line up with the original model.
    """
    other = 2 if user == 1 else 1
    C = model.link(other).H @ model.link(other).P
    K = np.eye(model.n_r) + model.snr * (C @ C.conj().T)
    L = np.linalg.cholesky(K)
    G = np.linalg.solve(L, model.link(user).H @ model.link(user).P)
    n_t = model.link(user).n_t
    n_t_other = model.link(other).n_t
    own = UserLink(G, np.eye(n_t))
    silent = UserLink(np.zeros((model.n_r, n_t_other)), np.eye(n_t_other))
    cu, co = model.constellation(user), null_constellation(n_t_other)
    if user == 1:
        return MacModel(own, silent, cu, co, model.snr, model.n_r)
    return MacModel(silent, own, co, cu, model.snr, model.n_r)


def nc_info_gaussian_interference(model: MacModel, user: int, cfg: ExpectationConfig) -> Estimate:
    """I(x_user; y) when the other user's signal is modelled as Gaussian interference."""
    return joint_info(gaussian_interference_model(model, user), cfg)


@dataclass(frozen=True)
class InfoReport:
    joint: float
    i1_nc: float
    i2_nc: float
    i1_cond: float
    i2_cond: float
    stderr: dict = field(default_factory=dict)
    gaussian_approx_i2_nc: float | None = None
    chain_residual_12: float = 0.0
    chain_residual_21: float = 0.0

    @property
    def bits(self) -> dict:
        return {k: getattr(self, k) / LN2 for k in ("joint", "i1_nc", "i2_nc", "i1_cond", "i2_cond")}

    def combined_stderr(self, *keys: str) -> float:
        return math.sqrt(sum(self.stderr[k] ** 2 for k in keys))

    def to_dict(self) -> dict:
        from .reporting import jsonable

        d = jsonable(self)
        d["bits"] = self.bits
        return d


def info_report(model: MacModel, cfg: ExpectationConfig, gaussian_approx: bool = True) -> InfoReport:
    """All five MI quantities from one shared stream of draws."""
    est = expect_model(model, cfg, lambda d: info_terms(model, d))
    v = {k: float(e.value) for k, e in est.items()}
    se = {k: float(e.stderr) for k, e in est.items()}
    ga = float(nc_info_gaussian_interference(model, 2, cfg).value) if gaussian_approx else None
    return InfoReport(
        joint=v["joint"], i1_nc=v["i1_nc"], i2_nc=v["i2_nc"],
        i1_cond=v["i1_cond"], i2_cond=v["i2_cond"], stderr=se,
        gaussian_approx_i2_nc=ga,
        chain_residual_12=v["joint"] - (v["i1_nc"] + v["i2_cond"]),
        chain_residual_21=v["joint"] - (v["i2_nc"] + v["i1_cond"]),
    )
