"""Analytic MI gradients for the two-user MAC and their finite-difference checks.

Gradients are Wirtinger derivatives with respect to the conjugated matrix
entries: for a real function I of a complex matrix Z, ``G = dI/dZ*`` so that
``dI/dRe Z = 2 Re G`` and ``dI/dIm Z = 2 Im G``. Under this convention the
single-user linear vector channel has ``grad_H I = snr H P E P^H``.

Finite differences reuse the same draws at every perturbed point (common random
numbers): outputs move with the parameters while inputs and noise stay fixed.
Analytic and finite-difference values are computed per sample, so the standard
error of their difference is estimated directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .expectation import expect_model
from .information import gaussian_interference_model, info_terms
from .mmse import mmse_terms
from .model import Draws, ExpectationConfig, MacModel, McConfig
from .posterior import JointPosterior, noiseless_points, sic_posterior_mean
from .expectation import outputs

FD_STEP = 1e-4
GRAD_REL_TOL = 2e-2
GRAD_STDERR_MULT = 5.0
IDENTITY_ABS_TOL = 5e-3
IDENTITY_STDERR_MULT = 5.0


@dataclass(frozen=True)
class GradientReport:
    grad: np.ndarray
    target: str
    fd_grad: np.ndarray | None = None
    max_abs_dev: float | None = None
    max_rel_dev: float | None = None
    dev_stderr: float | None = None
    tolerance: float | None = None
    passed: bool | None = None
    paper_grad: np.ndarray | None = None
    grad_stderr: np.ndarray | None = None

    def to_dict(self) -> dict:
        from .reporting import jsonable

        return jsonable(self)


@dataclass(frozen=True)
class IdentityReport:
    snr: float
    d_info_fd: float
    mmse_plus_psi: float
    residual: float
    stderr: float
    label: str = "joint"
    tolerance: float | None = None
    passed: bool | None = None
    scheme: str = "central"
    delta: float = 1e-3
    truncation_bound: float | None = None
    delta_too_large: bool = False
    alternatives: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        from .reporting import jsonable

        return jsonable(self)


def _other(user: int) -> int:
    if user not in (1, 2):
        raise ValueError(f"user must be 1 or 2, got {user!r}")
    return 2 if user == 1 else 1


def _outer(a, b):
    return a[:, :, None] * b.conj()[:, None, :]


def _fd_per_sample(model: MacModel, d: Draws, user: int, which: str,
                   f: Callable[[MacModel, Draws], np.ndarray], step: float) -> np.ndarray:
    """Per-sample central differences of f, combined into dI/dZ* for Z = H_user or P_user."""
    Z = np.array(getattr(model.link(user), which))
    out = np.empty((len(d),) + Z.shape, dtype=complex)
    for idx in np.ndindex(Z.shape):
        h = step * max(1.0, abs(Z[idx]))
        parts = []
        for delta in (h, 1j * h):
            zp, zm = Z.copy(), Z.copy()
            zp[idx] += delta
            zm[idx] -= delta
            fp = f(model.with_link(user, **{which: zp}, check_power=False), d)
            fm = f(model.with_link(user, **{which: zm}, check_power=False), d)
            parts.append((fp - fm) / (2 * h))
        out[(slice(None),) + idx] = 0.5 * (parts[0] + 1j * parts[1])
    return out


def _joint_values(m: MacModel, d: Draws) -> np.ndarray:
    return info_terms(m, d)["joint"]


def _silence(d: Draws, user: int) -> Draws:
    """Same draws with the other (now null) user's index pinned to 0."""
    zeros = np.zeros_like(d.i1)
    if user == 1:
        return replace(d, i2=zeros)
    return replace(d, i1=zeros)


def _surrogate_values(user: int):
    def f(m: MacModel, d: Draws) -> np.ndarray:
        return info_terms(gaussian_interference_model(m, user), _silence(d, user))["joint"]

    return f


def _joint_gradient_terms(model: MacModel, d: Draws, user: int) -> np.ndarray:
    """Per-sample (A_u e_u e_u^H - A_o xhat_o xhat_u^H): grad wrt A_u = H_u P_u, before snr."""
    post = JointPosterior(model, outputs(model, d))
    other = _other(user)
    x = (model.c1.points[d.i1], model.c2.points[d.i2])
    xh = (post.xhat1, post.xhat2)
    e = x[user - 1] - xh[user - 1]
    Au, Ao = (model.A, model.B) if user == 1 else (model.B, model.A)
    Ee = _outer(e, e)
    C = _outer(xh[other - 1], xh[user - 1])
    return np.einsum("ij,njk->nik", Au, Ee) - np.einsum("ij,njk->nik", Ao, C)


def _finish(target: str, est: dict, paper_grad: np.ndarray | None, verify: bool,
            tol_scale: float, hook) -> GradientReport:
    grad = est["grad"].value
    if hook is not None:
        grad = hook(target, np.array(grad))
    if not verify:
        return GradientReport(grad, target, paper_grad=paper_grad, grad_stderr=est["grad"].stderr)
    fd = est["fd"].value
    dev = grad - fd
    scale = float(np.max(np.abs(fd)))
    if scale == 0.0:
        scale = 1.0
    dev_se = float(np.max(est["diff"].stderr))
    max_abs = float(np.max(np.abs(dev)))
    rel = max_abs / scale
    tol = max(GRAD_STDERR_MULT * dev_se / scale, GRAD_REL_TOL) * tol_scale
    return GradientReport(grad, target, fd, max_abs, rel, dev_se, tol, bool(rel <= tol),
                          paper_grad, est["grad"].stderr)


def _gradient(model: MacModel, user: int, which: str, cfg: ExpectationConfig, verify: bool,
              step: float, tol_scale: float, hook) -> GradientReport:
    link = model.link(user)
    H, P = np.asarray(link.H), np.asarray(link.P)

    def fn(d: Draws):
        core = _joint_gradient_terms(model, d, user)
        if which == "H":
            g = model.snr * np.einsum("nij,kj->nik", core, P.conj())
        else:
            g = model.snr * np.einsum("ji,njk->nik", H.conj(), core)
        out = {"grad": g, "core": core}
        if verify:
            fd = _fd_per_sample(model, d, user, which, _joint_values, step)
            out["fd"] = fd
            out["diff"] = g - fd
        return out

    est = expect_model(model, cfg, fn)
    core = est["core"].value
    paper = core @ P.conj().T if which == "H" else H.conj().T @ core
    return _finish(f"grad_{which}{user} I(x1,x2;y)", est, paper, verify, tol_scale, hook)


def grad_info_wrt_channel(model: MacModel, user: int, cfg: ExpectationConfig, verify: bool = True,
                          step: float = FD_STEP, tol_scale: float = 1.0,
                          analytic_hook=None) -> GradientReport:
    """dI(x1,x2;y)/dH_u* = snr (H_u P_u E_u - H_o P_o E[xhat_o xhat_u^H]) P_u^H."""
    _other(user)
    return _gradient(model, user, "H", cfg, verify, step, tol_scale, analytic_hook)


def grad_info_wrt_precoder(model: MacModel, user: int, cfg: ExpectationConfig, verify: bool = True,
                           step: float = FD_STEP, tol_scale: float = 1.0,
                           analytic_hook=None) -> GradientReport:
    """dI(x1,x2;y)/dP_u* = snr H_u^H (H_u P_u E_u - H_o P_o E[xhat_o xhat_u^H])."""
    _other(user)
    return _gradient(model, user, "P", cfg, verify, step, tol_scale, analytic_hook)


def scaled_gradient_gap(model: MacModel, user: int, cfg: ExpectationConfig) -> float:
    """max |grad_P I . P^H - H^H . grad_H I| from one shared set of estimates."""
    link = model.link(user)
    H, P = np.asarray(link.H), np.asarray(link.P)
    est = expect_model(model, cfg, lambda d: {"core": _joint_gradient_terms(model, d, user)})
    core = est["core"].value
    gH = model.snr * core @ P.conj().T
    gP = model.snr * H.conj().T @ core
    lhs = gP @ P.conj().T
    rhs = H.conj().T @ gH
    scale = max(1.0, float(np.max(np.abs(lhs))))
    return float(np.max(np.abs(lhs - rhs))) / scale


def _nc_surrogate_terms(model: MacModel, d: Draws, user: int):
    """Per-sample e e^H of `user` in the Gaussian-interference surrogate, plus K^{-1}."""
    S = gaussian_interference_model(model, user)
    ds = _silence(d, user)
    post = JointPosterior(S, outputs(S, ds))
    if user == 1:
        e = S.c1.points[ds.i1] - post.xhat1
    else:
        e = S.c2.points[ds.i2] - post.xhat2
    return _outer(e, e)


def grad_nc_info_wrt_other_precoder(model: MacModel, user: int, cfg: ExpectationConfig,
                                    verify: bool = True, step: float = FD_STEP,
                                    tol_scale: float = 1.0, analytic_hook=None) -> GradientReport:
    """Gradient of I(x_user; y), other user as Gaussian interference, wrt the other precoder.

    With K = I + snr C C^H, C = H_o P_o, and E the MMSE matrix of x_user in the
    whitened surrogate channel,

        dI/dP_o* = -snr^2 H_o^H K^{-1} (H_u P_u) E (H_u P_u)^H K^{-1} C.

    `paper_grad` holds H_u P_u E P_u^H H_u^H H_o^H H_o P_o (P_o^H H_o^H H_o P_o + I)^{-1}
    when the shapes allow it (n_r == n_t); it differs in sign and weighting.
    """
    other = _other(user)
    Au = model.link(user).H @ model.link(user).P
    Ho, Po = np.asarray(model.link(other).H), np.asarray(model.link(other).P)
    C = Ho @ Po
    snr = model.snr
    K = np.eye(model.n_r) + snr * C @ C.conj().T
    Kinv = np.linalg.inv(K)
    left = Ho.conj().T @ Kinv @ Au
    right = Au.conj().T @ Kinv @ C

    def fn(d: Draws):
        Ee = _nc_surrogate_terms(model, d, user)
        g = -snr ** 2 * np.einsum("ij,njk,kl->nil", left, Ee, right)
        out = {"grad": g, "E": Ee}
        if verify:
            fd = _fd_per_sample(model, d, other, "P", _surrogate_values(user), step)
            out["fd"] = fd
            out["diff"] = g - fd
        return out

    est = expect_model(model, cfg, fn)
    E = est["E"].value
    paper = None
    if model.n_r == Po.shape[0] == Au.shape[1]:
        T = Au @ E @ Au.conj().T
        paper = T @ Ho.conj().T @ Ho @ Po @ np.linalg.inv(Po.conj().T @ Ho.conj().T @ Ho @ Po + np.eye(Po.shape[0]))
    return _finish(f"grad_P{other} I(x{user};y) [Gaussian interference]", est, paper, verify,
                   tol_scale, analytic_hook)


def grad_cond_info_wrt_precoder(model: MacModel, user: int, cfg: ExpectationConfig,
                                verify: bool = True, step: float = FD_STEP,
                                tol_scale: float = 1.0, analytic_hook=None) -> GradientReport:
    """grad_{P_u} I(x1,x2;y) - grad_{P_u} I(x_o; y): the conditional-rate gradient.

    The subtracted term uses the Gaussian-interference surrogate for I(x_o; y),
    so the finite-difference oracle is joint MI minus surrogate MI.
    """
    other = _other(user)
    full = grad_info_wrt_precoder(model, user, cfg, verify, step)
    nc = grad_nc_info_wrt_other_precoder(model, other, cfg, verify, step)
    grad = full.grad - nc.grad
    if analytic_hook is not None:
        grad = analytic_hook(f"grad_P{user} I(x{user};y|x{other})", np.array(grad))
    target = f"grad_P{user} I(x{user};y|x{other})"
    if not verify:
        return GradientReport(grad, target)
    fd = full.fd_grad - nc.fd_grad
    dev = grad - fd
    scale = float(np.max(np.abs(fd))) or 1.0
    dev_se = math.hypot(full.dev_stderr, nc.dev_stderr)
    max_abs = float(np.max(np.abs(dev)))
    rel = max_abs / scale
    tol = max(GRAD_STDERR_MULT * dev_se / scale, GRAD_REL_TOL) * tol_scale
    return GradientReport(grad, target, fd, max_abs, rel, dev_se, tol, bool(rel <= tol))


# --- snr identities -------------------------------------------------------------------


def _stencil(snr: float, delta: float):
    if delta <= 0:
        raise ValueError("delta must be positive")
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    if snr - delta >= 0:
        offsets = (-2, -1, 1, 2) if snr - 2 * delta >= 0 else (-1, 1)
        return "central", offsets
    return "forward", (0, 1, 2, 3)


def _derivative(vals: dict, delta: float, scheme: str):
    if scheme == "central":
        d = (vals[1] - vals[-1]) / (2 * delta)
        third = None
        if -2 in vals:
            third = (vals[2] - 2 * vals[1] + 2 * vals[-1] - vals[-2]) / (2 * delta ** 3)
        return d, third
    d = (-3 * vals[0] + 4 * vals[1] - vals[2]) / (2 * delta)
    third = (vals[3] - 3 * vals[2] + 3 * vals[1] - vals[0]) / delta ** 3
    return d, third


def _identity(label, snr, delta, scheme, est, fd_key, rhs_key, third_key, tol_scale, alts):
    d_fd = float(est[fd_key].value)
    rhs = float(est[rhs_key].value)
    se = float(est[f"res:{rhs_key}"].stderr)
    tol = max(IDENTITY_STDERR_MULT * se, IDENTITY_ABS_TOL) * tol_scale
    trunc = None
    too_large = False
    if third_key in est:
        third = float(est[third_key].value)
        trunc = delta ** 2 * abs(third) / (6 if scheme == "central" else 3)
        too_large = trunc > 0.1 * tol
    alternatives = {}
    for name in alts:
        a_rhs = float(est[name].value)
        a_se = float(est[f"res:{name}"].stderr)
        a_tol = max(IDENTITY_STDERR_MULT * a_se, IDENTITY_ABS_TOL) * tol_scale
        a_res = d_fd - a_rhs
        alternatives[name] = {"rhs": a_rhs, "residual": a_res, "stderr": a_se,
                              "tolerance": a_tol, "passed": bool(abs(a_res) <= a_tol)}
    res = d_fd - rhs
    return IdentityReport(snr, d_fd, rhs, res, se, label, tol, bool(abs(res) <= tol), scheme,
                          delta, trunc, too_large, alternatives)


def _with_residuals(out: dict, fd_key: str, rhs_keys) -> dict:
    for k in rhs_keys:
        out[f"res:{k}"] = out[fd_key] - out[k]
    return out


def verify_snr_identity(model: MacModel, cfg: ExpectationConfig, delta: float = 1e-3,
                        tol_scale: float = 1.0) -> IdentityReport:
    """Finite-difference dI(x1,x2;y)/dsnr against mmse_total + Re psi at the model snr.

    `alternatives["cross_error"]` is mmse_total - 2 Re Tr{H1P1 E[xhat1 xhat2^H] (H2P2)^H},
    i.e. E||H1P1 e1 + H2P2 e2||^2 including the cross-error term.
    """
    snr = model.snr
    scheme, offsets = _stencil(snr, delta)
    pts = offsets if scheme == "forward" else offsets

    def fn(d: Draws):
        vals = {k: info_terms(model, d, snr=snr + k * delta)["joint"] for k in pts}
        dfd, third = _derivative(vals, delta, scheme)
        t = mmse_terms(model, d)
        out = {
            "d_fd": dfd,
            "rhs": t["total"] + t["psi"].real,
            "cross_error": t["total"] + t["interference"],
        }
        if third is not None:
            out["third"] = third
        return _with_residuals(out, "d_fd", ("rhs", "cross_error"))

    est = expect_model(model, cfg, fn)
    return _identity("dI(x1,x2;y)/dsnr = mmse + Re psi", snr, delta, scheme, est, "d_fd", "rhs",
                     "third", tol_scale, ("cross_error",))


def _sic_mmse(model: MacModel, d: Draws, user: int) -> np.ndarray:
    """Per-sample ||H_u P_u (x_u - E[x_u | y - other's contribution])||^2."""
    y = outputs(model, d)
    s1, s2 = noiseless_points(model)
    if user == 2:
        xhat = sic_posterior_mean(model.c2.points, model.c2.priors, model.B, y - s1[d.i1], model.snr)
        e = model.c2.points[d.i2] - xhat
        return np.sum(np.abs(e @ model.B.T) ** 2, axis=1)
    xhat = sic_posterior_mean(model.c1.points, model.c1.priors, model.A, y - s2[d.i2], model.snr)
    e = model.c1.points[d.i1] - xhat
    return np.sum(np.abs(e @ model.A.T) ** 2, axis=1)


def verify_conditional_identity(model: MacModel, cfg: ExpectationConfig, delta: float = 1e-3,
                                tol_scale: float = 1.0,
                                gamma: float | None = None) -> tuple[IdentityReport, IdentityReport]:
    """Derivatives of I(x2; y | x1) and I(x1; y) against their candidate right-hand sides.

    Conditional branch: primary rhs mmse2 + Re psi (joint-posterior mmse2);
    alternative "sic_mmse2" is the MMSE of x2 after exact cancellation of x1.
    Non-conditional branch: primary rhs mmse1 (joint posterior) is reported with
    `passed=None`; alternatives are mmse1 at gamma*snr, gamma = 1/(1+snr) by
    default, and the chain-rule value (cross-error total minus sic_mmse2).
    """
    snr = model.snr
    scheme, offsets = _stencil(snr, delta)
    g = 1.0 / (1.0 + snr) if gamma is None else gamma
    scaled = model.with_snr(g * snr)

    def fn(d: Draws):
        per = {k: info_terms(model, d, snr=snr + k * delta) for k in offsets}
        d2, third2 = _derivative({k: v["i2_cond"] for k, v in per.items()}, delta, scheme)
        d1, third1 = _derivative({k: v["i1_nc"] for k, v in per.items()}, delta, scheme)
        dj, _ = _derivative({k: v["joint"] for k, v in per.items()}, delta, scheme)
        t = mmse_terms(model, d)
        sic2 = _sic_mmse(model, d, 2)
        out = {
            "d2": d2, "d1": d1, "dj": dj,
            "rhs2": t["mmse2"] + t["psi"].real,
            "sic_mmse2": sic2,
            "rhs1": t["mmse1"],
            "mmse1_gamma": mmse_terms(scaled, d)["mmse1"],
            "chain_rule": t["total"] + t["interference"] - sic2,
        }
        if third2 is not None:
            out["third2"] = third2
            out["third1"] = third1
        _with_residuals(out, "d2", ("rhs2", "sic_mmse2"))
        out["res:rhs1"] = d1 - out["rhs1"]
        out["res:mmse1_gamma"] = d1 - out["mmse1_gamma"]
        out["res:chain_rule"] = d1 - out["chain_rule"]
        out["res:sum"] = d1 + d2 - dj
        return out

    est = expect_model(model, cfg, fn)
    cond = _identity("dI(x2;y|x1)/dsnr = mmse2 + Re psi", snr, delta, scheme, est, "d2", "rhs2",
                     "third2", tol_scale, ("sic_mmse2",))
    nc = _identity("dI(x1;y)/dsnr = mmse1(gamma snr)", snr, delta, scheme, est, "d1", "rhs1",
                   "third1", tol_scale, ("mmse1_gamma", "chain_rule"))
    nc = replace(nc, passed=None)
    s = est["res:sum"]
    alts = dict(cond.alternatives)
    alts["chain_sum"] = {"rhs": float(est["dj"].value), "residual": float(s.value),
                         "stderr": float(s.stderr),
                         "tolerance": max(IDENTITY_STDERR_MULT * float(s.stderr), 1e-9) * tol_scale,
                         "passed": bool(abs(float(s.value)) <= max(IDENTITY_STDERR_MULT * float(s.stderr), 1e-9) * tol_scale)}
    return replace(cond, alternatives=alts), nc


def default_mc() -> McConfig:
    return McConfig()
