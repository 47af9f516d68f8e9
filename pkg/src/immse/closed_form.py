"""BPSK closed forms for the two-user scalar MAC, evaluated by quadrature.

Every formula is evaluated as written, in the real-axis convention: the
Gaussian weights below are N(sqrt(snr), 1) for the conditional (second-decoded)
user and N(sqrt(snr), 2) for the user decoded first with the other user
folded into a variance-2 noise. A BPSK input in the circular complex noise of
`MacModel` sees twice the snr on the real axis, so the single-user model
quantities at snr equal `guo_bpsk_mmse(2 snr)` and `guo_bpsk_info(2 snr)`.

For these real-axis pairs d(info)/dsnr = mmse / 2 (nats); see `real_axis_derivative_gap`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate

from .reporting import LN2


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """`rule` is "gauss-kronrod" (adaptive) or "gauss-hermite" (fixed `nodes`)."""

    rule: str = "gauss-kronrod"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200
    nodes: int = 200
    span: float = 12.0

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.rule not in ("gauss-kronrod", "gauss-hermite"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")


DEFAULT_QUAD = QuadratureSpec()
FINE_QUAD = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-13, max_subdivisions=500)


class QuadResult(NamedTuple):
    value: float
    abserr: float
    tail_bound: float


def gaussian_expectation(f: Callable[[np.ndarray], np.ndarray], mean: float, var: float,
                         spec: QuadratureSpec = DEFAULT_QUAD, growth: float = 0.0) -> QuadResult:
    """E[f(Y)] for Y ~ N(mean, var), truncated at mean +/- span standard deviations.

    `growth` bounds |f(y)| <= 1 + growth |y|, used only to report the tail mass
    that truncation drops.
    """
    sd = math.sqrt(var)
    if spec.rule == "gauss-hermite":
        t, w = np.polynomial.hermite.hermgauss(spec.nodes)
        y = mean + math.sqrt(2.0) * sd * t
        return QuadResult(float(np.dot(w, f(y)) / math.sqrt(math.pi)), 0.0, 0.0)

    norm = 1.0 / math.sqrt(2.0 * math.pi * var)

    def g(y):
        return float(f(np.asarray(y))) * norm * math.exp(-((y - mean) ** 2) / (2.0 * var))

    lo, hi = mean - spec.span * sd, mean + spec.span * sd
    # split at the mean and at 0 (where tanh-type integrands switch) to help the adaptive rule
    cuts = sorted({lo, hi, mean, *([0.0] if lo < 0.0 < hi else [])})
    total, err = 0.0, 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        # convergence is judged below from the error estimate, not scipy's warning
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            v, e = integrate.quad(g, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                  limit=spec.max_subdivisions)
        total += v
        err += e
    if err > max(spec.abs_tol, spec.rel_tol * abs(total)) * 10:
        raise QuadratureError(
            f"quadrature error estimate {err:.3g} above tolerance "
            f"(abs {spec.abs_tol:g}, rel {spec.rel_tol:g}); value {total:.12g}"
        )
    # Gaussian tail beyond span sd, with |f| <= 1 + growth |y|
    z = spec.span
    tail_p = math.erfc(z / math.sqrt(2.0))
    tail = tail_p * (1.0 + growth * (abs(mean) + sd * z)) + growth * 2 * sd * math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
    return QuadResult(total, err, tail)


def log_cosh(x):
    """log cosh x without overflow."""
    a = np.abs(x)
    return a + np.log1p(np.exp(-2.0 * a)) - LN2


def _check_snr(snr: float) -> float:
    snr = float(snr)
    if not math.isfinite(snr) or snr < 0:
        raise ValueError(f"snr must be finite and nonnegative, got {snr!r}")
    return snr


def bpsk_posterior_tanh(snr: float, y, variance: float):
    """E[x | y] for BPSK x in y = sqrt(snr) x + N(0, variance): tanh(sqrt(snr) y / variance)."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    return np.tanh(math.sqrt(snr) * np.asarray(y) / variance)


# --- single user, unit real noise ------------------------------------------------


def guo_bpsk_mmse(snr: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """1 - E[tanh(sqrt(snr) Y)], Y ~ N(sqrt(snr), 1): BPSK MMSE in unit-variance real noise."""
    snr = _check_snr(snr)
    if snr == 0:
        return 1.0
    s = math.sqrt(snr)
    return 1.0 - gaussian_expectation(lambda y: np.tanh(s * y), s, 1.0, spec).value


def guo_bpsk_info(snr: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """snr - E[log cosh(sqrt(snr) Y)], Y ~ N(sqrt(snr), 1), in nats."""
    snr = _check_snr(snr)
    if snr == 0:
        return 0.0
    s = math.sqrt(snr)
    return snr - gaussian_expectation(lambda y: log_cosh(s * y), s, 1.0, spec, growth=s).value


def mmse2_cond(snr: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """MMSE of the second-decoded user once the first is cancelled."""
    return guo_bpsk_mmse(snr, spec)


def info2_cond(snr: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Rate (nats) of the second-decoded user once the first is cancelled."""
    return guo_bpsk_info(snr, spec)


# --- first-decoded user, other user folded into variance-2 noise -----------------


def mmse1_scaled(snr: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """1 - (1 / (4 sqrt(pi))) int tanh(sqrt(snr) y / 2) exp(-(y - sqrt(snr))^2 / 4) dy.

    The prefactor is half the N(sqrt(snr), 2) normalisation, hence the
    expectation below carries a factor 1/2 and the value saturates at 0.5.
    """
    snr = _check_snr(snr)
    if snr == 0:
        return 1.0
    s = math.sqrt(snr)
    e = gaussian_expectation(lambda y: np.tanh(0.5 * s * y), s, 2.0, spec).value
    return 1.0 - 0.5 * e


def info1_scaled(snr: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """snr/4 - (1 / (4 sqrt(pi))) int log cosh(sqrt(snr) y / 2) exp(-(y - sqrt(snr))^2 / 4) dy, nats."""
    snr = _check_snr(snr)
    if snr == 0:
        return 0.0
    s = math.sqrt(snr)
    e = gaussian_expectation(lambda y: log_cosh(0.5 * s * y), s, 2.0, spec, growth=s / 2).value
    return snr / 4.0 - 0.5 * e


class SuccessivePsi(NamedTuple):
    psi: float
    term_12: float
    term_21: float


def psi_bpsk_successive(snr: float, spec: QuadratureSpec = DEFAULT_QUAD) -> SuccessivePsi:
    """Difference of the two successive-decoding covariance integrals.

    term_12 = (1/sqrt(2 pi)) int tanh(sqrt(snr) y / 2) exp(-(y - sqrt(snr))^2 / 2) dy
    term_21 = (1/(4 sqrt(pi))) int tanh(sqrt(snr) y) exp(-(y - sqrt(snr))^2 / 4) dy
    """
    snr = _check_snr(snr)
    if snr == 0:
        return SuccessivePsi(0.0, 0.0, 0.0)
    s = math.sqrt(snr)
    t12 = gaussian_expectation(lambda y: np.tanh(0.5 * s * y), s, 1.0, spec).value
    t21 = 0.5 * gaussian_expectation(lambda y: np.tanh(s * y), s, 2.0, spec).value
    return SuccessivePsi(t12 - t21, t12, t21)


def mmse2_prime(snr: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """mmse2 + psi, the second user's term in total = mmse1' + mmse2' - psi."""
    return mmse2_cond(snr, spec) + psi_bpsk_successive(snr, spec).psi


class BpskTotals(NamedTuple):
    mmse: float
    info: float


def total_bpsk(snr: float, spec: QuadratureSpec = DEFAULT_QUAD) -> BpskTotals:
    """(mmse1' + mmse2' - psi, I1' + I2') for the two-user BPSK MAC; info in nats."""
    psi = psi_bpsk_successive(snr, spec).psi
    mmse = mmse1_scaled(snr, spec) + (mmse2_cond(snr, spec) + psi) - psi
    return BpskTotals(mmse, info1_scaled(snr, spec) + info2_cond(snr, spec))


def parallel_bpsk_info(snr: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Sum rate of two users on separate parallel BPSK channels, nats."""
    return 2.0 * guo_bpsk_info(snr, spec)


def central_difference(f: Callable[[float], float], x: float, h: float = 1e-3) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)


PAIRS = {
    "guo": (guo_bpsk_info, guo_bpsk_mmse),
    "cond2": (info2_cond, mmse2_cond),
    "scaled1": (info1_scaled, mmse1_scaled),
}


def real_axis_derivative_gap(pair: str, snr: float, h: float = 1e-3) -> dict:
    """Numerical d(info)/dsnr of a closed-form pair next to mmse and mmse/2."""
    info, mmse = PAIRS[pair]
    d = central_difference(lambda s: info(s, FINE_QUAD), snr, h)
    m = mmse(snr, FINE_QUAD)
    return {"pair": pair, "snr": snr, "d_info": d, "mmse": m, "half_mmse": 0.5 * m,
            "residual": d - m, "residual_half": d - 0.5 * m}
