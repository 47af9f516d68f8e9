"""Low-snr Taylor expansions of the MAC MMSE, psi and mutual information.

Everything here is trace algebra on Q_i = (H_i P_i)(H_i P_i)^H; no sampling.
The expansions assume proper (circular) zero-mean unit-covariance inputs,
E[x x^T] = 0. Real-valued alphabets such as BPSK violate that assumption and
have a different second-order coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import ExpectationConfig, MacModel


def gram(model: MacModel) -> tuple[np.ndarray, np.ndarray]:
    """(A A^H, B B^H) with A = H1 P1, B = H2 P2."""
    A, B = model.A, model.B
    return A @ A.conj().T, B @ B.conj().T


def _tr(M: np.ndarray) -> float:
    return float(np.real(np.trace(M)))


class Coefficients(NamedTuple):
    tr1: float        # Tr{Q1}
    tr2: float        # Tr{Q2}
    sq1: float        # Tr{Q1^2}
    sq2: float        # Tr{Q2^2}
    cross12: float    # Tr{Q1 Q2}
    cross21: float    # Tr{Q2 Q1}


def coefficients(model: MacModel) -> Coefficients:
    Q1, Q2 = gram(model)
    return Coefficients(_tr(Q1), _tr(Q2), _tr(Q1 @ Q1), _tr(Q2 @ Q2), _tr(Q1 @ Q2), _tr(Q2 @ Q1))


def mmse_matrix_expansion(model: MacModel, snr: float) -> tuple[np.ndarray, np.ndarray]:
    """E_i ~ I - (H_i P_i)^H (H_i P_i) snr."""
    A, B = model.A, model.B
    return (np.eye(A.shape[1]) - snr * (A.conj().T @ A),
            np.eye(B.shape[1]) - snr * (B.conj().T @ B))


def mmse_expansion(model: MacModel, snr: float) -> float:
    """Tr{Q1} + Tr{Q2} - (Tr{Q1^2} + Tr{Q2^2}) snr."""
    c = coefficients(model)
    return c.tr1 + c.tr2 - (c.sq1 + c.sq2) * snr


class InfoExpansion(NamedTuple):
    value: float
    terms: tuple[float, ...]
    four_term: float


def info_expansion_terms(model: MacModel, snr: float) -> InfoExpansion:
    """All six terms of the second-order mutual information expansion (nats).

    The last two, +Tr{Q1 Q2} snr^2 and -Tr{Q2 Q1} snr^2, cancel by trace
    cyclicity, leaving the four-term form.
    """
    c = coefficients(model)
    s2 = snr * snr
    terms = (c.tr1 * snr, c.tr2 * snr, -c.sq1 * s2, -c.sq2 * s2, c.cross12 * s2, -c.cross21 * s2)
    six = math.fsum(terms)
    four = math.fsum(terms[:4])
    scale = max(1.0, *(abs(t) for t in terms))
    if abs(six - four) > 64 * np.finfo(float).eps * scale:
        raise ArithmeticError(f"cross terms failed to cancel: six={six!r}, four={four!r}")
    return InfoExpansion(six, terms, four)


def info_expansion(model: MacModel, snr: float) -> float:
    return info_expansion_terms(model, snr).value


class PsiExpansion(NamedTuple):
    psi: float
    forward: float
    backward: float


def psi_expansion(model: MacModel, snr: float) -> PsiExpansion:
    """First-order psi: Tr{Q1 Q2} snr - Tr{Q2 Q1} snr, zero by cyclicity."""
    c = coefficients(model)
    fwd, bwd = c.cross12 * snr, c.cross21 * snr
    return PsiExpansion(fwd - bwd, fwd, bwd)


class WidebandSlope(NamedTuple):
    first: float
    second: float
    slope: float


def wideband_slope(model: MacModel) -> WidebandSlope:
    """Slope 2 c1^2 / (-2 c2) from I ~ c1 snr + c2 snr^2; infinite if c2 == 0."""
    c = coefficients(model)
    first = c.tr1 + c.tr2
    second = -(c.sq1 + c.sq2) + c.cross12 - c.cross21
    slope = math.inf if second == 0 else 2.0 * first ** 2 / (-2.0 * second)
    return WidebandSlope(first, second, slope)


@dataclass(frozen=True)
class ExpansionReport:
    snr: float
    mmse_taylor: float
    info_taylor: float
    psi_taylor: float
    first_order: float
    second_order: float
    exact_mmse: float | None = None
    exact_info: float | None = None
    exact_info_stderr: float | None = None

    @property
    def info_abs_err(self) -> float | None:
        return None if self.exact_info is None else abs(self.exact_info - self.info_taylor)


def expansion_report(model: MacModel, snr: float | None = None,
                     cfg: ExpectationConfig | None = None) -> ExpansionReport:
    """Taylor values at `snr`; with `cfg`, also the exact MMSE and joint MI there."""
    snr = model.snr if snr is None else snr
    ws = wideband_slope(model)
    exact_mmse = exact_info = exact_se = None
    if cfg is not None:
        from .information import joint_info
        from .mmse import mmse_total

        m = model.with_snr(snr)
        exact_mmse = mmse_total(m, cfg).total
        ji = joint_info(m, cfg)
        exact_info, exact_se = float(ji.value), float(ji.stderr)
    return ExpansionReport(snr, mmse_expansion(model, snr), info_expansion(model, snr),
                           psi_expansion(model, snr).psi, ws.first, ws.second,
                           exact_mmse, exact_info, exact_se)
