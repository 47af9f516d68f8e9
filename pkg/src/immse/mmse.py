"""Per-user MMSE matrices, total MMSE and the interference covariance term psi.

Expectations over y are Monte Carlo (or Gauss-Hermite) averages; posterior
means inside are exact sums over the joint alphabet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expectation import Estimate, expect_model, outputs
from .model import Draws, ExpectationConfig, MacModel
from .posterior import JointPosterior


@dataclass(frozen=True)
class MmseReport:
    E1: np.ndarray
    E2: np.ndarray
    mmse1: float
    mmse2: float
    total: float
    psi: complex
    stderr: float
    psi_forward: complex = 0j
    psi_backward: complex = 0j
    psi_stderr: float = 0.0
    cross: np.ndarray | None = None
    interference_term: float = 0.0
    interference_stderr: float = 0.0

    def to_dict(self) -> dict:
        from .reporting import jsonable

        return jsonable(self.__dict__)


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[:, :, None] * b.conj()[:, None, :]


def mmse_terms(model: MacModel, d: Draws, snr: float | None = None) -> dict[str, np.ndarray]:
    """Per-sample error outer products, posterior cross products and trace terms."""
    m = model if snr is None else model.with_snr(snr)
    post = JointPosterior(m, outputs(m, d))
    e1 = m.c1.points[d.i1] - post.xhat1
    e2 = m.c2.points[d.i2] - post.xhat2
    A, B = m.A, m.B
    Ae1, Be2 = e1 @ A.T, e2 @ B.T
    Ax1, Bx2 = post.xhat1 @ A.T, post.xhat2 @ B.T
    fwd = np.sum(Bx2.conj() * Ax1, axis=1)  # Tr{A xhat1 xhat2^H B^H}
    bwd = fwd.conj()                          # Tr{B xhat2 xhat1^H A^H}
    mmse1 = np.sum(np.abs(Ae1) ** 2, axis=1)
    mmse2 = np.sum(np.abs(Be2) ** 2, axis=1)
    return {
        "E1": _outer(e1, e1),
        "E2": _outer(e2, e2),
        "cross": _outer(post.xhat1, post.xhat2),
        "mmse1": mmse1,
        "mmse2": mmse2,
        "total": mmse1 + mmse2,
        "psi_fwd": fwd,
        "psi_bwd": bwd,
        "psi": fwd - bwd,
        # -2 Re Tr{A E[xhat1 xhat2^H] B^H}: the cross-error term of E||A e1 + B e2||^2
        "interference": -2.0 * fwd.real,
    }


def _herm(E: np.ndarray) -> np.ndarray:
    return 0.5 * (E + E.conj().T)


def _estimates(model: MacModel, cfg: ExpectationConfig) -> dict[str, Estimate]:
    return expect_model(model, cfg, lambda d: mmse_terms(model, d))


def mmse_matrices(model: MacModel, cfg: ExpectationConfig) -> tuple[np.ndarray, np.ndarray]:
    """E_i = E[(x_i - xhat_i)(x_i - xhat_i)^H], Hermitian-symmetrised."""
    est = _estimates(model, cfg)
    return _herm(est["E1"].value), _herm(est["E2"].value)


def report_from_estimates(model: MacModel, est: dict[str, Estimate]) -> MmseReport:
    E1, E2 = _herm(est["E1"].value), _herm(est["E2"].value)
    A, B = model.A, model.B
    mmse1 = float(np.real(np.trace(A @ E1 @ A.conj().T)))
    mmse2 = float(np.real(np.trace(B @ E2 @ B.conj().T)))
    return MmseReport(
        E1=E1,
        E2=E2,
        mmse1=mmse1,
        mmse2=mmse2,
        total=mmse1 + mmse2,
        psi=complex(est["psi"].value),
        stderr=float(est["total"].stderr),
        psi_forward=complex(est["psi_fwd"].value),
        psi_backward=complex(est["psi_bwd"].value),
        psi_stderr=float(est["psi"].stderr),
        cross=est["cross"].value,
        interference_term=float(est["interference"].value),
        interference_stderr=float(est["interference"].stderr),
    )


def mmse_total(model: MacModel, cfg: ExpectationConfig) -> MmseReport:
    """Tr{H1P1 E1 (H1P1)^H} + Tr{H2P2 E2 (H2P2)^H}, with E1, E2 and psi attached."""
    return report_from_estimates(model, _estimates(model, cfg))


@dataclass(frozen=True)
class PsiEstimate:
    psi: complex
    forward: complex
    backward: complex
    stderr: float


def covariance_psi(model: MacModel, cfg: ExpectationConfig) -> PsiEstimate:
    """Tr{H1P1 E[xhat1 xhat2^H] (H2P2)^H} - Tr{H2P2 E[xhat2 xhat1^H] (H1P1)^H}.

    The two traces are complex conjugates of each other, so psi is purely
    imaginary; for real-valued models it vanishes identically.
    """
    est = expect_model(model, cfg, lambda d: {
        k: v for k, v in mmse_terms(model, d).items() if k.startswith("psi")
    })
    return PsiEstimate(complex(est["psi"].value), complex(est["psi_fwd"].value),
                       complex(est["psi_bwd"].value), float(est["psi"].stderr))


def cross_covariance(model: MacModel, cfg: ExpectationConfig) -> Estimate:
    """E_y[xhat1 xhat2^H] as an n_t x n_t matrix estimate."""
    return expect_model(model, cfg, lambda d: {"cross": mmse_terms(model, d)["cross"]})["cross"]
