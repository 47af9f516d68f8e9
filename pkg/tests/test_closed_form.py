"""BPSK closed forms evaluated by quadrature."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from immse import closed_form as cf
from immse.closed_form import (DEFAULT_QUAD, FINE_QUAD, QuadratureError, QuadratureSpec,
                               bpsk_posterior_tanh, gaussian_expectation, guo_bpsk_info,
                               guo_bpsk_mmse, info1_scaled, info2_cond, mmse1_scaled, mmse2_cond,
                               mmse2_prime, parallel_bpsk_info, psi_bpsk_successive,
                               real_axis_derivative_gap, total_bpsk)
from immse.reporting import LN2


class TestGuo:
    """Single-user BPSK pair in unit real noise."""

    def test_zero(self):
        assert guo_bpsk_mmse(0.0) == 1.0 and guo_bpsk_info(0.0) == 0.0

    def test_saturation(self):
        assert guo_bpsk_info(100.0) == pytest.approx(math.log(2), abs=1e-4)
        assert guo_bpsk_mmse(100.0) < 1e-8

    @pytest.mark.parametrize("snr", [0.25, 1.0, 4.0])
    def test_real_axis_derivative(self, snr):
        """With unit real noise the derivative of the rate is half the MMSE."""
        g = real_axis_derivative_gap("guo", snr)
        assert abs(g["residual_half"]) < 1e-6

    def test_negative_snr(self):
        with pytest.raises(ValueError):
            guo_bpsk_mmse(-0.1)


class TestScaledFirstUser:
    """Fixed variance-2 interference-plus-noise forms."""

    def test_zero(self):
        assert mmse1_scaled(0.0) == 1.0 and info1_scaled(0.0) == 0.0

    def test_saturation(self):
        assert mmse1_scaled(100.0) == pytest.approx(0.5, abs=1e-3)
        assert info1_scaled(100.0) == pytest.approx(math.log(2) / 2, abs=1e-3)

    def test_monte_carlo_of_same_integral(self):
        snr, n = 1.0, 1_000_000
        rng = np.random.default_rng(12)
        y = math.sqrt(snr) + math.sqrt(2.0) * rng.standard_normal(n)
        v = 1.0 - 0.5 * np.tanh(math.sqrt(snr) * y / 2)
        assert abs(v.mean() - mmse1_scaled(snr)) <= 3 * v.std() / math.sqrt(n)

    def test_verbatim_prefactor(self):
        """(1/(4 sqrt(pi))) int f(y) exp(-(y - sqrt(snr))^2/4) dy equals E_{N(sqrt(snr), 2)}[f] / 2."""
        from scipy import integrate

        s = 1.0
        raw = integrate.quad(lambda y: math.tanh(s * y / 2) * math.exp(-((y - s) ** 2) / 4), -40, 40,
                             epsabs=1e-13)[0] / (4 * math.sqrt(math.pi))
        assert mmse1_scaled(1.0) == pytest.approx(1 - raw, abs=1e-10)


class TestConditionalSecondUser:
    """Forms for the user decoded after cancellation."""

    @pytest.mark.parametrize("snr", [0.1, 1.0, 4.0, 10.0])
    def test_identical_to_guo(self, snr):
        assert mmse2_cond(snr) == pytest.approx(guo_bpsk_mmse(snr), abs=1e-9)
        assert info2_cond(snr) == pytest.approx(guo_bpsk_info(snr), abs=1e-9)

    def test_zero_and_saturation(self):
        assert mmse2_cond(0.0) == 1.0 and info2_cond(0.0) == 0.0
        assert info2_cond(100.0) / LN2 == pytest.approx(1.0, abs=1e-4)


class TestSuccessivePsi:
    """Difference of the two successive-decoding covariance integrals."""

    def test_zero(self):
        assert psi_bpsk_successive(0.0) == (0.0, 0.0, 0.0)

    def test_low_snr_second_order(self):
        for snr in (0.01, 0.005):
            assert abs(psi_bpsk_successive(snr).psi) <= 10 * snr ** 2

    def test_bookkeeping(self):
        assert psi_bpsk_successive(1.0).psi == pytest.approx(mmse2_prime(1.0) - mmse2_cond(1.0), abs=1e-15)

    def test_terms_differ(self):
        p = psi_bpsk_successive(1.0)
        assert p.term_12 != pytest.approx(p.term_21, abs=1e-3)


class TestTotals:
    """Total MMSE and rate of the two-user BPSK MAC."""

    def test_zero(self):
        assert tuple(total_bpsk(0.0)) == (2.0, 0.0)

    def test_saturation(self):
        assert total_bpsk(100.0).info / LN2 == pytest.approx(1.5, abs=0.01)
        assert parallel_bpsk_info(100.0) / LN2 == pytest.approx(2.0, abs=0.01)

    @pytest.mark.parametrize("snr", np.geomspace(0.01, 100, 9))
    def test_rates_bounded(self, snr):
        for f in (guo_bpsk_info, info1_scaled, info2_cond):
            assert -1e-12 <= f(snr) <= math.log(2) + 1e-12


class TestTanhPosterior:
    """tanh(sqrt(snr) y / sigma^2)."""

    def test_limits(self):
        assert bpsk_posterior_tanh(1.0, 0.0, 2.0) == 0.0
        assert bpsk_posterior_tanh(1.0, 1e6, 2.0) == 1.0

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.0, 20.0), st.floats(-5.0, 5.0), st.sampled_from([0.5, 1.0, 2.0, 4.0]))
    def test_ratio_of_exponentials(self, snr, y, var):
        s = math.sqrt(snr)
        a = -((y - s) ** 2) / (2 * var)
        b = -((y + s) ** 2) / (2 * var)
        m = max(a, b)
        ratio = (math.exp(a - m) - math.exp(b - m)) / (math.exp(a - m) + math.exp(b - m))
        assert bpsk_posterior_tanh(snr, y, var) == pytest.approx(ratio, abs=1e-12)

    def test_bad_variance(self):
        with pytest.raises(ValueError):
            bpsk_posterior_tanh(1.0, 0.0, 0.0)


class TestQuadrature:
    """Adaptive and fixed-node Gaussian expectations."""

    def test_error_estimate_below_tolerance(self):
        r = gaussian_expectation(np.tanh, 1.0, 1.0)
        assert r.abserr < DEFAULT_QUAD.abs_tol and r.tail_bound < 1e-30

    def test_tightening_tolerance(self):
        a = gaussian_expectation(lambda y: np.tanh(2 * y), 2.0, 2.0)
        b = gaussian_expectation(lambda y: np.tanh(2 * y), 2.0, 2.0, FINE_QUAD)
        assert abs(a.value - b.value) <= max(a.abserr, 1e-12)

    def test_hermite_rule_agrees(self):
        gh = QuadratureSpec(rule="gauss-hermite", nodes=200)
        a = gaussian_expectation(lambda y: y ** 2, 0.5, 3.0, gh).value
        assert a == pytest.approx(3.25, rel=1e-12)
        assert mmse1_scaled(1.0, gh) == pytest.approx(mmse1_scaled(1.0), abs=1e-9)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            QuadratureSpec(abs_tol=0.0)
        with pytest.raises(ValueError):
            QuadratureSpec(rule="simpson")

    def test_nonconvergence_raises(self):
        spec = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-15, max_subdivisions=1)
        with pytest.raises(QuadratureError):
            gaussian_expectation(lambda y: np.sign(np.sin(40 * y)), 0.0, 1.0, spec)

    def test_log_cosh_large(self):
        assert cf.log_cosh(1000.0) == pytest.approx(1000.0 - math.log(2))
