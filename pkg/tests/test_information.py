"""Joint, non-conditional, conditional and Gaussian-interference mutual information."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from immse.closed_form import info2_cond
from immse.expectation import expect_model
from immse.information import (cond_info_user1, cond_info_user2, gaussian_interference_model,
                               info_report, info_terms, joint_info, nc_info_gaussian_interference,
                               nc_info_user1, nc_info_user2)
from immse.model import GaussHermite, McConfig, bpsk_scalar_mac, single_user
from immse.reporting import LN2

from conftest import random_model

GH = GaussHermite(nodes=160, batch=65536)
MC = McConfig(seed=3, samples=100_000)


class TestJointInfo:
    """I(x1, x2; y)."""

    def test_zero_snr(self):
        assert abs(joint_info(bpsk_scalar_mac(0.0), GH).value) < 1e-14
        e = joint_info(random_model(1, snr=0.0), McConfig(samples=5000))
        assert abs(e.value) <= 3 * e.stderr + 1e-14

    def test_high_snr_entropy_of_sum(self):
        """x1 + x2 takes values -2, 0, 2 with probabilities 1/4, 1/2, 1/4: 1.5 bits."""
        v = joint_info(bpsk_scalar_mac(100.0), GH).value / LN2
        assert v == pytest.approx(1.5, abs=0.01)

    def test_single_user_high_snr(self):
        assert joint_info(single_user(bpsk_scalar_mac(100.0)), GH).value == pytest.approx(math.log(2), abs=0.01)


class TestNonConditional:
    """I(x_i; y) with the other user as part of the noise."""

    def test_zero_snr(self):
        assert abs(nc_info_user1(bpsk_scalar_mac(0.0), GH).value) < 1e-14

    def test_high_snr_half_bit(self):
        assert nc_info_user1(bpsk_scalar_mac(100.0), GH).value / LN2 == pytest.approx(0.5, abs=0.01)
        assert nc_info_user2(bpsk_scalar_mac(100.0), GH).value / LN2 == pytest.approx(0.5, abs=0.01)

    def test_no_second_user(self):
        m = single_user(random_model(2))
        a, b = nc_info_user1(m, MC), joint_info(m, MC)
        assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr) + 1e-12


class TestConditional:
    """I(x2; y | x1) by cancellation and by density ratio."""

    def test_zero_snr(self):
        assert abs(cond_info_user2(bpsk_scalar_mac(0.0), GH).value) < 1e-14

    def test_high_snr_one_bit(self):
        assert cond_info_user2(bpsk_scalar_mac(100.0), GH).value / LN2 == pytest.approx(1.0, abs=0.01)

    @pytest.mark.parametrize("snr", [0.25, 1.0, 4.0])
    def test_matches_closed_form(self, snr):
        """Circular noise: the complex-model rate at snr is the real-axis closed form at 2 snr."""
        e = cond_info_user2(bpsk_scalar_mac(snr), MC)
        assert abs(e.value - info2_cond(2 * snr)) <= max(3 * e.stderr, 1e-3)
        g = cond_info_user2(bpsk_scalar_mac(snr), GH)
        assert g.value == pytest.approx(info2_cond(2 * snr), abs=1e-6)

    def test_cancel_equals_ratio(self):
        m = random_model(3)
        cfg = McConfig(samples=20_000)
        a = cond_info_user2(m, cfg, "cancel")
        b = cond_info_user2(m, cfg, "ratio")
        assert a.value == pytest.approx(b.value, abs=1e-12)
        a = cond_info_user1(m, cfg, "cancel")
        b = cond_info_user1(m, cfg, "ratio")
        assert a.value == pytest.approx(b.value, abs=1e-12)

    def test_bad_method(self):
        with pytest.raises(ValueError):
            cond_info_user2(bpsk_scalar_mac(1.0), GH, "guess")


def _surrogate_oracle(snr):
    """Scalar BPSK in y = sqrt(snr) x + w, w ~ CN(0, 1 + snr); only Re y matters."""
    s, v = math.sqrt(snr), (1 + snr) / 2
    phi = lambda t, mu: math.exp(-((t - mu) ** 2) / (2 * v)) / math.sqrt(2 * math.pi * v)
    total = 0.0
    for x in (1.0, -1.0):
        f = lambda t: phi(t, s * x) * math.log(phi(t, s * x) / (0.5 * phi(t, s) + 0.5 * phi(t, -s)))
        total += 0.5 * integrate.quad(f, s * x - 14, s * x + 14, epsabs=1e-13, limit=200)[0]
    return total


class TestGaussianInterference:
    """The decoded-first user's rate with the interferer replaced by Gaussian noise."""

    def test_zero_interferer_is_exact(self):
        m = single_user(random_model(4), 2)
        a = nc_info_gaussian_interference(m, 2, MC)
        b = nc_info_user2(m, MC)
        assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr) + 1e-12

    def test_zero_snr(self):
        assert abs(nc_info_gaussian_interference(bpsk_scalar_mac(0.0), 2, GH).value) < 1e-14

    def test_quadrature_oracle(self):
        v = nc_info_gaussian_interference(bpsk_scalar_mac(1.0), 2, GH).value
        assert v == pytest.approx(_surrogate_oracle(1.0), abs=1e-8)

    def test_whitening(self):
        m = random_model(5, snr=2.0)
        S = gaussian_interference_model(m, 1)
        K = np.eye(2) + m.snr * m.B @ m.B.conj().T
        G = S.A
        np.testing.assert_allclose(G.conj().T @ G, m.A.conj().T @ np.linalg.solve(K, m.A), atol=1e-12)
        assert np.all(S.B == 0) and S.c2.size == 1


@pytest.fixture(scope="module")
def report():
    return info_report(random_model(6, snr=2.0), McConfig(seed=1, samples=40_000))


class TestInfoReport:
    """Shared-stream report of all five quantities."""

    def test_nonnegative_and_bounded(self, report):
        for k in ("joint", "i1_nc", "i2_nc", "i1_cond", "i2_cond"):
            assert getattr(report, k) >= -3 * report.stderr[k]
        assert report.joint <= math.log(256) + 3 * report.stderr["joint"]
        assert report.i1_cond <= math.log(16) + 3 * report.stderr["i1_cond"]

    def test_chain_rule(self, report):
        assert abs(report.chain_residual_12) <= 3 * report.combined_stderr("joint", "i1_nc", "i2_cond") + 1e-12
        assert abs(report.chain_residual_21) <= 3 * report.combined_stderr("joint", "i2_nc", "i1_cond") + 1e-12

    def test_conditioning_helps(self, report):
        assert report.i1_nc <= report.i1_cond + 3 * report.combined_stderr("i1_nc", "i1_cond")

    def test_bits(self, report):
        assert report.bits["joint"] == report.joint / math.log(2)
        d = report.to_dict()
        assert set(d["bits"]) == {"joint", "i1_nc", "i2_nc", "i1_cond", "i2_cond"}

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 1000), st.floats(0.0, 8.0))
    def test_chain_rule_per_sample(self, seed, snr):
        m = random_model(seed, const="bpsk", snr=snr)

        def fn(d):
            t = info_terms(m, d)
            return {"r": t["joint"] - t["i1_nc"] - t["i2_cond"]}

        r = expect_model(m, McConfig(seed=seed, samples=2000), fn)["r"]
        assert abs(r.value) < 1e-10
