"""Verification suites: verdict bookkeeping, properness, exact configs."""

import numpy as np
import pytest

from immse.model import GaussHermite, McConfig, bpsk_scalar_mac, qpsk, single_user
from immse.verification import (SUITES, Check, VerificationReport, closed_form_checks, exact_config,
                                identity_checks, is_proper, lowsnr_checks, run_verification)

from conftest import random_model


def qpsk_scalar():
    m = bpsk_scalar_mac(1.0)
    return type(m)(m.link1, m.link2, qpsk(1), qpsk(1), 1.0)


class TestReport:
    """Diagnostics never change the verdict."""

    def test_diagnostics_ignored(self):
        rep = VerificationReport(["x"], [Check("a", True, 0.0, 1.0), Check("b", None, 9.0, None)])
        assert rep.all_passed and rep.failed == []

    def test_failure_listed(self):
        rep = VerificationReport(["x"], [Check("a", False, 2.0, 1.0), Check("b", True, 0.0, 1.0)])
        assert not rep.all_passed and rep.failed == ["a"]
        assert rep.to_dict()["checks"][0]["name"] == "a"

    def test_unknown_suite(self):
        with pytest.raises(ValueError, match="unknown suite"):
            run_verification("bogus", bpsk_scalar_mac(1.0), McConfig())

    def test_suite_names(self):
        assert SUITES == ("identity", "gradients", "lowsnr", "closed-forms")


class TestHelpers:
    """Properness test and exact-configuration choice."""

    def test_properness(self):
        assert not is_proper(bpsk_scalar_mac(1.0))
        assert is_proper(qpsk_scalar())

    def test_exact_config(self):
        cfg = McConfig()
        assert isinstance(exact_config(bpsk_scalar_mac(1.0), cfg), GaussHermite)
        assert isinstance(exact_config(random_model(1), cfg), GaussHermite)
        assert exact_config(random_model(1, n_r=3), cfg) is cfg


class TestSuites:
    """Each suite on models where its outcome is known."""

    def test_identity_single_user(self):
        checks = {c.name: c for c in identity_checks(single_user(bpsk_scalar_mac(1.0)),
                                                     GaussHermite(nodes=60))}
        assert checks["snr_identity"].passed and checks["conditional_identity"].passed
        assert checks["noncond_identity"].passed is None

    def test_identity_two_users_fails(self):
        """mmse plus the covariance term misses the interference cross term."""
        checks = {c.name: c for c in identity_checks(bpsk_scalar_mac(1.0), GaussHermite(nodes=60))}
        assert checks["snr_identity"].passed is False
        assert checks["chain_rule_12"].passed and checks["chain_rule_21"].passed
        alts = checks["snr_identity"].detail["alternatives"]
        assert abs(alts["cross_error"]["residual"]) < 1e-5

    def test_lowsnr_proper_passes(self):
        assert all(c.passed for c in lowsnr_checks(qpsk_scalar(), McConfig()))

    def test_lowsnr_improper_is_diagnostic(self):
        checks = {c.name: c for c in lowsnr_checks(bpsk_scalar_mac(1.0), McConfig())}
        assert checks["info_expansion"].passed is None
        assert "info_residual_shrink" not in checks
        assert checks["mmse_expansion"].passed is False

    def test_closed_forms(self):
        checks = closed_form_checks()
        failed = {c.name for c in checks if c.passed is False}
        assert failed == {f"d_info_equals_mmse[{p},{s:g}]"
                          for p in ("scaled1", "cond2", "guo") for s in (0.25, 1.0, 4.0)}
        half = {c.name: c.value for c in checks if c.name.startswith("d_info_equals_half")}
        for s in ("0.25", "1", "4"):
            assert abs(half[f"d_info_equals_half_mmse[guo,{s}]"]) < 1e-6
            assert abs(half[f"d_info_equals_half_mmse[cond2,{s}]"]) < 1e-6

    def test_tol_scale_loosens(self):
        rep = run_verification("closed-forms", bpsk_scalar_mac(1.0), McConfig(), tol_scale=1e6)
        assert rep.all_passed
