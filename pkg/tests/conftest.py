"""Shared fixtures and the acceptance summary printed at the end of the run."""

import numpy as np
import pytest

from immse.model import MacModel, UserLink, bpsk, qpsk

ACCEPTANCE_LINES: list[str] = []


def random_complex(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_precoder(rng, n_t, power=None):
    P = random_complex(rng, (n_t, n_t))
    budget = n_t if power is None else power
    return P * np.sqrt(budget) / np.linalg.norm(P)


def random_model(seed, n_r=2, n_t=2, const="qpsk", snr=1.0, real=False):
    rng = np.random.default_rng(seed)
    make = {"qpsk": qpsk, "bpsk": bpsk}[const]
    mats = []
    for _ in range(2):
        H = random_complex(rng, (n_r, n_t))
        P = random_precoder(rng, n_t, 0.8 * n_t)
        if real:
            H, P = H.real.copy(), P.real.copy()
        mats.append(UserLink(H, P))
    return MacModel(mats[0], mats[1], make(n_t), make(n_t), snr)


@pytest.fixture
def qpsk22():
    return random_model(11, const="qpsk")


@pytest.fixture
def bpsk22():
    return random_model(12, const="bpsk")


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
