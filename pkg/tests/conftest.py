import os

import numpy as np
import pytest

from braggsqueeze.model import GratingConfig, PulseConfig, Setup

# a short pulse and a short grating keep the grid near 1000 cells
SMALL_PULSE = PulseConfig(fwhm=20.0, peak_intensity=2.0)
SMALL_GRATING = GratingConfig(grating_length=1.0, lead_in=2.0, lead_out=1.0)


@pytest.fixture
def small_setup() -> Setup:
    return Setup(grating=SMALL_GRATING, pulse=SMALL_PULSE)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def local_coefs(n, delta, kappa, gamma, h):
    """Per-site coefficients of the local integrator, as the stepper builds them."""
    phase = np.exp(0.5j * h * delta)
    p = phase * np.cos(0.5 * h * kappa) * np.ones(n)
    q = phase * 1j * np.sin(0.5 * h * kappa) * np.ones(n)
    return tuple(np.ascontiguousarray(c) for c in (p.real, p.imag, q.real, q.imag,
                                                   np.full(n, float(gamma))))


def random_rows(rng, n, scale=1.0):
    return [np.ascontiguousarray(scale * rng.standard_normal(n)) for _ in range(4)]


def pytest_terminal_summary(terminalreporter):
    try:
        from acceptance_support import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for n in sorted(REPORT):
            terminalreporter.write_line(REPORT[n])
