import numpy as np
import pytest

from braggsqueeze.classical import photon_content
from braggsqueeze.experiments import run_setup, simulate
from braggsqueeze.measurement import (MeasurementError, photon_number_projection, squeezing_ratio,
                                      vacuum_variance)
from braggsqueeze.model import FieldPair


@pytest.fixture
def kerr_setup(small_setup):
    return small_setup.with_grating(gamma=0.05).with_pulse(peak_intensity=20.0)


def test_vacuum_variance_is_quarter_content(small_setup, rng):
    grid = small_setup.grid()
    a = rng.standard_normal(grid.n_z) + 1j * rng.standard_normal(grid.n_z)
    f = FieldPair(a, 0.5 * a)
    assert vacuum_variance(f, grid) == pytest.approx(0.25 * 1.25 * grid.dz * np.sum(abs(a) ** 2))
    # Parseval: the same sum from the discrete spectrum
    spectrum = np.sum(abs(np.fft.fft(a)) ** 2) / grid.n_z
    assert vacuum_variance(f, grid) == pytest.approx(0.25 * 1.25 * grid.dz * spectrum, rel=1e-12)
    with pytest.raises(MeasurementError):
        vacuum_variance(FieldPair.zeros(grid.n_z), grid)


def test_scale_invariance_exact(kerr_setup):
    traj, _ = simulate(kerr_setup)
    r1 = squeezing_ratio(traj)
    r2 = squeezing_ratio(traj, scale=1e3)
    assert r2.ratio == pytest.approx(r1.ratio, rel=1e-14)


def test_linear_grating_no_squeezing(small_setup):
    res = run_setup(small_setup.with_grating(gamma=0.0))
    assert res.ratio_final == pytest.approx(1.0, abs=1e-12)
    assert res.ratio_min == pytest.approx(1.0, abs=1e-12)


def test_kerr_only_no_squeezing(kerr_setup):
    res = run_setup(kerr_setup.with_grating(kappa=0.0))
    assert res.transmission == pytest.approx(1.0, abs=1e-12)
    assert res.ratio_final == pytest.approx(1.0, abs=1e-10)


def test_whole_domain_projection_is_shot_noise(kerr_setup):
    """Total photon number is conserved, so its noise equals the input shot noise."""
    res = run_setup(kerr_setup, region="whole")
    assert res.ratio_final == pytest.approx(1.0, abs=1e-9)


def test_leadout_ratio_differs_from_one(kerr_setup):
    res = run_setup(kerr_setup)
    assert abs(res.ratio_final - 1) > 1e-6
    assert res.ratio_min <= res.ratio_final
    assert res.ratios[-1] == res.ratio_final
    assert res.measure_times == tuple(sorted(res.measure_times))


def test_kerr_in_leads_without_grating_is_neutral(kerr_setup):
    s = kerr_setup.with_grating(kappa=0.0, gamma_outside=kerr_setup.grating.gamma)
    assert run_setup(s).ratio_final == pytest.approx(1.0, abs=1e-10)


def test_gamma_outside_changes_classical_input(kerr_setup):
    """Kerr in the lead-in chirps the pulse before it reaches the grating."""
    a = run_setup(kerr_setup)
    b = run_setup(kerr_setup.with_grating(gamma_outside=kerr_setup.grating.gamma))
    assert a.transmission != b.transmission


def test_vg_invariance(kerr_setup):
    ext = kerr_setup.grating.v_g * kerr_setup.pulse.fwhm
    rs = []
    for vg in (0.015, 0.0207, 0.03):
        s = kerr_setup.with_grating(v_g=vg).with_pulse(fwhm=ext / vg)
        rs.append(run_setup(s).ratio_final)
    assert max(abs(r / rs[1] - 1) for r in rs) <= 1e-3


def test_projection_region_validation(kerr_setup):
    traj, _ = simulate(kerr_setup)
    with pytest.raises(ValueError):
        photon_number_projection(traj, "grating")
    f = photon_number_projection(traj, "whole")
    assert photon_content(f, traj.grid) == pytest.approx(traj.input_content, rel=1e-6)


def test_unit_convention_invariance(kerr_setup):
    """Scaling amplitudes by c and gamma by 1/c^2 leaves gamma |U|^2 and hence R unchanged."""
    c2 = 4.0
    a = run_setup(kerr_setup)
    s = kerr_setup.with_grating(gamma=kerr_setup.grating.gamma / c2).with_pulse(
        peak_intensity=kerr_setup.pulse.peak_intensity * c2)
    b = run_setup(s)
    assert b.ratio_final == pytest.approx(a.ratio_final, rel=1e-12)
    assert b.transmission == pytest.approx(a.transmission, rel=1e-12)
