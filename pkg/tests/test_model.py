import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from braggsqueeze.classical import photon_content
from braggsqueeze.model import (GRATING, LEAD_IN, LEAD_OUT, ConfigError, FieldPair, GratingConfig,
                                PerturbationField, PulseConfig, build_grid, max_dz, pulse_extent,
                                sech_pulse, sech_width)


def test_default_resolution_bound():
    g, p = GratingConfig(), PulseConfig(fwhm=60.0)
    grid = build_grid(g, p)
    assert grid.dz <= 0.005 + 1e-15
    assert grid.dt * g.v_g == pytest.approx(grid.dz, rel=1e-15)
    assert grid.n_z == grid.n_in + grid.n_grating + grid.n_out
    assert grid.n_grating * grid.dz == pytest.approx(g.grating_length, rel=1e-12)


def test_no_grating_bound_from_pulse_only():
    g, p = GratingConfig(kappa=0.0), PulseConfig(fwhm=60.0)
    assert max_dz(g, p) == pytest.approx(pulse_extent(p, g) / 100)
    assert build_grid(g, p).dz <= max_dz(g, p) * (1 + 1e-12)


def test_region_map_partitions_domain():
    grid = build_grid(GratingConfig(grating_length=3.0), PulseConfig())
    rm = grid.region_map
    assert set(np.unique(rm)) == {LEAD_IN, GRATING, LEAD_OUT}
    assert (rm[grid.lead_in_slice] == LEAD_IN).all()
    assert (rm[grid.grating_slice] == GRATING).all()
    assert (rm[grid.lead_out_slice] == LEAD_OUT).all()
    assert not rm.flags.writeable


def test_build_grid_deterministic():
    a = build_grid(GratingConfig(), PulseConfig())
    b = build_grid(GratingConfig(), PulseConfig())
    assert a.describe() == b.describe()
    assert np.array_equal(a.region_map, b.region_map)


def test_window_covers_slow_transit():
    g, p = GratingConfig(), PulseConfig()
    grid = build_grid(g, p)
    assert grid.n_t * grid.dz >= 2 * 5 * g.grating_length


@pytest.mark.parametrize("kw, match", [
    ({"grating_length": 0.0}, "grating_length"),
    ({"kappa": -1.0}, "kappa"),
    ({"v_g": 0.0}, "v_g"),
    ({"lead_in": -1.0}, "lead_in"),
])
def test_grating_validation(kw, match):
    with pytest.raises(ConfigError, match=match):
        GratingConfig(**kw)


def test_pulse_validation():
    with pytest.raises(ConfigError):
        PulseConfig(fwhm=0.0)
    with pytest.raises(ConfigError):
        PulseConfig(peak_intensity=-1.0)


def test_short_leads_rejected():
    with pytest.raises(ConfigError, match="lead"):
        build_grid(GratingConfig(lead_in=2.0), PulseConfig())
    with pytest.raises(ConfigError, match="centre"):
        build_grid(GratingConfig(), PulseConfig(center=0.5))


def test_dz_bound_enforced():
    with pytest.raises(ConfigError, match="resolution"):
        build_grid(GratingConfig(), PulseConfig(), dz=0.01)


def test_sech_peak_fwhm_and_content():
    g, p = GratingConfig(), PulseConfig(peak_intensity=3.0)
    grid = build_grid(g, p, safety=4.0)
    f = sech_pulse(p, g, grid)
    z0, c = sech_width(p, g), p.center_in(g)
    amp = lambda z: math.sqrt(p.peak_intensity) / np.cosh((z - c) / z0)
    assert np.allclose(f.u_a, amp(grid.z), rtol=1e-14, atol=0)
    assert amp(c) ** 2 == pytest.approx(3.0)
    assert amp(c + g.v_g * p.fwhm / 2) ** 2 == pytest.approx(1.5, rel=1e-12)
    assert not f.u_b.any()
    # midpoint quadrature converges spectrally; the residue is the tail cut at the left edge
    tail = 2 * math.exp(-2 * c / z0)
    assert photon_content(f, grid) == pytest.approx(2 * z0 * p.peak_intensity, rel=tail + 1e-12)


def test_sech_symmetric_on_symmetric_grid():
    g, p = GratingConfig(), PulseConfig()
    grid = build_grid(g, p)
    c = p.center_in(g)
    k = int(round(c / grid.dz))
    assert abs(c - k * grid.dz) < 1e-12  # centre on a cell face
    u = sech_pulse(p, g, grid).u_a
    left, right = u[k - 500:k], u[k:k + 500][::-1]
    assert np.max(np.abs(left - right)) <= 1e-15 * np.max(np.abs(u))


def test_fieldpair_checks():
    with pytest.raises(ValueError):
        FieldPair(np.zeros(3), np.zeros(4))
    f = FieldPair(np.ones(3), np.zeros(3))
    assert f.is_finite()
    assert not FieldPair(np.array([np.nan, 0, 0]), np.zeros(3)).is_finite()
    assert np.array_equal(FieldPair.from_rows(f.to_rows()).u_a, f.u_a)


def test_perturbation_field_algebra():
    pair = FieldPair(np.arange(3) + 0j, np.zeros(3, complex))
    f = PerturbationField(pair, a_right=[1.0, 2.0, 0.0, 0.0])
    assert f.a_right.shape == (2,)  # trailing zeros trimmed
    g = PerturbationField(pair, a_right=[0.0, 0.0, 3.0])
    s = f + g
    assert np.array_equal(s.a_right, [1.0, 2.0, 3.0])
    assert np.array_equal((s - g).a_right, f.a_right)
    assert np.array_equal(f.scaled(2.0).u_a, 2 * pair.u_a)


@settings(max_examples=25, deadline=None)
@given(fwhm=st.floats(5.0, 200.0), kappa=st.floats(0.0, 30.0), vg=st.floats(0.01, 0.05))
def test_grid_invariants_property(fwhm, kappa, vg):
    p = PulseConfig(fwhm=fwhm)
    ext = vg * fwhm
    g = GratingConfig(kappa=kappa, v_g=vg, grating_length=1.0, lead_in=4 * ext, lead_out=2 * ext)
    grid = build_grid(g, p)
    assert grid.dz <= max_dz(g, p) * (1 + 1e-12)
    assert grid.dt * vg == pytest.approx(grid.dz, rel=1e-14)
    assert grid.n_z == grid.region_map.size
