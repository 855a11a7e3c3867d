import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from braggsqueeze.classical import (ContainmentError, NumericalError, classical_summary,
                                    classify_trace, count_maxima, evolve, ncme_step,
                                    photon_content, stride_for_budget, transmission)
from braggsqueeze.experiments import simulate
from braggsqueeze.model import FieldPair, GratingConfig, PulseConfig, Setup, build_grid, sech_pulse
from braggsqueeze.storage import load_trajectory, save_trajectory


def _run(setup, **kw):
    grid = setup.grid()
    init = sech_pulse(setup.pulse, setup.grating, grid)
    return evolve(init, setup.grating, grid, pulse=setup.pulse, **kw), grid


def test_zero_field_fixed_point(small_setup):
    grid = small_setup.grid()
    z = FieldPair.zeros(grid.n_z)
    out = ncme_step(z, small_setup.grating, grid)
    assert not out.u_a.any() and not out.u_b.any()


def test_uniform_detuning_phase():
    g = GratingConfig(kappa=0.0, gamma=0.0, delta=15.0, grating_length=2.0, lead_in=2.0,
                      lead_out=1.0)
    p = PulseConfig(fwhm=20.0)
    grid = build_grid(g, p)
    f = FieldPair(np.ones(grid.n_z, complex), np.zeros(grid.n_z, complex))
    n = 20
    for _ in range(n):
        f = ncme_step(f, g, grid)
    deep = slice(grid.n_in + n + 1, grid.n_in + grid.n_grating)
    # inside the grating the carrier picks up exp(i delta v_g t)
    assert np.allclose(f.u_a[deep], np.exp(1j * 15.0 * g.v_g * n * grid.dt), atol=1e-13)


def test_pure_spm_phase():
    g = GratingConfig(kappa=0.0, delta=0.0, gamma=0.05, grating_length=2.0, lead_in=2.0,
                      lead_out=1.0)
    grid = build_grid(g, PulseConfig(fwhm=20.0))
    amp = 3.0
    f = FieldPair(np.full(grid.n_z, amp, complex), np.zeros(grid.n_z, complex))
    n = 20
    for _ in range(n):
        f = ncme_step(f, g, grid)
    deep = slice(grid.n_in + n + 1, grid.n_in + grid.n_grating)
    assert np.allclose(np.abs(f.u_a[deep]), amp, atol=1e-13)
    expect = amp * np.exp(1j * 0.05 * amp ** 2 * g.v_g * n * grid.dt)
    assert np.allclose(f.u_a[deep], expect, atol=1e-11)


def test_photon_content_regions(small_setup):
    grid = small_setup.grid()
    f = sech_pulse(small_setup.pulse, small_setup.grating, grid)
    parts = sum(photon_content(f, grid, r) for r in ("lead-in", "grating", "lead-out"))
    assert parts == pytest.approx(photon_content(f, grid), rel=1e-14)
    assert photon_content(FieldPair.zeros(grid.n_z), grid) == 0.0


def test_conservation_and_balance(small_setup):
    setup = small_setup.with_grating(gamma=0.05).with_pulse(peak_intensity=20.0)
    traj, _ = simulate(setup)
    grid = traj.grid
    e0 = traj.input_content
    assert traj.contained
    fin = traj.final
    assert abs(photon_content(fin, grid) / e0 - 1) <= 1e-6
    cs = classical_summary(traj)
    assert cs.transmission + cs.reflection + cs.residual == pytest.approx(1.0, abs=1e-6)
    for k in sorted(traj.checkpoints):
        st = traj.extended_state(k)
        assert abs(photon_content(st, grid) / e0 - 1) <= 1e-6


def test_no_grating_transmits_everything(small_setup):
    traj, _ = _run(small_setup.with_grating(kappa=0.0))
    assert transmission(traj) == pytest.approx(1.0, abs=1e-12)


def test_gap_centre_reflects(small_setup):
    setup = small_setup.with_grating(delta=0.0, gamma=0.0, grating_length=2.0)
    traj, _ = _run(setup)
    # a short pulse is broadband, so only most of it is reflected
    assert transmission(traj) < 0.2


def test_gauge_phase(small_setup):
    setup = small_setup.with_grating(gamma=0.05).with_pulse(peak_intensity=10.0)
    grid = setup.grid()
    init = sech_pulse(setup.pulse, setup.grating, grid)
    rot = FieldPair(init.u_a * np.exp(0.7j), init.u_b)
    a = evolve(init, setup.grating, grid, stride=100)
    b = evolve(rot, setup.grating, grid, stride=100)
    assert a.n_steps == b.n_steps
    for k in a.checkpoints:
        x, y = a.state(k), b.state(k)
        assert np.allclose(np.abs(x.u_a), np.abs(y.u_a), rtol=0, atol=1e-13)
        assert np.allclose(np.abs(x.u_b), np.abs(y.u_b), rtol=0, atol=1e-13)


def test_replay_is_bit_exact(small_setup):
    setup = small_setup.with_grating(gamma=0.05).with_pulse(peak_intensity=10.0)
    traj, grid = _run(setup, stride=37)
    ref, _ = _run(setup, stride=1)
    for k in (0, 5, 36, 37, 38, 100, traj.n_steps):
        assert np.array_equal(traj.state(k).u_a, ref.state(k).u_a)
        assert np.array_equal(traj.state(k).u_b, ref.state(k).u_b)
    buf = traj.replay_window(1)
    assert buf.shape[0] == 37


def test_stride_from_budget():
    assert stride_for_budget(1000, budget=64 * 1000 * 10) == 10
    assert stride_for_budget(10 ** 9, budget=1) == 1


def test_containment_error(small_setup):
    traj, _ = _run(small_setup.with_(n_t=200))
    assert not traj.contained
    with pytest.raises(ContainmentError, match="residual"):
        transmission(traj)


def test_nonfinite_flagged(small_setup):
    grid = small_setup.grid()
    f = sech_pulse(small_setup.pulse, small_setup.grating, grid)
    a = f.u_a.copy()
    a[3] = np.nan
    with pytest.raises(NumericalError):
        evolve(FieldPair(a, f.u_b), small_setup.grating, grid)
    with pytest.raises(NumericalError):
        ncme_step(FieldPair(a, f.u_b), small_setup.grating, grid)


def test_backends_bitwise(small_setup):
    setup = small_setup.with_grating(gamma=0.05).with_pulse(peak_intensity=10.0)
    a, _ = _run(setup, backend="numba")
    b, _ = _run(setup, backend="numpy")
    assert a.n_steps == b.n_steps
    assert np.array_equal(a.final.u_a, b.final.u_a)
    assert np.array_equal(a.peak_trace, b.peak_trace)


def test_trajectory_roundtrip(tmp_path, small_setup):
    traj, _ = simulate(small_setup.with_grating(gamma=0.05))
    traj = evolve(traj.initial, traj.grating, traj.grid, stride=50, pulse=traj.pulse)
    save_trajectory(traj, tmp_path / "t.bin")
    back = load_trajectory(tmp_path / "t.bin")
    assert back.n_steps == traj.n_steps
    assert np.array_equal(back.final.u_a, traj.final.u_a)
    assert np.array_equal(back.state(75).u_b, traj.state(75).u_b)
    assert np.array_equal(back.peak_position, traj.peak_position)
    assert transmission(back) == transmission(traj)


# ----------------------------------------------------------------------------- classifier


def test_classify_trace_regimes():
    t = np.linspace(0, 1, 500)
    assert classify_trace(1 - 0.2 * t, 0, 499).label == "decay"
    assert classify_trace(1 + 0.005 * np.sin(40 * t), 0, 499).label == "flat"
    osc = classify_trace(1 + 0.3 * np.sin(2 * np.pi * 3 * t), 0, 499)
    assert osc.label == "oscillate" and osc.n_maxima == 3


def test_count_maxima_ignores_ripple():
    t = np.linspace(0, 1, 2000)
    y = 1 + 0.3 * np.sin(2 * np.pi * 2 * t) + 0.005 * np.sin(2 * np.pi * 300 * t)
    assert count_maxima(y, 0.02) == 2


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=0, max_size=60), st.floats(0.01, 5))
def test_count_maxima_bounded(values, tol):
    y = np.array(values)
    n = count_maxima(y, tol)
    strict = sum(1 for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] >= y[i + 1])
    assert 0 <= n <= max(strict, 0) + 1
    assert count_maxima(y + 3.0, tol) == n
