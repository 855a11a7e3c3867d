"""Classical coupled-mode solver on the characteristics-aligned grid.

One time step is a Strang split: the site-local terms over ``dz/2`` (linear
coupling and detuning exactly, Kerr terms by RK4 in the interaction picture),
a one-cell shift of ``a`` to the right and ``b`` to the left, and the local
terms over ``dz/2`` again.  Outside the grating the local linear part is the
identity, so unless the leads carry a Kerr coefficient only grating sites are
touched.

Fields leaving the domain are kept on the exterior lines (see ``_line``)
rather than being discarded, which makes the transmitted and reflected
content exact and lets short leads be used.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import kernels
from ._line import ExtendedLine
from .model import (FieldPair, GratingConfig, Grid, PerturbationField, PulseConfig,
                    as_perturbation, pulse_extent)

DEFAULT_MEM_BUDGET_MB = 1024
CONTAINMENT_TOL = 1e-4
CHECK_EVERY = 50
# pending-content levels at which the state is snapshotted as extra measurement times
MILESTONES = (1e-2, 1e-3)
BAND = 0.02
# classifier segment keeps the peak this many pulse extents away from both grating ends
EDGE_MARGIN = 3


class NumericalError(RuntimeError):
    """Non-finite field values; ``step`` is the first step at which they were seen."""

    def __init__(self, msg: str, step: int):
        super().__init__(f"{msg} (step {step})")
        self.step = step


class ContainmentError(RuntimeError):
    """Field energy still inside the grating (or yet to enter it) at the final step."""

    def __init__(self, residual: float, n_steps: int):
        super().__init__(
            f"residual energy {residual:.3e} of the input is still in or ahead of the grating after "
            f"{n_steps} steps (limit {CONTAINMENT_TOL:g}); lengthen the time window (n_t)")
        self.residual = residual
        self.n_steps = n_steps


def mem_budget_bytes() -> int:
    mb = float(os.environ.get("BRAGGSQUEEZE_MEM_BUDGET_MB", DEFAULT_MEM_BUDGET_MB))
    if not mb > 0:
        raise ValueError("BRAGGSQUEEZE_MEM_BUDGET_MB must be > 0")
    return int(mb * 2 ** 20)


def stride_for_budget(n_active: int, budget: Optional[int] = None) -> int:
    """Largest checkpoint stride whose replay window fits the memory budget.

    A window stores the background at both half-steps of every step: 8 reals
    per active site.
    """
    budget = mem_budget_bytes() if budget is None else budget
    return max(1, budget // (2 * 4 * 8 * max(n_active, 1)))


@dataclass(frozen=True, eq=False)
class Stepper:
    """Per-site coefficients and the active site range for one grating/grid pair."""

    grating: GratingConfig
    grid: Grid
    lo: int
    hi: int
    coefs: tuple
    h: float
    kern: object

    @classmethod
    def build(cls, g: GratingConfig, grid: Grid, backend: Optional[str] = None) -> "Stepper":
        if g.gamma_outside != 0.0:
            lo, hi = 0, grid.n_z
        else:
            sl = grid.grating_slice
            lo, hi = sl.start, sl.stop
        inside = grid.region_map[lo:hi] == 1
        delta = np.where(inside, g.delta, 0.0)
        kappa = np.where(inside, g.kappa, 0.0)
        gamma = np.where(inside, g.gamma, g.gamma_outside)
        h = 0.5 * grid.dz
        # propagator of the linear local terms over h/2 (the RK4IP midpoint)
        phase = np.exp(0.5j * h * delta)
        p = phase * np.cos(0.5 * h * kappa)
        q = phase * 1j * np.sin(0.5 * h * kappa)
        coefs = tuple(np.ascontiguousarray(c) for c in (p.real, p.imag, q.real, q.imag, gamma))
        return cls(g, grid, lo, hi, coefs, h, kernels.get(backend))

    @property
    def n_active(self) -> int:
        return self.hi - self.lo

    def local(self, line: ExtendedLine):
        self.kern.rk_step(*line.rows(self.lo, self.hi), *self.coefs, self.h)

    def step(self, line: ExtendedLine):
        self.local(line)
        line.advance()
        self.local(line)


def ncme_step(state: FieldPair, g: GratingConfig, grid: Grid, backend: Optional[str] = None) -> FieldPair:
    """Advance ``state`` by one time step; zeros flow in and outflow is dropped."""
    if len(state) != grid.n_z:
        raise ValueError("state does not match the grid")
    st = Stepper.build(g, grid, backend)
    line = ExtendedLine(grid.n_z, 0, 1)
    line.set_domain(state.to_rows())
    st.step(line)
    out = FieldPair.from_rows(line.domain())
    if not out.is_finite():
        raise NumericalError("non-finite field after ncme_step", 1)
    return out


# ----------------------------------------------------------------------------- content


def _content_rows(y0, y1, y2, y3) -> float:
    return float(np.sum(y0 * y0 + y1 * y1) + np.sum(y2 * y2 + y3 * y3))


def photon_content(f, grid: Grid, region: str = "whole") -> float:
    """Integral of ``|u_a|^2 + |u_b|^2`` over a region, in GW*cm/cm^2 for classical fields.

    Each sample carries weight ``dz`` (cell-centred samples; equal to the
    trapezoid rule for fields that vanish at the domain ends, and additive
    across regions).  For a ``PerturbationField`` the exterior lines count
    towards ``lead-in`` (left) and ``lead-out`` (right) as well as ``whole``.
    """
    sl = grid.region_slice(region)
    if isinstance(f, PerturbationField):
        pair = f.pair
    else:
        pair = f
    total = np.sum(np.abs(pair.u_a[sl]) ** 2) + np.sum(np.abs(pair.u_b[sl]) ** 2)
    if isinstance(f, PerturbationField):
        left = region in ("whole", "lead-in")
        right = region in ("whole", "lead-out", "leadout")
        if left:
            total += np.sum(np.abs(f.a_left) ** 2) + np.sum(np.abs(f.b_left) ** 2)
        if right:
            total += np.sum(np.abs(f.a_right) ** 2) + np.sum(np.abs(f.b_right) ** 2)
    return float(total) * grid.dz


# ----------------------------------------------------------------------------- trajectory


@dataclass(eq=False)
class TrajectoryStore:
    """Checkpointed classical run.

    ``checkpoints`` maps step index to the domain rows (Re a, Im a, Re b, Im b)
    every ``checkpoint_stride`` steps and at the final step; ``snapshots``
    holds extra states at measurement milestones.  ``exit_a[k]`` / ``exit_b[k]``
    are the values that left through the right / left edge during step ``k``.
    Per-step traces cover steps ``0..n_steps``.
    """

    grating: GratingConfig
    grid: Grid
    stepper: Stepper
    n_steps: int
    checkpoint_stride: int
    checkpoints: Dict[int, np.ndarray]
    snapshots: Dict[int, np.ndarray]
    exit_a: np.ndarray
    exit_b: np.ndarray
    peak_trace: np.ndarray
    peak_position: np.ndarray
    grating_trace: np.ndarray
    pending: Dict[int, float]
    input_content: float
    pulse: Optional[PulseConfig] = None
    milestones: Dict[float, int] = field(default_factory=dict)

    # -- states

    @property
    def initial(self) -> FieldPair:
        return FieldPair.from_rows(self.checkpoints[0])

    @property
    def final(self) -> PerturbationField:
        return self.extended_state(self.n_steps)

    def state(self, step: int) -> FieldPair:
        """Domain state after ``step`` steps (replayed if not stored)."""
        if not 0 <= step <= self.n_steps:
            raise IndexError(f"step {step} outside [0, {self.n_steps}]")
        for store in (self.checkpoints, self.snapshots):
            if step in store:
                return FieldPair.from_rows(store[step])
        k0 = (step // self.checkpoint_stride) * self.checkpoint_stride
        line = ExtendedLine(self.grid.n_z, k0, step, m=k0)
        line.set_domain(self.checkpoints[k0])
        while line.m < step:
            self.stepper.step(line)
        return FieldPair.from_rows(line.domain())

    def extended_state(self, step: int) -> PerturbationField:
        """State after ``step`` steps including the outflow on the exterior lines."""
        return PerturbationField(self.state(step), a_right=self.exit_a[:step][::-1],
                                 b_left=self.exit_b[:step][::-1])

    # -- replay

    @property
    def n_windows(self) -> int:
        return -(-self.n_steps // self.checkpoint_stride)

    def window_bounds(self, c: int):
        k0 = c * self.checkpoint_stride
        return k0, min(k0 + self.checkpoint_stride, self.n_steps)

    def window_buffer(self) -> np.ndarray:
        """Scratch space for ``replay_window``; reuse it across windows."""
        return np.empty((min(self.checkpoint_stride, self.n_steps), 2, 4, self.stepper.n_active))

    def replay_window(self, c: int, out: Optional[np.ndarray] = None) -> np.ndarray:
        """Background on the active sites before each half-step of window ``c``.

        Returns an array ``(steps, 2, 4, n_active)``; entry ``[i, s]`` is the
        state entering half-step ``s`` of step ``k0 + i``.  ``out`` (from
        ``window_buffer``) avoids allocating fresh memory for every window.
        """
        k0, k1 = self.window_bounds(c)
        st = self.stepper
        line = ExtendedLine(self.grid.n_z, k0, k1, m=k0)
        line.set_domain(self.checkpoints[k0])
        buf = self.window_buffer() if out is None else out
        buf = buf[:k1 - k0]
        rec = st.kern.rk_step_rec
        for i in range(k1 - k0):
            rec(*line.rows(st.lo, st.hi), *buf[i, 0], *st.coefs, st.h)
            line.advance()
            rec(*line.rows(st.lo, st.hi), *buf[i, 1], *st.coefs, st.h)
        if k1 in self.checkpoints and not np.array_equal(line.domain(), self.checkpoints[k1]):
            raise RuntimeError(f"replay of window {c} does not reproduce checkpoint {k1}")
        return buf

    # -- observables

    def residual(self) -> float:
        """Fraction of the input still in the grating at the final step."""
        return self.grating_trace[self.n_steps] / self.input_content

    def pending_fraction(self) -> float:
        """Fraction in the grating or still travelling towards it at the final step."""
        y = self.checkpoints[self.n_steps]
        n_in = self.grid.n_in
        lead = float(np.sum(y[0, :n_in] ** 2 + y[1, :n_in] ** 2)) * self.grid.dz
        return (self.grating_trace[self.n_steps] + lead) / self.input_content

    @property
    def contained(self) -> bool:
        return self.pending_fraction() < CONTAINMENT_TOL

    def require_contained(self):
        if not self.contained:
            raise ContainmentError(self.pending_fraction(), self.n_steps)

    def measurement_steps(self):
        """Steps at which the output is measured: milestone snapshots and the final step."""
        return sorted(set(self.milestones.values()) | {self.n_steps})


def evolve(init: FieldPair, g: GratingConfig, grid: Grid, stride: Optional[int] = None, *,
           pulse: Optional[PulseConfig] = None, backend: Optional[str] = None,
           stop_when_contained: bool = True, check_every: int = CHECK_EVERY) -> TrajectoryStore:
    """Run the classical equations from ``init`` for up to ``grid.n_t`` steps.

    With ``stop_when_contained`` the run ends at the first check (every
    ``check_every`` steps) where less than ``CONTAINMENT_TOL`` of the input is
    in the grating or still ahead of it.  A run that reaches ``n_t`` first is
    returned as is; ``transmission`` and the quantum measurements then raise
    ``ContainmentError``.
    """
    if len(init) != grid.n_z:
        raise ValueError("initial state does not match the grid")
    if not init.is_finite():
        raise NumericalError("non-finite initial state", 0)
    st = Stepper.build(g, grid, backend)
    stride = stride_for_budget(st.n_active) if stride is None else int(stride)
    if stride < 1:
        raise ValueError("checkpoint stride must be >= 1")
    n, dz, n_t = grid.n_z, grid.dz, grid.n_t
    gs = grid.grating_slice
    line = ExtendedLine(n, 0, n_t)
    line.set_domain(init.to_rows())
    e0 = photon_content(init, grid)

    peak = np.zeros(n_t + 1)
    where = np.zeros(n_t + 1, dtype=np.int32)
    gcontent = np.zeros(n_t + 1)
    stats = st.kern.intensity_stats

    def record(k):
        pk, j, tot = stats(*line.rows(gs.start, gs.stop))
        if not math.isfinite(tot):
            raise NumericalError("non-finite field in the grating", k)
        peak[k] = pk
        where[k] = j
        gcontent[k] = tot * dz

    record(0)
    checkpoints = {0: line.domain()}
    snapshots: Dict[int, np.ndarray] = {}
    pending: Dict[int, float] = {}
    milestones: Dict[float, int] = {}
    check_leads = g.gamma_outside != 0.0
    k = 0
    while k < n_t:
        st.step(line)
        k += 1
        record(k)
        if k % stride == 0:
            checkpoints[k] = line.domain()
        if k % check_every == 0 or k == n_t:
            if check_leads and not np.isfinite(line.domain()).all():
                raise NumericalError("non-finite field in the leads", k)
            if e0 > 0:
                ya = line.rows(0, grid.n_in)
                frac = (gcontent[k] + _content_rows(ya[0], ya[1], 0.0, 0.0) * dz) / e0
            else:
                frac = 0.0
            pending[k] = frac
            for level in MILESTONES:
                if level not in milestones and frac < level:
                    milestones[level] = k
                    snapshots[k] = line.domain()
            if stop_when_contained and frac < CONTAINMENT_TOL:
                break
    checkpoints[k] = line.domain()
    exit_a = line.a_right()[:k][::-1].copy()
    exit_b = line.b_left()[:k][::-1].copy()
    return TrajectoryStore(grating=g, grid=grid, stepper=st, n_steps=k, checkpoint_stride=stride,
                           checkpoints=checkpoints, snapshots=snapshots, exit_a=exit_a, exit_b=exit_b,
                           peak_trace=peak[:k + 1].copy(), peak_position=where[:k + 1].copy(),
                           grating_trace=gcontent[:k + 1].copy(),
                           pending=pending, input_content=e0, pulse=pulse, milestones=milestones)


# ----------------------------------------------------------------------------- observables


@dataclass(frozen=True)
class ClassicalSummary:
    transmission: float
    reflection: float
    residual: float
    input_content: float
    n_steps: int


def transmission(traj: TrajectoryStore) -> float:
    """Transmitted fraction of the input photon content (lead-out plus outflow to the right)."""
    return classical_summary(traj).transmission


def reflection(traj: TrajectoryStore) -> float:
    return classical_summary(traj).reflection


def classical_summary(traj: TrajectoryStore) -> ClassicalSummary:
    traj.require_contained()
    if traj.input_content <= 0:
        raise ValueError("transmission is undefined for a zero input field")
    fin = traj.final
    e0 = traj.input_content
    grid = traj.grid
    return ClassicalSummary(transmission=photon_content(fin, grid, "lead-out") / e0,
                            reflection=photon_content(fin, grid, "lead-in") / e0,
                            residual=photon_content(fin, grid, "grating") / e0,
                            input_content=e0, n_steps=traj.n_steps)


# ----------------------------------------------------------------------------- classifier


@dataclass(frozen=True)
class PeakClassification:
    """Outcome of the peak-trace classifier.

    ``label`` is ``decay``, ``flat`` or ``oscillate`` according to whether the
    in-grating peak first leaves the band ``reference*(1 +- band)`` downwards,
    never leaves it, or leaves it upwards.  ``n_maxima`` counts local maxima
    whose rise and fall both exceed the band.
    """

    label: str
    n_maxima: int
    start: int
    end: int
    reference: float
    exit_step: Optional[int]


def entry_segment(traj: TrajectoryStore):
    """Steps during which the in-grating peak lies ``EDGE_MARGIN`` pulse extents from both ends.

    Returns ``(start, end)``; this excludes the entry and exit transients, including interference
    with light reflected at the far end.
    """
    if traj.pulse is None:
        raise ValueError("trajectory has no pulse configuration")
    grid = traj.grid
    margin = int(math.ceil(EDGE_MARGIN * pulse_extent(traj.pulse, traj.grating) / grid.dz))
    pos = traj.peak_position
    inside = np.flatnonzero(pos >= margin)
    if inside.size == 0:
        return len(pos) - 1, len(pos) - 1
    start = int(inside[0])
    out = np.flatnonzero(pos[start:] >= grid.n_grating - margin)
    end = start + int(out[0]) if out.size else len(pos) - 1
    return start, end


def count_maxima(trace: np.ndarray, tol: float) -> int:
    """Local maxima with a rise and a subsequent fall of at least ``tol`` each."""
    if trace.size == 0:
        return 0
    count = 0
    lo = hi = trace[0]
    rising = False
    for v in trace:
        if rising:
            if v > hi:
                hi = v
            elif hi - v >= tol:
                count += 1
                rising = False
                lo = v
        else:
            if v < lo:
                lo = v
            elif v - lo >= tol:
                rising = True
                hi = v
    return count


def classify_trace(trace: np.ndarray, start: int, end: int, band: float = BAND) -> PeakClassification:
    seg = np.asarray(trace[start:end + 1], dtype=float)
    ref = float(seg[0])
    out = np.flatnonzero(np.abs(seg - ref) > band * ref)
    if out.size == 0:
        label, exit_step = "flat", None
    else:
        i = int(out[0])
        label = "decay" if seg[i] < ref else "oscillate"
        exit_step = start + i
    return PeakClassification(label=label, n_maxima=count_maxima(seg, band * ref), start=start,
                              end=end, reference=ref, exit_step=exit_step)


def classify(traj: TrajectoryStore, band: float = BAND) -> PeakClassification:
    start, end = entry_segment(traj)
    return classify_trace(traj.peak_trace, start, end, band)
