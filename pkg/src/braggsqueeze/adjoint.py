"""Linearized fluctuation and adjoint dynamics around a classical background.

Perturbations are carried per site as real 4-vectors (Re u_a, Im u_a, Re u_b,
Im u_b).  The Kerr couplings to the conjugate fields make the maps linear
over the reals only, and the 4-vector form represents that without a
redundant conjugate copy.

The linearized step is the exact derivative of the classical step, evaluated
at the classical stage values of each half-step, so it integrates the
fluctuation equations with the same splitting and the same local scheme.
The adjoint step is its transpose with respect to the real pairing
``inner_product``.  Stepping the adjoint system backward in time therefore
satisfies ``<w(k+1) | d(k+1)> = <w(k) | d(k)>`` to rounding for any
linearized solution ``d``; stepping it forward applies the inverse transpose.
"""
from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ._line import ExtendedLine
from .classical import NumericalError, Stepper, TrajectoryStore
from .model import FieldPair, GratingConfig, Grid, PerturbationField, as_perturbation

__all__ = ["PerturbationField", "linearized_step", "adjoint_step", "back_propagate",
           "back_propagate_many", "propagate", "inner_product"]

FORWARD, BACKWARD = "forward", "backward"


def _check_direction(direction: str):
    if direction not in (FORWARD, BACKWARD):
        raise ValueError(f"direction must be 'forward' or 'backward', not {direction!r}")


def _exterior_len(f: PerturbationField) -> int:
    return max(v.shape[0] for v in f.exteriors().values())


def _load(f: PerturbationField, n: int, m_lo: int, m_hi: int, m: int) -> ExtendedLine:
    line = ExtendedLine(n, m_lo, m_hi, m=m, pad=_exterior_len(f) + 1)
    line.set_domain(f.pair.to_rows())
    line.load_exterior(**f.exteriors())
    return line


def _unload(line: ExtendedLine) -> PerturbationField:
    out = PerturbationField(FieldPair.from_rows(line.domain()), a_left=line.a_left(),
                            a_right=line.a_right(), b_left=line.b_left(), b_right=line.b_right())
    if not out.is_finite():
        raise NumericalError("non-finite perturbation", line.m)
    return out


def _half_backgrounds(st: Stepper, background: FieldPair) -> Tuple[np.ndarray, np.ndarray]:
    """Active-site background entering each half-step of the step that starts at ``background``."""
    line = ExtendedLine(st.grid.n_z, 0, 1)
    line.set_domain(background.to_rows())
    x0 = np.stack(line.rows(st.lo, st.hi))
    st.local(line)
    line.advance()
    x1 = np.stack(line.rows(st.lo, st.hi))
    return x0, x1


def _one_step(kind: str, f, background: FieldPair, g: GratingConfig, grid: Grid,
              direction: str, backend: Optional[str]) -> PerturbationField:
    _check_direction(direction)
    f = as_perturbation(f)
    if len(f) != grid.n_z or len(background) != grid.n_z:
        raise ValueError("field or background does not match the grid")
    st = Stepper.build(g, grid, backend)
    x0, x1 = _half_backgrounds(st, background)
    k = st.kern
    if direction == FORWARD:
        fn = k.rk_tangent if kind == "tangent" else k.rk_adjoint_forward
        line = _load(f, grid.n_z, 0, 1, 0)
        fn(*line.rows(st.lo, st.hi), *x0, *st.coefs, st.h)
        line.advance()
        fn(*line.rows(st.lo, st.hi), *x1, *st.coefs, st.h)
    else:
        fn = k.rk_tangent_inverse if kind == "tangent" else k.rk_adjoint
        line = _load(f, grid.n_z, 0, 1, 1)
        fn(*line.rows(st.lo, st.hi), *x1, *st.coefs, st.h)
        line.retreat()
        fn(*line.rows(st.lo, st.hi), *x0, *st.coefs, st.h)
    return _unload(line)


def linearized_step(p, background: FieldPair, g: GratingConfig, grid: Grid,
                    direction: str = FORWARD, backend: Optional[str] = None) -> PerturbationField:
    """One step of the linearized fluctuation equations around ``background``.

    ``background`` is the classical state at the start of the step.
    ``direction='backward'`` applies the exact inverse of the forward step.
    """
    return _one_step("tangent", p, background, g, grid, direction, backend)


def adjoint_step(a, background: FieldPair, g: GratingConfig, grid: Grid,
                 direction: str = BACKWARD, backend: Optional[str] = None) -> PerturbationField:
    """One step of the adjoint equations across the step that starts at ``background``.

    ``backward`` maps the adjoint state at the end of the step to its start
    (the transpose of ``linearized_step``: local half-steps in reverse order,
    shifts reversed); ``forward`` is the inverse of that map.
    """
    return _one_step("adjoint", a, background, g, grid, direction, backend)


def inner_product(f, g, grid: Grid) -> float:
    """Real pairing ``sum dz Re(conj(f_a) g_a + conj(f_b) g_b)``, exterior lines included."""
    f = as_perturbation(f)
    g = as_perturbation(g)
    if len(f) != len(g) or len(f) != grid.n_z:
        raise ValueError("fields do not match the grid")
    total = np.vdot(f.u_a, g.u_a).real + np.vdot(f.u_b, g.u_b).real
    for name in ("a_left", "a_right", "b_left", "b_right"):
        x, y = getattr(f, name), getattr(g, name)
        k = min(x.shape[0], y.shape[0])
        total += np.vdot(x[:k], y[:k]).real
    return float(total) * grid.dz


def back_propagate_many(items: Sequence[Tuple[int, PerturbationField]],
                        traj: TrajectoryStore) -> List[PerturbationField]:
    """Solve the adjoint system backward from each ``(step, f)`` to step 0.

    All items share one backward sweep over the trajectory; each window of
    background is replayed from its checkpoint once.
    """
    st = traj.stepper
    n = traj.grid.n_z
    lines = []
    for T, f in items:
        f = as_perturbation(f)
        if not 0 <= T <= traj.n_steps:
            raise ValueError(f"measurement step {T} outside the trajectory (0..{traj.n_steps})")
        if len(f) != n:
            raise ValueError("projection does not match the trajectory grid")
        lines.append((T, _load(f, n, 0, T, T)))
    t_max = max((T for T, _ in items), default=0)
    adj = st.kern.rk_adjoint
    lo, hi, coefs, h = st.lo, st.hi, st.coefs, st.h
    scratch = traj.window_buffer()
    for c in range(traj.n_windows - 1, -1, -1):
        k0, _ = traj.window_bounds(c)
        if k0 >= t_max:
            continue
        buf = traj.replay_window(c, scratch)
        for i in range(buf.shape[0] - 1, -1, -1):
            k = k0 + i
            for T, line in lines:
                if k >= T:
                    continue
                adj(*line.rows(lo, hi), *buf[i, 1], *coefs, h)
                line.retreat()
                adj(*line.rows(lo, hi), *buf[i, 0], *coefs, h)
    return [_unload(line) for _, line in lines]


def back_propagate(f, traj: TrajectoryStore, step: Optional[int] = None) -> PerturbationField:
    """Back-propagate a projection defined at ``step`` (default: final step) to step 0."""
    step = traj.n_steps if step is None else step
    return back_propagate_many([(step, f)], traj)[0]


def propagate(f, traj: TrajectoryStore, steps: Iterable[int], kind: str = "tangent",
              start: int = 0) -> Dict[int, PerturbationField]:
    """Evolve ``f`` forward from ``start`` with the linearized or adjoint equations.

    ``kind`` is ``tangent`` (linearized fluctuations) or ``adjoint`` (adjoint
    system forward in time).  Returns the field at each requested step.
    """
    if kind not in ("tangent", "adjoint"):
        raise ValueError("kind must be 'tangent' or 'adjoint'")
    steps = sorted(set(int(s) for s in steps))
    if not steps:
        return {}
    if steps[0] < start or steps[-1] > traj.n_steps:
        raise ValueError("requested steps outside the trajectory")
    st = traj.stepper
    fn = st.kern.rk_tangent if kind == "tangent" else st.kern.rk_adjoint_forward
    line = _load(as_perturbation(f), traj.grid.n_z, start, steps[-1], start)
    out = {}
    want = iter(steps)
    nxt = next(want)
    if nxt == start:
        out[start] = _unload(line)
        nxt = next(want, None)
    c = start // traj.checkpoint_stride
    scratch = traj.window_buffer()
    while nxt is not None:
        k0, k1 = traj.window_bounds(c)
        buf = traj.replay_window(c, scratch)
        for i in range(max(start - k0, 0), k1 - k0):
            fn(*line.rows(st.lo, st.hi), *buf[i, 0], *st.coefs, st.h)
            line.advance()
            fn(*line.rows(st.lo, st.hi), *buf[i, 1], *st.coefs, st.h)
            if line.m == nxt:
                out[nxt] = _unload(line)
                nxt = next(want, None)
                if nxt is None:
                    break
        c += 1
    return out
