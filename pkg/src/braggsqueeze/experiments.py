"""Sweep drivers, the soliton-threshold search and calibration of the Kerr coefficient.

Every row of a sweep is one independent simulation (classical run plus the
adjoint measurement).  Rows run in a process pool and are assembled in input
order, so results do not depend on the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .classical import (ContainmentError, NumericalError, PeakClassification, TrajectoryStore,
                        classify, evolve)
from .measurement import SqueezeResult, squeezing_ratio
from .model import ConfigError, Setup, sech_pulse

DEFAULT_INTENSITIES = tuple(0.5 * k for k in range(1, 28))
DEFAULT_LENGTHS = (1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0)
# how many times the time window is doubled when a run is not contained
MAX_EXTEND = 3
# threshold search bracket, in units of gamma * intensity (cm^-1)
THRESHOLD_BRACKET = (0.02, 0.4)
THRESHOLD_REL_TOL = 0.004
LABEL_ORDER = {"decay": 0, "flat": 1, "oscillate": 2}


class ThresholdError(RuntimeError):
    """The threshold search could not bracket or order the regimes."""

    def __init__(self, msg: str, samples: Sequence[Tuple[float, PeakClassification]] = ()):
        super().__init__(msg)
        self.samples = list(samples)


class CalibrationError(RuntimeError):
    pass


# ----------------------------------------------------------------------------- single runs


@dataclass(frozen=True)
class RunResult:
    """Outcome of one classical run plus its photon-number measurement."""

    setup: Setup
    dz: float
    n_steps: int
    transmission: float
    reflection: float
    ratio_final: float
    ratio_min: float
    measure_times: Tuple[float, ...]
    ratios: Tuple[float, ...]
    region: str
    extended: int = 0
    provenance: Dict = field(default_factory=dict)

    @property
    def ratio_db_final(self) -> float:
        return 10.0 * math.log10(self.ratio_final)

    @property
    def ratio_db_min(self) -> float:
        return 10.0 * math.log10(self.ratio_min)


def simulate(setup: Setup, backend: Optional[str] = None,
             max_extend: Optional[int] = None) -> Tuple[TrajectoryStore, int]:
    """Classical run of ``setup``, doubling the time window until the pulse is contained.

    An explicit ``setup.n_t`` is used as given (no extension).  Returns the
    trajectory and the number of doublings applied.
    """
    max_extend = (MAX_EXTEND if setup.n_t is None else 0) if max_extend is None else max_extend
    grid = setup.grid()
    init = sech_pulse(setup.pulse, setup.grating, grid)
    for n in range(max_extend + 1):
        traj = evolve(init, setup.grating, grid, pulse=setup.pulse, backend=backend)
        if traj.contained or n == max_extend:
            traj.require_contained()
            return traj, n
        grid = setup.with_(n_t=2 * grid.n_t).grid()
    raise AssertionError("unreachable")


def run_setup(setup: Setup, region: str = "lead-out", backend: Optional[str] = None,
              max_extend: Optional[int] = None) -> RunResult:
    """Classical run plus squeezing measurement for one configuration."""
    traj, extended = simulate(setup, backend, max_extend)
    sq: SqueezeResult = squeezing_ratio(traj, region)
    return RunResult(setup=setup, dz=traj.grid.dz, n_steps=traj.n_steps,
                     transmission=sq.transmission, reflection=sq.reflection, ratio_final=sq.ratio,
                     ratio_min=sq.ratio_min, measure_times=sq.measure_times, ratios=sq.ratios,
                     region=sq.projection_region, extended=extended, provenance=sq.provenance)


# ----------------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepRow:
    key: float
    result: Optional[RunResult]
    status: str

    @property
    def ok(self) -> bool:
        return self.result is not None


def _row(task) -> SweepRow:
    key, build, region, backend = task
    try:
        return SweepRow(key, run_setup(build(key), region, backend), "ok")
    except ContainmentError as exc:
        return SweepRow(key, None, f"containment: {exc}")
    except NumericalError as exc:
        return SweepRow(key, None, f"numerical: {exc}")
    except (ConfigError, ValueError) as exc:
        return SweepRow(key, None, f"config: {exc}")


def parallel_map(fn: Callable, tasks: Sequence, workers: int = 1) -> List:
    """``map`` over a process pool; results come back in task order."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


@dataclass(frozen=True)
class _IntensityRow:
    base: Setup

    def __call__(self, intensity: float) -> Setup:
        return self.base.with_pulse(peak_intensity=intensity)


@dataclass(frozen=True)
class _LengthRow:
    base: Setup

    def __call__(self, length: float) -> Setup:
        return self.base.with_grating(grating_length=length).with_(n_t=None)


def _sweep(build, keys: Sequence[float], region: str, workers: int,
           backend: Optional[str]) -> List[SweepRow]:
    keys = sorted(set(float(k) for k in keys))
    return parallel_map(_row, [(k, build, region, backend) for k in keys], workers)


def sweep_intensity(setup: Setup, intensities: Sequence[float] = DEFAULT_INTENSITIES,
                    workers: int = 1, region: str = "lead-out",
                    backend: Optional[str] = None) -> List[SweepRow]:
    """One run per peak intensity; rows sorted by intensity."""
    return _sweep(_IntensityRow(setup), intensities, region, workers, backend)


def sweep_length(setup: Setup, lengths: Sequence[float] = DEFAULT_LENGTHS, workers: int = 1,
                 region: str = "lead-out", backend: Optional[str] = None) -> List[SweepRow]:
    """One run per grating length at the setup's pulse; the time window follows each length."""
    return _sweep(_LengthRow(setup), lengths, region, workers, backend)


# ----------------------------------------------------------------------------- threshold


def classify_setup(setup: Setup, backend: Optional[str] = None) -> PeakClassification:
    """Peak-trace regime of a classical run (containment not required)."""
    grid = setup.grid()
    traj = evolve(sech_pulse(setup.pulse, setup.grating, grid), setup.grating, grid,
                  pulse=setup.pulse, backend=backend)
    return classify(traj)


def _classify_task(task) -> PeakClassification:
    setup, intensity, backend = task
    return classify_setup(setup.with_pulse(peak_intensity=intensity), backend)


@dataclass(frozen=True)
class ThresholdScan:
    """Result of the threshold search.

    ``decay_edge`` separates decay from non-decay and ``oscillate_edge``
    separates non-oscillating from oscillating runs; the threshold is the
    midpoint of the flat interval between them.
    """

    gamma: float
    threshold: float
    decay_edge: float
    oscillate_edge: float
    samples: Tuple[Tuple[float, str], ...]

    @property
    def flat_width(self) -> float:
        return self.oscillate_edge - self.decay_edge


def _edge(classify_many, lo: float, hi: float, below: Callable[[str], bool], rel_tol: float,
          n_probe: int, samples: Dict[float, PeakClassification]) -> Tuple[float, float]:
    """Shrink ``[lo, hi]`` (``below(lo)``, not ``below(hi)``) around the label change."""
    while hi - lo > rel_tol * lo:
        pts = [float(p) for p in np.geomspace(lo, hi, n_probe + 2)[1:-1]]
        labs = classify_many(pts)
        samples.update(zip(pts, labs))
        inside = [below(c.label) for c in labs]
        n_below = inside.index(False) if False in inside else len(pts)
        lo = pts[n_below - 1] if n_below > 0 else lo
        hi = pts[n_below] if n_below < len(pts) else hi
    return lo, hi


def threshold_scan(gamma: float, setup: Setup, bracket: Optional[Tuple[float, float]] = None,
                   rel_tol: float = THRESHOLD_REL_TOL, workers: int = 1,
                   backend: Optional[str] = None) -> ThresholdScan:
    """Locate the soliton threshold intensity for Kerr coefficient ``gamma``.

    ``bracket`` is an intensity interval whose lower end must decay and whose
    upper end must oscillate; by default it is ``THRESHOLD_BRACKET / gamma``.
    Each round classifies ``max(workers, 1)`` interior points in parallel.
    """
    if gamma == 0:
        return ThresholdScan(gamma, math.inf, math.inf, math.inf, ())
    if gamma < 0:
        raise ValueError("threshold search needs gamma > 0")
    s = setup.with_grating(gamma=gamma)
    lo, hi = bracket if bracket is not None else (THRESHOLD_BRACKET[0] / gamma,
                                                  THRESHOLD_BRACKET[1] / gamma)
    samples: Dict[float, PeakClassification] = {}

    def classify_many(points):
        return parallel_map(_classify_task, [(s, p, backend) for p in points], workers)

    ends = classify_many([lo, hi])
    samples.update(zip([lo, hi], ends))
    if ends[0].label != "decay" or ends[1].label != "oscillate":
        raise ThresholdError(
            f"bracket failure for gamma={gamma:g}: scanned {lo:.6g}..{hi:.6g} GW/cm^2, "
            f"labels {ends[0].label!r}..{ends[1].label!r}", sorted(samples.items()))
    probes = max(workers, 1)
    d_lo, d_hi = _edge(classify_many, lo, hi, lambda c: c == "decay", rel_tol, probes, samples)
    o_start = d_hi if samples[d_hi].label != "oscillate" else d_lo
    o_lo, o_hi = _edge(classify_many, o_start, hi, lambda c: c != "oscillate", rel_tol, probes,
                       samples)
    ordered = sorted(samples.items())
    ranks = [LABEL_ORDER[c.label] for _, c in ordered]
    if any(b < a for a, b in zip(ranks, ranks[1:])):
        raise ThresholdError(f"non-monotone classification for gamma={gamma:g}: " + ", ".join(
            f"{i:.4g}:{c.label}" for i, c in ordered), ordered)
    decay_edge = 0.5 * (d_lo + d_hi)
    osc_edge = max(0.5 * (o_lo + o_hi), decay_edge)
    return ThresholdScan(gamma=gamma, threshold=0.5 * (decay_edge + osc_edge),
                         decay_edge=decay_edge, oscillate_edge=osc_edge,
                         samples=tuple((i, c.label) for i, c in ordered))


def find_threshold_intensity(gamma: float, setup: Setup, **kw) -> float:
    """Soliton threshold intensity (GW/cm^2) for Kerr coefficient ``gamma``; ``inf`` if ``gamma == 0``."""
    return threshold_scan(gamma, setup, **kw).threshold


@dataclass(frozen=True)
class Calibration:
    gamma: float
    threshold: float
    target: float
    history: Tuple[ThresholdScan, ...]


def calibration(target: float, setup: Setup, gamma0: Optional[float] = None, tol: float = 0.02,
                max_iter: int = 4, workers: int = 1, backend: Optional[str] = None) -> Calibration:
    """Find the Kerr coefficient whose threshold intensity is ``target`` within ``tol``.

    The equations depend on gamma and intensity only through their product,
    so the threshold scales as ``1/gamma``; each iteration rescales gamma by
    the ratio of the measured threshold to the target, then re-measures
    with a bracket from half to twice the target.
    """
    if not target > 0:
        raise ValueError("target threshold must be > 0")
    gamma = setup.grating.gamma if gamma0 is None else gamma0
    history: List[ThresholdScan] = []
    bracket = None
    for _ in range(max_iter):
        try:
            scan = threshold_scan(gamma, setup, bracket=bracket, workers=workers, backend=backend)
        except ThresholdError as exc:
            raise CalibrationError(f"{exc}; gammas tried: "
                                   f"{[h.gamma for h in history] + [gamma]}") from exc
        history.append(scan)
        if abs(scan.threshold / target - 1.0) <= tol:
            return Calibration(gamma=gamma, threshold=scan.threshold, target=target,
                               history=tuple(history))
        gamma = gamma * scan.threshold / target
        bracket = (0.5 * target, 2.0 * target)
    scanned = ", ".join(f"gamma={h.gamma:.6g}->{h.threshold:.6g}" for h in history)
    raise CalibrationError(f"no gamma within {tol:.0%} of {target} GW/cm^2 after {max_iter} "
                           f"iterations ({scanned})")


def calibrate_gamma(target_threshold: float, setup: Setup, **kw) -> float:
    """Kerr coefficient whose soliton threshold is ``target_threshold`` GW/cm^2."""
    return calibration(target_threshold, setup, **kw).gamma


# ----------------------------------------------------------------------------- convergence


@dataclass(frozen=True)
class ConvergenceReport:
    """Runs at successively halved ``dz`` and the observed orders of accuracy.

    ``order_*`` is ``log2(|X(h) - X(h/2)| / |X(h/2) - X(h/4)|)`` for the
    finest three levels; ``nan`` when the differences are at rounding level.
    """

    rows: Tuple[RunResult, ...]
    order_transmission: float
    order_ratio: float

    @property
    def flagged(self) -> bool:
        return not (self.order_transmission >= 1.5 and self.order_ratio >= 1.5)


def observed_order(values: Sequence[float]) -> float:
    if len(values) < 3:
        raise ValueError("need at least three refinement levels")
    x0, x1, x2 = values[-3:]
    d1, d2 = abs(x0 - x1), abs(x1 - x2)
    if d2 == 0 or d1 == 0:
        return math.nan
    return math.log2(d1 / d2)


def convergence_study(setup: Setup, levels: int = 3, region: str = "lead-out", workers: int = 1,
                      backend: Optional[str] = None) -> ConvergenceReport:
    """Repeat a run with ``dz`` halved ``levels - 1`` times from the setup's resolution."""
    if levels < 3:
        raise ValueError("convergence study needs >= 3 levels")
    dz0 = setup.grid().dz
    setups = [setup.with_(dz=dz0 / 2 ** k, n_t=None) for k in range(levels)]
    rows = parallel_map(_run_task, [(s, region, backend) for s in setups], workers)
    return ConvergenceReport(rows=tuple(rows),
                             order_transmission=observed_order([r.transmission for r in rows]),
                             order_ratio=observed_order([r.ratio_final for r in rows]))


def _run_task(task) -> RunResult:
    setup, region, backend = task
    return run_setup(setup, region, backend)


def run_record(result: RunResult) -> Dict:
    """Flat dictionary of a run, for JSON provenance."""
    out = {"setup": asdict(result.setup), "dz": result.dz, "n_steps": result.n_steps,
           "transmission": result.transmission, "reflection": result.reflection,
           "ratio_final": result.ratio_final, "ratio_min": result.ratio_min,
           "measure_times": list(result.measure_times), "ratios": list(result.ratios),
           "region": result.region, "extended": result.extended}
    out["provenance"] = result.provenance
    return out
