"""Photon-number projections, vacuum variances and squeezing ratios.

For a coherent input every field mode carries vacuum fluctuations, so the
projected fluctuation ``<f | u(0)>`` has variance ``photon_content(f)/4``.
The output variance follows by back-propagating ``f`` to ``t = 0`` with the
adjoint system and taking the same quadratic form of the result.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Sequence, Tuple

from . import kernels
from .adjoint import back_propagate_many
from .classical import TrajectoryStore, classical_summary, photon_content
from .model import PerturbationField

REGIONS = {"lead-out": "lead-out", "leadout": "lead-out", "whole": "whole"}
EMPTY_TOL = 1e-12


class MeasurementError(ValueError):
    """The requested projection carries no signal."""


def _region(region: str) -> str:
    try:
        return REGIONS[region]
    except KeyError:
        raise ValueError(f"projection region must be one of {sorted(REGIONS)}, not {region!r}") from None


@dataclass(frozen=True)
class SqueezeResult:
    """Squeezing ratios of one run.

    ``ratio`` is measured at the final step; ``ratio_min`` is the smallest
    ratio over ``measure_times``, which also includes the final time.
    """

    ratio: float
    ratio_min: float
    transmission: float
    reflection: float
    measure_time: float
    measure_times: Tuple[float, ...]
    ratios: Tuple[float, ...]
    projection_region: str
    provenance: Dict = field(default_factory=dict)

    @property
    def ratio_db(self) -> float:
        return 10.0 * math.log10(self.ratio)

    @property
    def ratio_db_min(self) -> float:
        return 10.0 * math.log10(self.ratio_min)


def photon_number_projection(traj: TrajectoryStore, region: str = "lead-out",
                             step: Optional[int] = None) -> PerturbationField:
    """Projection function of direct detection: the classical field itself.

    ``lead-out`` keeps the transmitted field (lead-out plus the outflow to the
    right); ``whole`` keeps everything, reflected outflow included.  The
    field is not normalized.
    """
    region = _region(region)
    step = traj.n_steps if step is None else step
    x = traj.extended_state(step)
    if region == "whole":
        f = x
    else:
        f = PerturbationField(x.pair.restricted(traj.grid.lead_out_slice), a_right=x.a_right,
                              b_right=x.b_right)
    if photon_content(f, traj.grid) <= EMPTY_TOL * traj.input_content:
        raise MeasurementError(f"projection region {region!r} holds no field at step {step}")
    return f


def vacuum_variance(f, grid) -> float:
    """Variance of ``<f | u>`` for vacuum fluctuations: a quarter of the content of ``f``."""
    v = 0.25 * photon_content(f, grid)
    if not v > 0:
        raise MeasurementError("vacuum variance of a zero projection")
    return v


def ratio_from(f: PerturbationField, F: PerturbationField, grid) -> float:
    return vacuum_variance(F, grid) / vacuum_variance(f, grid)


def squeezing_ratio(traj: TrajectoryStore, region: str = "lead-out",
                    steps: Optional[Sequence[int]] = None, scale: float = 1.0) -> SqueezeResult:
    """Squeezing ratio of photon-number detection at each measurement step.

    ``steps`` defaults to the trajectory's measurement steps (milestones and
    the final step).  ``scale`` multiplies the projection function and exists
    to exercise the ratio's scale invariance.
    """
    region = _region(region)
    cs = classical_summary(traj)
    steps = traj.measurement_steps() if steps is None else sorted(set(steps))
    if traj.n_steps not in steps:
        steps = sorted(set(steps) | {traj.n_steps})
    fs = [photon_number_projection(traj, region, T).scaled(scale) for T in steps]
    Fs = back_propagate_many(list(zip(steps, fs)), traj)
    ratios = tuple(ratio_from(f, F, traj.grid) for f, F in zip(fs, Fs))
    dt = traj.grid.dt
    prov = {"grating": asdict(traj.grating), "grid": traj.grid.describe(),
            "n_steps": traj.n_steps, "checkpoint_stride": traj.checkpoint_stride,
            "backend": traj.stepper.kern.__name__.rsplit(".", 1)[-1].lstrip("_")}
    if traj.pulse is not None:
        prov["pulse"] = asdict(traj.pulse)
    return SqueezeResult(ratio=ratios[-1], ratio_min=min(ratios), transmission=cs.transmission,
                         reflection=cs.reflection, measure_time=steps[-1] * dt,
                         measure_times=tuple(T * dt for T in steps), ratios=ratios,
                         projection_region=region, provenance=prov)
