"""Configuration types, grid construction and the complex field-pair container.

Units are fixed throughout the package: lengths in cm, times in ps,
intensities in GW/cm^2.  Field amplitudes are therefore in sqrt(GW/cm^2) and
the Kerr coefficient ``gamma`` carries cm^-1 per GW/cm^2, so ``gamma*|U|^2`` is
a wavenumber like ``kappa`` and ``delta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

LEAD_IN, GRATING, LEAD_OUT = 0, 1, 2
REGION_NAMES = {"lead-in": LEAD_IN, "grating": GRATING, "lead-out": LEAD_OUT}

# silica, c/1.45
DEFAULT_VG = 0.0207
# Kerr coefficient whose soliton threshold on the default setup is 4.5 GW/cm^2
# (``braggsqueeze calibrate``; measured threshold 4.5027 GW/cm^2)
CALIBRATED_GAMMA = 0.016912281007870324
# worst-case in-grating slowdown and safety margin used for the time window
SLOWDOWN_BOUND = 5.0
WINDOW_MARGIN = 2.0

_ACOSH_SQRT2 = math.acosh(math.sqrt(2.0))


class ConfigError(ValueError):
    """Invalid physical or numerical configuration."""


@dataclass(frozen=True)
class GratingConfig:
    grating_length: float = 50.0
    kappa: float = 10.0
    delta: float = 15.0
    gamma: float = CALIBRATED_GAMMA
    v_g: float = DEFAULT_VG
    lead_in: float = 16.0
    lead_out: float = 8.0
    gamma_outside: float = 0.0
    bragg_wavelength: Optional[float] = None

    def __post_init__(self):
        if not self.grating_length > 0:
            raise ConfigError("grating_length must be > 0")
        if self.kappa < 0:
            raise ConfigError("kappa must be >= 0")
        if not self.v_g > 0:
            raise ConfigError("v_g must be > 0")
        if self.lead_in < 0 or self.lead_out < 0:
            raise ConfigError("lead_in and lead_out must be >= 0")
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and not math.isfinite(v):
                raise ConfigError(f"{f.name} must be finite")

    @property
    def total_length(self) -> float:
        return self.lead_in + self.grating_length + self.lead_out

    def with_(self, **kw) -> "GratingConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class PulseConfig:
    fwhm: float = 60.0
    peak_intensity: float = 4.5
    center: Optional[float] = None

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ConfigError("fwhm must be > 0")
        if self.peak_intensity < 0:
            raise ConfigError("peak_intensity must be >= 0")

    def with_(self, **kw) -> "PulseConfig":
        return replace(self, **kw)

    def center_in(self, g: GratingConfig) -> float:
        """Launch position; defaults to the middle of the lead-in."""
        return 0.5 * g.lead_in if self.center is None else self.center


def pulse_extent(p: PulseConfig, g: GratingConfig) -> float:
    """Spatial intensity FWHM of the launched pulse, cm."""
    return g.v_g * p.fwhm


def sech_width(p: PulseConfig, g: GratingConfig) -> float:
    """Width z0 of ``sech(z/z0)`` whose intensity FWHM in time is ``p.fwhm``."""
    return g.v_g * p.fwhm / (2.0 * _ACOSH_SQRT2)


def max_dz(g: GratingConfig, p: PulseConfig) -> float:
    bound = pulse_extent(p, g) / 100.0
    if g.kappa > 0:
        bound = min(bound, 0.05 / g.kappa)
    return bound


@dataclass(frozen=True, eq=False)
class Grid:
    """Characteristics-aligned grid: ``dt * v_g == dz`` so advection is a one-cell shift.

    Sample ``j`` sits at the centre of cell ``[j*dz, (j+1)*dz)``.
    """

    dz: float
    n_z: int
    dt: float
    n_t: int
    region_map: np.ndarray
    n_in: int
    n_grating: int
    n_out: int

    @property
    def z(self) -> np.ndarray:
        return (np.arange(self.n_z) + 0.5) * self.dz

    @property
    def grating_slice(self) -> slice:
        return slice(self.n_in, self.n_in + self.n_grating)

    @property
    def lead_in_slice(self) -> slice:
        return slice(0, self.n_in)

    @property
    def lead_out_slice(self) -> slice:
        return slice(self.n_in + self.n_grating, self.n_z)

    def region_slice(self, region: str) -> slice:
        if region == "whole":
            return slice(0, self.n_z)
        try:
            return {"lead-in": self.lead_in_slice, "grating": self.grating_slice,
                    "lead-out": self.lead_out_slice, "leadout": self.lead_out_slice}[region]
        except KeyError:
            raise ConfigError(f"unknown region {region!r}") from None

    def describe(self) -> dict:
        return {"dz": self.dz, "dt": self.dt, "n_z": self.n_z, "n_t": self.n_t,
                "n_in": self.n_in, "n_grating": self.n_grating, "n_out": self.n_out}


def _cells(length: float, dz: float) -> int:
    return int(math.ceil(length / dz - 1e-9))


def build_grid(g: GratingConfig, p: PulseConfig, safety: float = 1.0,
               dz: Optional[float] = None, n_t: Optional[int] = None) -> Grid:
    """Build the simulation grid for a grating/pulse pair.

    ``dz`` defaults to the largest step allowed by the resolution bound
    divided by ``safety``, snapped so the grating holds a whole number of
    cells.  An explicit ``dz`` must respect the bound.  ``n_t`` is the
    maximum time window; by default long enough for the launched pulse to
    clear the grating even if it crawls at ``v_g/5`` inside, with a factor 2
    margin.
    """
    if safety < 1.0:
        raise ConfigError("safety factor must be >= 1")
    extent = pulse_extent(p, g)
    center = p.center_in(g)
    if g.lead_in < 2 * extent or g.lead_out < 2 * extent:
        raise ConfigError(
            f"lead_in and lead_out must each be >= 2x the pulse extent ({2 * extent:.4g} cm)")
    if not (extent <= center <= g.lead_in - extent):
        raise ConfigError(
            f"pulse centre {center:.4g} cm leaves less than one pulse extent of lead-in "
            f"on either side (lead_in={g.lead_in:.4g} cm, extent={extent:.4g} cm)")
    bound = max_dz(g, p)
    if dz is None:
        dz = bound / safety
    elif dz > bound * (1 + 1e-12):
        raise ConfigError(f"dz={dz:.6g} cm violates the resolution bound {bound:.6g} cm")
    n_grating = _cells(g.grating_length, dz)
    dz = g.grating_length / n_grating
    n_in = _cells(g.lead_in, dz)
    n_out = _cells(g.lead_out, dz)
    n_z = n_in + n_grating + n_out
    region_map = np.empty(n_z, dtype=np.int8)
    region_map[:n_in] = LEAD_IN
    region_map[n_in:n_in + n_grating] = GRATING
    region_map[n_in + n_grating:] = LEAD_OUT
    region_map.setflags(write=False)
    dt = dz / g.v_g
    if n_t is None:
        travel = (n_in * dz - center) + extent + SLOWDOWN_BOUND * g.grating_length
        n_t = int(math.ceil(WINDOW_MARGIN * travel / dz))
    return Grid(dz=dz, n_z=n_z, dt=dt, n_t=int(n_t), region_map=region_map,
                n_in=n_in, n_grating=n_grating, n_out=n_out)


@dataclass(frozen=True, eq=False)
class FieldPair:
    """Forward and backward complex envelopes sampled on the grid."""

    u_a: np.ndarray
    u_b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.u_a, dtype=np.complex128)
        b = np.asarray(self.u_b, dtype=np.complex128)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("u_a and u_b must be 1-D arrays of equal length")
        object.__setattr__(self, "u_a", a)
        object.__setattr__(self, "u_b", b)

    def __len__(self):
        return self.u_a.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "FieldPair":
        return cls(np.zeros(n, complex), np.zeros(n, complex))

    @classmethod
    def from_rows(cls, y: np.ndarray) -> "FieldPair":
        """From the solver's real (4, n) layout: Re a, Im a, Re b, Im b."""
        return cls(y[0] + 1j * y[1], y[2] + 1j * y[3])

    def to_rows(self) -> np.ndarray:
        return np.stack([self.u_a.real, self.u_a.imag, self.u_b.real, self.u_b.imag])

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.u_a).all() and np.isfinite(self.u_b).all())

    def scaled(self, alpha: complex) -> "FieldPair":
        return FieldPair(alpha * self.u_a, alpha * self.u_b)

    def restricted(self, sl: slice) -> "FieldPair":
        a = np.zeros_like(self.u_a)
        b = np.zeros_like(self.u_b)
        a[sl] = self.u_a[sl]
        b[sl] = self.u_b[sl]
        return FieldPair(a, b)

    def __add__(self, other: "FieldPair") -> "FieldPair":
        return FieldPair(self.u_a + other.u_a, self.u_b + other.u_b)

    def __sub__(self, other: "FieldPair") -> "FieldPair":
        return FieldPair(self.u_a - other.u_a, self.u_b - other.u_b)


def sech_pulse(p: PulseConfig, g: GratingConfig, grid: Grid) -> FieldPair:
    """Transform-limited sech input in the forward channel; backward channel empty."""
    z0 = sech_width(p, g)
    x = (grid.z - p.center_in(g)) / z0
    a = math.sqrt(p.peak_intensity) / np.cosh(x)
    return FieldPair(a.astype(np.complex128), np.zeros(grid.n_z, complex))


@dataclass(frozen=True)
class Setup:
    """A grating, a pulse and the grid resolution knobs; the unit of work for a run."""

    grating: GratingConfig = field(default_factory=GratingConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    safety: float = 1.0
    dz: Optional[float] = None
    n_t: Optional[int] = None

    def grid(self) -> Grid:
        return build_grid(self.grating, self.pulse, safety=self.safety, dz=self.dz, n_t=self.n_t)

    def with_grating(self, **kw) -> "Setup":
        return replace(self, grating=replace(self.grating, **kw))

    def with_pulse(self, **kw) -> "Setup":
        return replace(self, pulse=replace(self.pulse, **kw))

    def with_(self, **kw) -> "Setup":
        return replace(self, **kw)


_EXTERIORS = ("a_left", "a_right", "b_left", "b_right")


def _pad_add(x: np.ndarray, y: np.ndarray, sign: float) -> np.ndarray:
    n = max(x.shape[0], y.shape[0])
    out = np.zeros(n, complex)
    out[:x.shape[0]] += x
    out[:y.shape[0]] += sign * y
    return out


@dataclass(frozen=True, eq=False)
class PerturbationField:
    """A field pair on the domain plus its values on the exterior fibre.

    The domain is flanked by semi-infinite kappa=0 lines.  ``a_right`` holds
    forward-channel values that have left through the right edge and
    ``b_left`` backward-channel values that have left through the left edge;
    ``a_left`` and ``b_right`` hold values that will enter the domain later.
    All four arrays are ordered nearest cell first and have the grid spacing.
    The classical final state uses the same container, with the outflow kept
    in ``a_right`` and ``b_left``.
    """

    pair: FieldPair
    a_left: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    a_right: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    b_left: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    b_right: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def __post_init__(self):
        if not isinstance(self.pair, FieldPair):
            object.__setattr__(self, "pair", FieldPair(*self.pair))
        for name in _EXTERIORS:
            v = np.asarray(getattr(self, name), dtype=np.complex128).ravel()
            nz = np.flatnonzero(v)
            object.__setattr__(self, name, v[:nz[-1] + 1] if nz.size else v[:0])

    def __len__(self):
        return len(self.pair)

    @classmethod
    def zeros(cls, n: int) -> "PerturbationField":
        return cls(FieldPair.zeros(n))

    @property
    def u_a(self) -> np.ndarray:
        return self.pair.u_a

    @property
    def u_b(self) -> np.ndarray:
        return self.pair.u_b

    def exteriors(self) -> dict:
        return {name: getattr(self, name) for name in _EXTERIORS}

    def has_exterior(self) -> bool:
        return any(getattr(self, name).size for name in _EXTERIORS)

    def is_finite(self) -> bool:
        return self.pair.is_finite() and all(np.isfinite(getattr(self, n)).all() for n in _EXTERIORS)

    def scaled(self, alpha: complex) -> "PerturbationField":
        return PerturbationField(self.pair.scaled(alpha),
                                 **{n: alpha * getattr(self, n) for n in _EXTERIORS})

    def domain_only(self) -> "PerturbationField":
        return PerturbationField(self.pair)

    def __add__(self, other: "PerturbationField") -> "PerturbationField":
        return PerturbationField(self.pair + other.pair,
                                 **{n: _pad_add(getattr(self, n), getattr(other, n), 1.0)
                                    for n in _EXTERIORS})

    def __sub__(self, other: "PerturbationField") -> "PerturbationField":
        return PerturbationField(self.pair - other.pair,
                                 **{n: _pad_add(getattr(self, n), getattr(other, n), -1.0)
                                    for n in _EXTERIORS})


def as_perturbation(f) -> PerturbationField:
    return f if isinstance(f, PerturbationField) else PerturbationField(f)
