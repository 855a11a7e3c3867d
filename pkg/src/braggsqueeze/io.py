"""Configuration files, CSV/JSON/SVG output and provenance hashing.

A configuration file is a flat list of ``key = value`` lines (``#`` starts a
comment).  Keys are the field names of ``GratingConfig`` and ``PulseConfig``,
the grid knobs ``dz``, ``n_t`` and ``safety``, and the sweep options listed
in ``SWEEP_KEYS``.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io as _io
import json
import math
from dataclasses import asdict, fields
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

from .model import ConfigError, GratingConfig, PulseConfig, Setup

GRATING_KEYS = tuple(f.name for f in fields(GratingConfig))
PULSE_KEYS = tuple(f.name for f in fields(PulseConfig))
GRID_KEYS = ("dz", "n_t", "safety")
SWEEP_KEYS = ("intensities", "lengths", "levels", "target_threshold")
KNOWN_KEYS = GRATING_KEYS + PULSE_KEYS + GRID_KEYS + SWEEP_KEYS
_OPTIONAL = {"bragg_wavelength", "center", "dz", "n_t"}
_SECTION = "braggsqueeze"

RUN_COLUMNS = ("kappa", "delta", "gamma", "length_cm", "fwhm_ps", "peak_GW_cm2", "dz_cm",
               "transmission", "reflection", "R_final", "R_min", "R_db_final", "R_db_min",
               "status")


def fmt(x) -> str:
    """Nine significant digits; ``nan`` for missing values."""
    if x is None:
        return "nan"
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


# ----------------------------------------------------------------------------- config


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """Raw ``key -> value`` strings of a flat configuration file."""
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",), strict=True)
    cp.optionxform = str
    try:
        cp.read_string(f"[{_SECTION}]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    raw = dict(cp[_SECTION])
    for key in raw:
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}: unknown configuration key {key!r}")
    return raw


def read_config(path) -> Dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    return parse_config_text(text, str(path))


def _number(key: str, value: str, kind=float):
    if key in _OPTIONAL and value.strip().lower() in ("", "none"):
        return None
    try:
        v = kind(value)
    except ValueError:
        raise ConfigError(f"configuration key {key!r}: cannot parse {value!r}") from None
    if kind is float and not math.isfinite(v):
        raise ConfigError(f"configuration key {key!r} must be finite")
    return v


def _float_list(key: str, value: str) -> List[float]:
    items = [s for s in value.replace(",", " ").split() if s]
    if not items:
        raise ConfigError(f"configuration key {key!r} is empty")
    return [_number(key, s) for s in items]


def typed_config(raw: Mapping[str, str]) -> Dict[str, object]:
    """Convert raw strings to numbers and lists."""
    out: Dict[str, object] = {}
    for key, value in raw.items():
        if key in ("intensities", "lengths"):
            out[key] = _float_list(key, value)
        elif key in ("n_t", "levels"):
            out[key] = _number(key, value, int)
        else:
            out[key] = _number(key, value)
    return out


def setup_from_config(cfg: Mapping[str, object]) -> Setup:
    """Build a ``Setup`` from a typed configuration; missing keys take the defaults."""
    g = {k: cfg[k] for k in GRATING_KEYS if k in cfg}
    p = {k: cfg[k] for k in PULSE_KEYS if k in cfg}
    s = {k: cfg[k] for k in GRID_KEYS if k in cfg}
    try:
        return Setup(grating=GratingConfig(**g), pulse=PulseConfig(**p), **s)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_text(cfg: Mapping[str, object]) -> str:
    """Render a typed configuration back to the flat file format (sorted keys)."""
    lines = []
    for key in sorted(cfg):
        v = cfg[key]
        if isinstance(v, (list, tuple)):
            v = ", ".join(fmt(x) for x in v)
        elif v is None:
            v = "none"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def config_hash(obj) -> str:
    """Short SHA-256 of the canonical JSON form of ``obj``."""
    blob = json.dumps(obj, sort_keys=True, default=str, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def setup_record(setup: Setup) -> Dict:
    return asdict(setup)


# ----------------------------------------------------------------------------- output


def run_row(setup: Setup, result, status: str = "ok", **columns) -> List[str]:
    """Row of ``RUN_COLUMNS`` for a ``RunResult`` (``None`` for a failed run).

    Keyword arguments override the named setup columns, e.g. the swept value
    of a row whose setup could not be built.
    """
    g, p = setup.grating, setup.pulse
    head = [g.kappa, g.delta, g.gamma, g.grating_length, p.fwhm, p.peak_intensity]
    head = [columns.get(c, v) for c, v in zip(RUN_COLUMNS, head)]
    if result is None:
        try:
            dz = setup.grid().dz
        except ConfigError:
            dz = None
        tail = [dz] + [None] * 6
    else:
        tail = [result.dz, result.transmission, result.reflection, result.ratio_final,
                result.ratio_min, result.ratio_db_final, result.ratio_db_min]
    return [fmt(x) for x in head + tail] + [status]


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence[str]], chash: str,
              note: str = "") -> None:
    """CSV with a leading ``# config_hash=...`` comment line."""
    buf = _io.StringIO()
    buf.write(f"# config_hash={chash}{(' ' + note) if note else ''}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(r)
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> List[Dict[str, str]]:
    """Rows of a CSV written by ``write_csv`` (comment lines skipped)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def write_svg(path, x: Sequence[float], panels: Sequence[Mapping[str, Sequence[float]]],
              xlabel: str, ylabels: Sequence[str], chash: str, title: str = "") -> None:
    """Static line plot, one panel per mapping of ``label -> y values``.

    The output is deterministic (fixed id salt, no date) and carries the
    configuration hash in its metadata and as a footer.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "braggsqueeze", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(len(panels), 1, sharex=True, squeeze=False,
                                 figsize=(6.0, 2.6 * len(panels) + 0.6))
        for ax, series, ylab in zip(axes[:, 0], panels, ylabels):
            for label, y in series.items():
                ax.plot(x, y, marker="o", ms=3, lw=1.2, label=label)
            ax.set_ylabel(ylab)
            ax.grid(alpha=0.3)
            if len(series) > 1:
                ax.legend(fontsize=8)
        axes[-1, 0].set_xlabel(xlabel)
        if title:
            axes[0, 0].set_title(title, fontsize=10)
        fig.text(0.01, 0.005, f"config_hash={chash}", fontsize=6, color="0.4")
        fig.tight_layout()
        fig.savefig(path, format="svg",
                    metadata={"Date": None, "Description": f"config_hash={chash}"})
        plt.close(fig)
