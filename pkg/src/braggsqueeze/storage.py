"""Binary container for field pairs and trajectories.

Layout: a magic line, a line with the header length in bytes, a JSON header,
then the payload.  Every array is stored as little-endian float64 with real
and imaginary parts interleaved (numpy ``<c16``); real arrays are stored
with a zero imaginary part.  The header lists each array's name, length and
byte offset within the payload, plus free-form metadata.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from .classical import Stepper, TrajectoryStore
from .model import (GRATING, LEAD_IN, LEAD_OUT, FieldPair, GratingConfig, Grid, PerturbationField,
                    PulseConfig)

MAGIC = b"BRAGGSQUEEZE-FIELDS 1\n"
_LE = np.dtype("<c16")


def save_arrays(path, arrays: Dict[str, np.ndarray], meta: dict) -> None:
    entries = []
    offset = 0
    for name, arr in arrays.items():
        n = int(np.asarray(arr).size)
        entries.append({"name": name, "length": n, "offset": offset})
        offset += n * _LE.itemsize
    header = json.dumps({"meta": meta, "arrays": entries}, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(b"%d\n" % len(header))
        fh.write(header)
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(np.asarray(arr).ravel(), dtype=_LE).tobytes())


def load_arrays(path) -> Tuple[Dict[str, np.ndarray], dict]:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ValueError(f"{path}: not a braggsqueeze field container")
    pos = len(MAGIC)
    nl = data.index(b"\n", pos)
    hlen = int(data[pos:nl])
    header = json.loads(data[nl + 1:nl + 1 + hlen])
    base = nl + 1 + hlen
    arrays = {}
    for e in header["arrays"]:
        start = base + e["offset"]
        arrays[e["name"]] = np.frombuffer(data, dtype=_LE, count=e["length"], offset=start).astype(complex)
    return arrays, header["meta"]


def _field_arrays(prefix: str, f) -> Dict[str, np.ndarray]:
    if isinstance(f, PerturbationField):
        out = {f"{prefix}.u_a": f.u_a, f"{prefix}.u_b": f.u_b}
        out.update({f"{prefix}.{k}": v for k, v in f.exteriors().items()})
        return out
    return {f"{prefix}.u_a": f.u_a, f"{prefix}.u_b": f.u_b}


def _field_from(prefix: str, arrays: Dict[str, np.ndarray]):
    pair = FieldPair(arrays[f"{prefix}.u_a"], arrays[f"{prefix}.u_b"])
    ext = {k: arrays[f"{prefix}.{k}"] for k in ("a_left", "a_right", "b_left", "b_right")
           if f"{prefix}.{k}" in arrays}
    return PerturbationField(pair, **ext) if ext else pair


def save_fields(path, fields: Dict[str, object], meta: dict | None = None) -> None:
    """Write named ``FieldPair`` / ``PerturbationField`` values."""
    arrays = {}
    for name, f in fields.items():
        if "." in name:
            raise ValueError("field names may not contain '.'")
        arrays.update(_field_arrays(name, f))
    save_arrays(path, arrays, {"fields": list(fields), **(meta or {})})


def load_fields(path) -> Tuple[Dict[str, object], dict]:
    arrays, meta = load_arrays(path)
    return {name: _field_from(name, arrays) for name in meta["fields"]}, meta


def _grid_meta(grid: Grid) -> dict:
    return {"dz": grid.dz, "dt": grid.dt, "n_t": grid.n_t, "n_in": grid.n_in,
            "n_grating": grid.n_grating, "n_out": grid.n_out}


def _grid_from(meta: dict) -> Grid:
    n_in, n_g, n_out = meta["n_in"], meta["n_grating"], meta["n_out"]
    rm = np.concatenate([np.full(n_in, LEAD_IN), np.full(n_g, GRATING),
                         np.full(n_out, LEAD_OUT)]).astype(np.int8)
    rm.setflags(write=False)
    return Grid(dz=meta["dz"], n_z=n_in + n_g + n_out, dt=meta["dt"], n_t=meta["n_t"],
                region_map=rm, n_in=n_in, n_grating=n_g, n_out=n_out)


def save_trajectory(traj: TrajectoryStore, path) -> None:
    """Persist a trajectory: checkpoints, snapshots, outflow and traces."""
    arrays = {}
    for k, y in traj.checkpoints.items():
        arrays[f"checkpoint.{k}"] = y[0] + 1j * y[1]
        arrays[f"checkpoint.{k}.b"] = y[2] + 1j * y[3]
    for k, y in traj.snapshots.items():
        arrays[f"snapshot.{k}"] = y[0] + 1j * y[1]
        arrays[f"snapshot.{k}.b"] = y[2] + 1j * y[3]
    arrays["exit_a"] = traj.exit_a
    arrays["exit_b"] = traj.exit_b
    arrays["peak_trace"] = traj.peak_trace
    arrays["peak_position"] = traj.peak_position
    arrays["grating_trace"] = traj.grating_trace
    meta = {"kind": "trajectory", "grating": asdict(traj.grating),
            "pulse": asdict(traj.pulse) if traj.pulse is not None else None,
            "grid": _grid_meta(traj.grid), "n_steps": traj.n_steps,
            "checkpoint_stride": traj.checkpoint_stride, "input_content": traj.input_content,
            "pending": [[k, v] for k, v in sorted(traj.pending.items())],
            "milestones": [[k, v] for k, v in sorted(traj.milestones.items())],
            "checkpoints": sorted(traj.checkpoints), "snapshots": sorted(traj.snapshots)}
    save_arrays(path, arrays, meta)


def load_trajectory(path, backend: str | None = None) -> TrajectoryStore:
    arrays, meta = load_arrays(path)
    if meta.get("kind") != "trajectory":
        raise ValueError(f"{path}: not a trajectory container")
    g = GratingConfig(**meta["grating"])
    p = PulseConfig(**meta["pulse"]) if meta["pulse"] is not None else None
    grid = _grid_from(meta["grid"])

    def rows(prefix):
        a, b = arrays[prefix], arrays[prefix + ".b"]
        return np.stack([a.real, a.imag, b.real, b.imag])

    return TrajectoryStore(
        grating=g, grid=grid, stepper=Stepper.build(g, grid, backend), n_steps=meta["n_steps"],
        checkpoint_stride=meta["checkpoint_stride"],
        checkpoints={k: rows(f"checkpoint.{k}") for k in meta["checkpoints"]},
        snapshots={k: rows(f"snapshot.{k}") for k in meta["snapshots"]},
        exit_a=arrays["exit_a"], exit_b=arrays["exit_b"],
        peak_trace=arrays["peak_trace"].real.copy(),
        peak_position=arrays["peak_position"].real.astype(np.int32),
        grating_trace=arrays["grating_trace"].real.copy(),
        pending={int(k): v for k, v in meta["pending"]}, input_content=meta["input_content"],
        pulse=p, milestones={float(k): int(v) for k, v in meta["milestones"]})
