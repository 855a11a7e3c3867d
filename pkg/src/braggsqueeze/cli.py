"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 containment violation, 4 sweep finished with failed rows.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__, kernels
from . import io as bio
from .classical import ContainmentError, NumericalError
from .experiments import (DEFAULT_INTENSITIES, DEFAULT_LENGTHS, CalibrationError, ThresholdError,
                          calibration, convergence_study, run_record, run_setup, simulate,
                          sweep_intensity, sweep_length)
from .measurement import MeasurementError
from .model import ConfigError, Setup

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CONTAINMENT, EXIT_PARTIAL = 1, 2, 3, 4
REGION_CHOICES = {"leadout": "lead-out", "whole": "whole"}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    common.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
    common.add_argument("--workers", type=int, default=1, metavar="N",
                        help="parallel simulations for sweeps (default: 1)")
    common.add_argument("--dz-override", type=float, metavar="CM", help="spatial step in cm")
    common.add_argument("--seed", type=int, default=0,
                        help="reserved; runs are deterministic and ignore it")
    common.add_argument("--region", choices=sorted(REGION_CHOICES), default="leadout",
                        help="photon-number projection region (default: leadout)")
    common.add_argument("--gamma-outside", type=float, metavar="VALUE",
                        help="Kerr coefficient in the leads, overriding the configuration")
    p = argparse.ArgumentParser(prog="braggsqueeze",
                                description="Bragg soliton transmission and squeezing simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="single classical + quantum run")
    run.add_argument("--save-fields", action="store_true",
                     help="also write the initial and final classical fields to fields.bin")
    sub.add_parser("sweep-intensity", parents=[common], help="transmission and R versus intensity")
    sub.add_parser("sweep-length", parents=[common], help="R versus grating length")
    cal = sub.add_parser("calibrate", parents=[common],
                         help="fit the Kerr coefficient to a soliton threshold intensity")
    cal.add_argument("--target", type=float, metavar="GW_CM2",
                     help="threshold intensity (default: target_threshold key or 4.5)")
    sub.add_parser("converge", parents=[common], help="dz refinement study")
    return p


def identity(command: str, setup: Setup, region: str = "lead-out",
             sweep: Optional[Dict] = None) -> Dict:
    """What a command's outputs depend on; its hash is embedded in every output file."""
    return {"command": command, "setup": bio.setup_record(setup), "region": region,
            "sweep": dict(sweep or {})}


class _Context:
    """Resolved configuration, setup and provenance for one command."""

    def __init__(self, args):
        raw = bio.read_config(args.config) if args.config else {}
        cfg = bio.typed_config(raw)
        if args.dz_override is not None:
            cfg["dz"] = args.dz_override
        if args.gamma_outside is not None:
            cfg["gamma_outside"] = args.gamma_outside
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        self.cfg = cfg
        self.setup: Setup = bio.setup_from_config(cfg)
        self.region = REGION_CHOICES[args.region]
        self.workers = args.workers
        self.out = Path(args.out)
        self.command = args.command
        grid = self.setup.grid()
        self.dz = grid.dz
        self.identity = identity(args.command, self.setup, self.region,
                                 {k: cfg[k] for k in bio.SWEEP_KEYS if k in cfg})
        self.hash = bio.config_hash(self.identity)
        self.out.mkdir(parents=True, exist_ok=True)

    @property
    def note(self) -> str:
        return f"dz_cm={bio.fmt(self.dz)}"

    def metadata(self, **extra) -> Dict:
        return {"config_hash": self.hash, "version": __version__, "backend": kernels.BACKEND,
                "grid": self.setup.grid().describe(), **self.identity, **extra}


def _cmd_run(ctx: _Context, args) -> int:
    res = run_setup(ctx.setup, ctx.region)
    bio.write_csv(ctx.out / "result.csv", bio.RUN_COLUMNS, [bio.run_row(ctx.setup, res)], ctx.hash,
                  ctx.note)
    bio.write_json(ctx.out / "metadata.json", ctx.metadata(result=run_record(res)))
    if args.save_fields:
        from .storage import save_fields
        traj, _ = simulate(ctx.setup)
        save_fields(ctx.out / "fields.bin", {"initial": traj.initial, "final": traj.final},
                    {"config_hash": ctx.hash, "grid": traj.grid.describe()})
    print(f"transmission={bio.fmt(res.transmission)} R_final={bio.fmt(res.ratio_final)} "
          f"R_min={bio.fmt(res.ratio_min)} R_db_final={bio.fmt(res.ratio_db_final)}")
    return 0


def _sweep_output(ctx: _Context, name: str, var: str, rows, xlabel: str, with_transmission: bool):
    columns = (var,) + bio.RUN_COLUMNS
    body = [[bio.fmt(r.key)] + bio.run_row(_row_setup(ctx.setup, var, r.key), r.result, r.status,
                                           **{var: r.key})
            for r in rows]
    bio.write_csv(ctx.out / f"{name}.csv", columns, body, ctx.hash, ctx.note)
    ok = [r for r in rows if r.ok]
    x = [r.key for r in ok]
    panels, labels = [], []
    if with_transmission:
        panels.append({"transmission": [r.result.transmission for r in ok]})
        labels.append("transmission")
    panels.append({"final time": [r.result.ratio_db_final for r in ok],
                   "minimum over time": [r.result.ratio_db_min for r in ok]})
    labels.append("R (dB)")
    if ok:
        bio.write_svg(ctx.out / f"{name}.svg", x, panels, xlabel, labels, ctx.hash)
    bio.write_json(ctx.out / "metadata.json", ctx.metadata(rows=[
        {"key": r.key, "status": r.status, **({"result": run_record(r.result)} if r.ok else {})}
        for r in rows]))
    failed = [r for r in rows if not r.ok]
    for r in failed:
        print(f"row {var}={bio.fmt(r.key)} failed: {r.status}", file=sys.stderr)
    print(f"{len(rows) - len(failed)}/{len(rows)} rows ok; wrote {ctx.out / (name + '.csv')}")
    return EXIT_PARTIAL if failed else 0


def _row_setup(setup: Setup, var: str, key: float) -> Setup:
    if var == "peak_GW_cm2":
        return setup.with_pulse(peak_intensity=key)
    try:
        return setup.with_grating(grating_length=key).with_(n_t=None)
    except ConfigError:
        # the row failed on this value; the swept column is filled in separately
        return setup


def _cmd_sweep_intensity(ctx: _Context, args) -> int:
    intensities = ctx.cfg.get("intensities", DEFAULT_INTENSITIES)
    rows = sweep_intensity(ctx.setup, intensities, ctx.workers, ctx.region)
    return _sweep_output(ctx, "sweep_intensity", "peak_GW_cm2", rows, "peak intensity (GW/cm^2)",
                         True)


def _cmd_sweep_length(ctx: _Context, args) -> int:
    lengths = ctx.cfg.get("lengths", DEFAULT_LENGTHS)
    rows = sweep_length(ctx.setup, lengths, ctx.workers, ctx.region)
    return _sweep_output(ctx, "sweep_length", "length_cm", rows, "grating length (cm)", False)


def _cmd_calibrate(ctx: _Context, args) -> int:
    target = args.target if args.target is not None else ctx.cfg.get("target_threshold", 4.5)
    cal = calibration(float(target), ctx.setup, workers=ctx.workers)
    derived = dict(ctx.cfg)
    derived["gamma"] = cal.gamma
    path = ctx.out / "calibrated.cfg"
    path.write_text(f"# derived by braggsqueeze calibrate; config_hash={ctx.hash}\n"
                    f"# threshold {bio.fmt(cal.threshold)} GW/cm^2 for target {bio.fmt(target)}\n"
                    + bio.config_text(derived))
    bio.write_json(ctx.out / "metadata.json", ctx.metadata(
        target=target, gamma=cal.gamma, threshold=cal.threshold,
        history=[asdict(h) for h in cal.history]))
    print(f"gamma={bio.fmt(cal.gamma)} threshold={bio.fmt(cal.threshold)} wrote {path}")
    return 0


def _cmd_converge(ctx: _Context, args) -> int:
    levels = int(ctx.cfg.get("levels", 3))
    rep = convergence_study(ctx.setup, levels, ctx.region, ctx.workers)
    columns = ("dz_cm", "transmission", "R_final", "R_min", "n_steps")
    body = [[bio.fmt(r.dz), bio.fmt(r.transmission), bio.fmt(r.ratio_final), bio.fmt(r.ratio_min),
             str(r.n_steps)] for r in rep.rows]
    bio.write_csv(ctx.out / "convergence.csv", columns, body, ctx.hash, ctx.note)
    bio.write_json(ctx.out / "metadata.json", ctx.metadata(
        order_transmission=rep.order_transmission, order_ratio=rep.order_ratio,
        flagged=rep.flagged, rows=[run_record(r) for r in rep.rows]))
    print(f"observed order: transmission {bio.fmt(rep.order_transmission)}, "
          f"R {bio.fmt(rep.order_ratio)}")
    if rep.flagged:
        print("warning: observed order below 1.5", file=sys.stderr)
    return 0


COMMANDS = {"run": _cmd_run, "sweep-intensity": _cmd_sweep_intensity,
            "sweep-length": _cmd_sweep_length, "calibrate": _cmd_calibrate,
            "converge": _cmd_converge}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        ctx = _Context(args)
        return COMMANDS[args.command](ctx, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ContainmentError as exc:
        print(f"containment violation: {exc}", file=sys.stderr)
        return EXIT_CONTAINMENT
    except (ThresholdError, CalibrationError, MeasurementError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
