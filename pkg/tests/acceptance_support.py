"""Helpers for the acceptance suite: oracles, cached sweep artifacts and the report."""
from __future__ import annotations

import os
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from scipy.integrate import quad

from braggsqueeze import io as bio
from braggsqueeze.cli import identity, main
from braggsqueeze.model import Setup

ROOT = Path(__file__).resolve().parents[1]
RESULTS = Path(os.environ.get("BRAGGSQUEEZE_RESULTS", ROOT / "results"))
REPORT: Dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    REPORT[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(REPORT[n])


def uniform_grating_transmission(delta: float, kappa: float, length: float) -> float:
    """Closed-form power transmission of a uniform grating."""
    q2 = delta * delta - kappa * kappa
    if q2 > 0:
        q = np.sqrt(q2)
        return q2 / (q2 + kappa ** 2 * np.sin(q * length) ** 2)
    if q2 < 0:
        s = np.sqrt(-q2)
        return -q2 / (-q2 + kappa ** 2 * np.sinh(s * length) ** 2)
    return 1.0 / (1.0 + (kappa * length) ** 2)


def bandwidth_corrected_transmission(delta: float, kappa: float, length: float, z0: float) -> float:
    """Closed-form transmission averaged over the power spectrum of ``sech(z/z0)``.

    The spectrum of ``sech(z/z0)`` is ``sech(pi z0 k / 2)``; its square weights
    the detuning offset ``k`` of each plane-wave component.
    """
    weight = lambda k: 1.0 / np.cosh(0.5 * np.pi * z0 * k) ** 2
    width = 40.0 / z0
    edges = [e for e in (-delta - kappa, -delta + kappa, kappa - delta, -kappa - delta)
             if -width < e < width]
    num = quad(lambda k: uniform_grating_transmission(delta + k, kappa, length) * weight(k),
               -width, width, points=edges or None, limit=500)[0]
    den = quad(weight, -width, width, limit=200)[0]
    return num / den


def cached_sweep(command: str, setup: Setup, name: str, workers: int) -> List[Dict[str, str]]:
    """Rows of ``braggsqueeze <command>`` at defaults, rerun unless a matching CSV exists.

    The artifact is reused only when its embedded config hash equals the hash
    of the current default configuration.
    """
    out = RESULTS / command
    path = out / f"{name}.csv"
    want = bio.config_hash(identity(command, setup))
    if not (path.exists() and path.read_text().startswith(f"# config_hash={want}")):
        code = main([command, "--out", str(out), "--workers", str(workers)])
        assert code in (0, 4), f"{command} exited with {code}"
    return bio.read_csv(path)


def local_extrema(y) -> List[int]:
    """Indices of strict interior local minima and maxima."""
    y = np.asarray(y, float)
    return [i for i in range(1, len(y) - 1)
            if (y[i] - y[i - 1]) * (y[i + 1] - y[i]) < 0]


def local_maxima(y) -> List[int]:
    y = np.asarray(y, float)
    return [i for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] > y[i + 1]]


def local_minima(y) -> List[int]:
    return local_maxima(-np.asarray(y, float))
