"""Time the numba and numpy kernel backends on the default 50 cm grating.

Usage: python3 benchmarks/bench_backends.py [--steps N] [--sites N]

Reports milliseconds per half-step for the classical step, the linearized
step and the adjoint step, plus a short classical run through ``evolve``.
"""
import argparse
import time

import numpy as np

from braggsqueeze import kernels
from braggsqueeze.classical import Stepper, evolve
from braggsqueeze.model import Setup, sech_pulse


def _coefs(n, h, delta=15.0, kappa=10.0, gamma=0.02):
    phase = np.exp(0.5j * h * delta)
    p = phase * np.cos(0.5 * h * kappa) * np.ones(n)
    q = phase * 1j * np.sin(0.5 * h * kappa) * np.ones(n)
    return tuple(np.ascontiguousarray(c) for c in (p.real, p.imag, q.real, q.imag,
                                                   np.full(n, gamma)))


def _time(fn, repeat):
    fn()  # warm-up (JIT compilation)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sites", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--steps", type=int, default=2000, help="steps of the evolve benchmark")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    n, h = args.sites, 0.0025
    coefs = _coefs(n, h)
    x = [rng.standard_normal(n) for _ in range(4)]
    d = [rng.standard_normal(n) for _ in range(4)]
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in sorted(kernels.BACKENDS)) + "   (ms)")
    for name in ("rk_step", "rk_tangent", "rk_adjoint", "rk_adjoint_forward"):
        row = []
        for b in sorted(kernels.BACKENDS):
            k = kernels.get(b)
            fn = getattr(k, name)
            if name == "rk_step":
                y = [v.copy() for v in x]
                call = lambda: fn(*y, *coefs, h)
            else:
                y = [v.copy() for v in d]
                call = lambda: fn(*y, *x, *coefs, h)
            row.append(1e3 * _time(call, args.repeat))
        print(f"{name:<22}" + "".join(f"{t:>12.3f}" for t in row))

    setup = Setup().with_(n_t=args.steps)
    grid = setup.grid()
    init = sech_pulse(setup.pulse, setup.grating, grid)
    row = []
    for b in sorted(kernels.BACKENDS):
        evolve(init, setup.grating, setup.with_(n_t=10).grid(), backend=b)
        t0 = time.perf_counter()
        evolve(init, setup.grating, grid, backend=b, stop_when_contained=False)
        row.append(time.perf_counter() - t0)
    n_active = Stepper.build(setup.grating, grid).n_active
    print(f"{'evolve ' + str(args.steps) + ' steps (s)':<22}" + "".join(f"{t:>12.3f}" for t in row)
          + f"   ({n_active} active sites)")


if __name__ == "__main__":
    main()
