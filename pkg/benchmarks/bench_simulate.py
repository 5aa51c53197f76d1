"""Throughput of the compiled and NumPy Langevin backends.

Run with ``python benchmarks/bench_simulate.py [--steps N] [--repeat R]``.
Both backends integrate the same thermal trajectory; the script reports
integrator steps per second and the largest relative difference between
the two outputs.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from levidm import langevin
from levidm.signals import TrapConfig


def _trap() -> TrapConfig:
    return TrapConfig(
        mass=1e-18,
        omega=tuple(2 * math.pi * f for f in (1e3, 1.1e3, 1.3e3)),
        gamma=(2 * math.pi * 100.0,) * 3,
        temp_cm=(300.0,) * 3,
    )


def _time(backend: str, steps: int, dt: float, repeat: int):
    best, traj = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = langevin.simulate(_trap(), [], steps * dt, dt, seed=7,
                                 record_every=10, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    dt = 1e-6
    backends = ["numpy"] + (["compiled"] if langevin.COMPILED_AVAILABLE else [])
    results = {}
    for name in backends:
        elapsed, traj = _time(name, args.steps, dt, args.repeat)
        results[name] = traj
        print(f"{name:>9}: {elapsed:8.3f} s  {args.steps / elapsed:12.3e} steps/s (3 axes)")
    if len(results) == 2:
        a, b = results["numpy"].positions, results["compiled"].positions
        diff = np.max(np.abs(a - b)) / np.max(np.abs(b))
        print(f"max relative difference between backends: {diff:.2e}")
    else:
        print("compiled backend not built; only the NumPy path was timed")


if __name__ == "__main__":
    main()
