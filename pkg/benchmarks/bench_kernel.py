"""Benchmark the compiled trajectory kernel against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernel.py [--trajectories N] [--m-values 2,3,5]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from quditlink import _kernel_py

try:
    from quditlink import _kernel_cy
except ImportError:
    _kernel_cy = None


def make_inputs(m: int, n_traj: int, seed: int = 0) -> dict:
    n = 2**m
    rng = np.random.default_rng(seed)
    return dict(
        base_amps=np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128),
        r0=complex(-0.9),
        r1=complex(0.9952618),
        m=m,
        e_sw=0.01,
        alpha=rng.normal(0.0, 0.1, size=(n_traj, n)),
        theta_p=rng.normal(0.0, 0.1, size=(n_traj, n)),
        theta_x=rng.normal(0.0, 0.1 * m / math.sqrt(2.0), size=(n_traj, n)),
        u_wrong=rng.random((n_traj, 2 * m)),
        u_k=rng.random(n_traj),
        det_amp=np.sqrt(0.99 ** (n - 1 - np.arange(n))),
    )


def bench(backend, kwargs, repeats: int = 3) -> float:
    best = math.inf
    for _ in range(repeats):
        started = time.perf_counter()
        backend.run_chunk(**kwargs)
        best = min(best, time.perf_counter() - started)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trajectories", type=int, default=2048)
    parser.add_argument("--m-values", type=str, default="1,2,3,4,5")
    args = parser.parse_args()
    m_values = [int(x) for x in args.m_values.split(",")]

    print(f"{'m':>3} {'python (s)':>12} {'cython (s)':>12} {'speedup':>9}")
    for m in m_values:
        kwargs = make_inputs(m, args.trajectories)
        t_py = bench(_kernel_py, kwargs)
        if _kernel_cy is None:
            print(f"{m:>3} {t_py:>12.4f} {'(not built)':>12} {'-':>9}")
            continue
        t_cy = bench(_kernel_cy, kwargs)
        print(f"{m:>3} {t_py:>12.4f} {t_cy:>12.4f} {t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
