"""Wall-clock comparison of the compiled and pure-Python kernels.

Run with ``python bench/bench_kernels.py``; prints one line per kernel and
backend plus the speedup.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from superrad import langevin as L
from superrad._backend import get
from superrad.params import SystemParams, params_for_xi
from superrad.su4.mc import SymmetricStateMC, _nq_cap, get_model


def time_mc(backend: str, params: SystemParams, n_traj: int, t_end: float) -> float:
    kern = get(backend)
    model = get_model(params)
    args = model.kernel_args()
    v0 = SymmetricStateMC.ground(model.basis).coeffs
    ts = np.linspace(0.0, t_end, 11)
    out = np.empty((len(ts), 4))
    counts = np.zeros(4, np.int64)
    t0 = time.perf_counter()
    for j in range(n_traj):
        kern.mc_trajectory(*args, v0, 0, ts, 1.0, _nq_cap(params), 0, j, out, counts)
    return time.perf_counter() - t0


def time_langevin(backend: str, params: SystemParams, M: int, n_steps: int) -> float:
    ens = L.initial_ensemble(params, M, seed=0)
    dt = L.max_dt(params)
    t0 = time.perf_counter()
    L.advance(ens, params, dt, n_steps, backend=backend)
    return time.perf_counter() - t0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-atoms", type=int, default=6)
    ap.add_argument("--n-traj", type=int, default=20)
    ap.add_argument("--t-end", type=float, default=5.0)
    ap.add_argument("--ensemble", type=int, default=1000)
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args(argv)
    try:
        get("compiled")
    except ImportError:
        print("compiled kernels unavailable; nothing to compare")
        return 1

    p = params_for_xi(args.n_atoms, 1.0, 1.0)
    times = {b: time_mc(b, p, args.n_traj, args.t_end) for b in ("compiled", "python")}
    print(f"mc_trajectory  N={args.n_atoms} trajectories={args.n_traj} t_end={args.t_end:g}: "
          f"compiled {times['compiled']:.3f}s  python {times['python']:.3f}s  "
          f"speedup {times['python'] / times['compiled']:.1f}x")

    p = params_for_xi(40, 1.0, 1.0)
    times = {b: time_langevin(b, p, args.ensemble, args.steps) for b in ("compiled", "python")}
    print(f"langevin_run   M={args.ensemble} steps={args.steps}: "
          f"compiled {times['compiled']:.3f}s  python {times['python']:.3f}s  "
          f"speedup {times['python'] / times['compiled']:.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
