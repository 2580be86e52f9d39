#!/usr/bin/env python3
"""Time the numba kernels against their numpy twins.

Usage::

    python3 benchmarks/bench_kernels.py            # kernel micro-benchmarks
    python3 benchmarks/bench_kernels.py --admm     # plus one end-to-end solve per backend

The end-to-end run spawns a fresh interpreter per backend because the
active backend is fixed at import time by ``TVGSR_DISABLE_NUMBA``.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from tvgsr import _accel
from tvgsr.temporal import gl_coefficients

KERNELS = ("band_right", "band_right_t", "shrink", "assemble_banded")


def _inputs(n, m, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))
    coeffs = gl_coefficients(1.8, 3)
    A = rng.random((n, n))
    Ls = A + A.T
    Tc = rng.standard_normal((m, m))
    Tc = Tc + Tc.T
    Tg = np.zeros((m, m))
    d = rng.random(n * m)
    return {
        "band_right": (X, coeffs),
        "band_right_t": (X, coeffs),
        "shrink": (X, 0.3),
        "assemble_banded": (Ls, Tc, Tg, d, 3),
    }


def bench_kernels(n, m, repeat):
    args = _inputs(n, m)
    rows = []
    for name in KERNELS:
        f_np = getattr(_accel, f"{name}_np")
        f_nb = getattr(_accel, f"{name}_nb")
        a = args[name]
        out_np, out_nb = f_np(*a), f_nb(*a)  # also warms up the JIT
        err = float(np.max(np.abs(out_np - out_nb)))
        t_np = min(timeit.repeat(lambda: f_np(*a), number=1, repeat=repeat))
        t_nb = min(timeit.repeat(lambda: f_nb(*a), number=1, repeat=repeat))
        rows.append((name, t_np, t_nb, err))
    return rows


_ADMM_SNIPPET = """
import json, time
from tvgsr import SyntheticSpec, make_synthetic, laplacian, LaplacianSpec, sample_mask
from tvgsr import ObservationSet, SolverOptions, baseline_config, recover, add_noise
from tvgsr._accel import backend
spec = SyntheticSpec(n={n}, T=10, repeats={reps})
g, X = make_synthetic(spec)
L = laplacian(g, LaplacianSpec("symmetric_normalized"))
J = sample_mask(*X.shape, 0.3, 0)
obs = ObservationSet(Y=J * add_noise(X, "gaussian:0.1", 0), J=J, ground_truth=X)
cfg = baseline_config("ProposedL2", alpha=1e-4, beta=1e-3)
opts = SolverOptions(rho=1e-6, max_iters=200, primal_tol=1e-300, record_diagnostics=False)
recover(obs, L, cfg, SolverOptions(rho=1e-6, max_iters=2, record_diagnostics=False))
t0 = time.perf_counter()
res = recover(obs, L, cfg, opts)
print(json.dumps({{"backend": backend(), "seconds": time.perf_counter() - t0,
                   "iters": res.iterations}}))
"""


def bench_admm(n, m):
    reps = max(1, m // 20)
    out = []
    for disable in ("0", "1"):
        env = dict(os.environ, TVGSR_DISABLE_NUMBA=disable)
        proc = subprocess.run([sys.executable, "-c", _ADMM_SNIPPET.format(n=n, reps=reps)],
                              env=env, capture_output=True, text=True, check=True)
        out.append(json.loads(proc.stdout.strip().splitlines()[-1]))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--m", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--admm", action="store_true", help="also time a full ADMM solve")
    args = ap.parse_args(argv)

    print(f"n={args.n} m={args.m}  best of {args.repeat}")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}{'max|diff|':>12}")
    for name, t_np, t_nb, err in bench_kernels(args.n, args.m, args.repeat):
        print(f"{name:<18}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>8.1f}x{err:>12.1e}")
    if args.admm:
        print("\nADMM, ProposedL2, 200 iterations")
        for r in bench_admm(args.n, args.m):
            print(f"  {r['backend']:<6} {r['seconds']:.3f} s ({r['iters']} iterations)")


if __name__ == "__main__":
    main()
