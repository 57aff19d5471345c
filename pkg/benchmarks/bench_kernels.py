"""Benchmark the numerical kernels: numpy fallback vs compiled path.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats 5] [--quick]

Each kernel is timed on representative workloads (frequency-response
sweeps, singular-value reductions, chordal-distance grids, fixed-step
integration) with the medians and speedups printed as a table. When
numba is unavailable or disabled via GRMERS_DISABLE_NUMBA, only the
numpy path is timed.
"""

import argparse
import time

import numpy as np

from grmers import kernels


def _time(fn, args, repeats):
    fn(*args)  # warm-up (triggers compilation on the jitted path)
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best.append(time.perf_counter() - t0)
    return float(np.median(best))


def _workloads(quick):
    rng = np.random.default_rng(42)
    n, m, p = (8, 3, 4) if quick else (16, 4, 6)
    n_w = 200 if quick else 2000
    n_steps = 2000 if quick else 20000

    A = rng.standard_normal((n, n)) - 2.0 * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    D = rng.standard_normal((p, m))
    w = np.logspace(-2, 2, n_w)
    resp = kernels.freq_response_grid_numpy(A, B, C, D, w)
    R1 = rng.standard_normal((n_w, p, m)) + 1j * rng.standard_normal((n_w, p, m))
    R2 = rng.standard_normal((n_w, p, m)) + 1j * rng.standard_normal((n_w, p, m))
    U = rng.standard_normal((n_steps, m))
    x0 = np.zeros(n)

    return [
        ("freq_response_grid", (A, B, C, D, w),
         kernels.freq_response_grid_numpy,
         kernels._freq_response_grid_numba if kernels.HAS_NUMBA else None),
        ("sigma_max_grid", (resp,),
         kernels.sigma_max_grid_numpy,
         kernels._sigma_max_grid_numba if kernels.HAS_NUMBA else None),
        ("chordal_grid", (R1, R2),
         kernels.chordal_grid_numpy,
         kernels._chordal_grid_numba if kernels.HAS_NUMBA else None),
        ("rk4_lti", (A, B, U, x0, 1e-3),
         kernels.rk4_lti_numpy,
         kernels._rk4_lti_numba if kernels.HAS_NUMBA else None),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--quick", action="store_true",
                    help="smaller workloads for a fast sanity run")
    args = ap.parse_args(argv)

    print(f"active backend: {kernels.active_backend()}")
    header = f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, wl_args, fn_np, fn_nb in _workloads(args.quick):
        t_np = _time(fn_np, wl_args, args.repeats)
        if fn_nb is None:
            print(f"{name:<22}{t_np * 1e3:>12.3f}{'n/a':>12}{'n/a':>9}")
            continue
        t_nb = _time(fn_nb, wl_args, args.repeats)
        # Equal outputs guard: mismatched kernels would make the timing
        # comparison meaningless.
        out_np = fn_np(*wl_args)
        out_nb = fn_nb(*wl_args)
        assert np.allclose(out_np, out_nb, rtol=1e-10, atol=1e-12)
        print(
            f"{name:<22}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}"
            f"{t_np / t_nb:>9.2f}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
