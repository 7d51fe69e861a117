"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run with `python benchmarks/bench_kernels.py`. Set SPHAR_NUMBA=0 to confirm
the package still works (more slowly) without the jitted path.
"""

import time

import numpy as np

from sphar import kernels


def _time(fn, args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(20240817)
    lmax = 20
    ntr = lmax * (lmax + 2)
    n = 8000

    phi = rng.uniform(-0.9, 0.9, ntr)
    a0 = rng.standard_normal(ntr)
    eps = rng.standard_normal((ntr, n))
    panel = rng.standard_normal((ntr, n + 1))
    u = rng.uniform(-1.0, 1.0, 2000)
    theta = rng.uniform(0.0, np.pi, 400)
    phi_ang = rng.uniform(0.0, 2.0 * np.pi, 400)

    cases = {
        "ar1_recursion": (phi, a0, eps),
        "legendre_table": (u, 100),
        "sph_norm_table": (u[:200], 60),
        "ylm_matrix": (theta, phi_ang, 30),
        "track_sums": (panel,),
    }

    if not kernels.HAVE_NUMBA:
        print("numba unavailable; only the numpy path can be timed")

    print(f"{'kernel':<16} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, args in cases.items():
        np_fn, nb_fn = kernels.IMPLEMENTATIONS[name]
        t_np = _time(np_fn, args)
        if nb_fn is not None:
            nb_fn(*args)  # compile before timing
            t_nb = _time(nb_fn, args)
            print(f"{name:<16} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x")
        else:
            print(f"{name:<16} {t_np * 1e3:>8.2f}ms {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
