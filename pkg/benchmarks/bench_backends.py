"""Timing comparison of the numba and numpy kernel builds.

Run: python3 benchmarks/bench_backends.py

Times the batched 1D fused-cost and gradient kernels on sorted projections of
growing size. Both builds are called directly, so the comparison works no
matter which one the SSFGW_NO_NUMBA flag selected for the library itself; if
numba is not importable, only the numpy column is reported.
"""

import time

import numpy as np

from ssfgw import _kernels


def _time(fn, *args, repeats=5):
    fn(*args)  # warm: triggers JIT compilation on the numba build
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    rng = np.random.default_rng(0)
    beta = 0.1
    print(f"numba available: {_kernels.cost_batch_numba is not None}")
    header = f"{'L x n':>12} {'kernel':>6} {'numpy':>12} {'numba':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for L, n in [(50, 64), (50, 512), (50, 4096), (200, 1024)]:
        A = np.sort(rng.normal(size=(L, n)), axis=1)
        B = np.sort(rng.normal(size=(L, n)), axis=1)
        rows = [("cost", lambda k: k.cost_batch(A, B, beta, 2, True))]
        _, orients = _kernels.cost_batch_numpy(A, B, beta, 2, True)
        rows.append(("grad", lambda k: k.grad_batch(A, B, beta, orients, True)))

        class _Np:
            cost_batch = staticmethod(_kernels.cost_batch_numpy)
            grad_batch = staticmethod(_kernels.grad_batch_numpy)

        class _Nb:
            cost_batch = staticmethod(_kernels.cost_batch_numba)
            grad_batch = staticmethod(_kernels.grad_batch_numba)

        for name, call in rows:
            t_np = _time(call, _Np)
            if _kernels.cost_batch_numba is None:
                print(f"{L}x{n:>7} {name:>6} {t_np * 1e3:>10.3f}ms {'-':>12} {'-':>8}")
                continue
            t_nb = _time(call, _Nb)
            print(
                f"{L}x{n:>7} {name:>6} {t_np * 1e3:>10.3f}ms {t_nb * 1e3:>10.3f}ms "
                f"{t_np / t_nb:>7.1f}x"
            )


if __name__ == "__main__":
    main()
