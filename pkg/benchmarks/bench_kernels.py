"""Compare the compiled simulation kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--samples N] [--repeat K]
"""

import argparse
import statistics
import time

import numpy as np

from passive_ifir import _kernels_py
from passive_ifir.lti import c2d_zoh
from passive_ifir.plants import CARTS, CARTS_NL, DEFAULT_TS, two_cart

try:
    from passive_ifir import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def cases(n: int):
    rng = np.random.default_rng(0)
    d = c2d_zoh(two_cart(), DEFAULT_TS)
    # an iFIR controller with 100 taps, the size used for the two-cart designs
    cnum = np.concatenate([rng.normal(size=100) * 0.05, [0.0]])
    cnum[1:] -= cnum[:-1].copy()
    cnum[0] += 0.02
    cden = np.array([1.0, -1.0])
    u = rng.normal(size=n)
    r = np.ones(n)
    a = d.a_mat
    b, c = d.b_vec[:, 0], d.c_vec[0]
    return {
        "ss_filter": lambda k: k.ss_filter(a, b, c, 0.0, u),
        "tf_filter": lambda k: k.tf_filter(cnum, cden, u),
        "closed_loop_linear": lambda k: k.closed_loop_linear(a, b, c, 0.0, cnum, cden, r),
        "two_cart_open_loop": lambda k: k.two_cart_open_loop(
            CARTS_NL.as_tuple(), u, DEFAULT_TS, 10),
        "two_cart_closed_loop": lambda k: k.two_cart_closed_loop(
            CARTS.as_tuple(), cnum, cden, r, DEFAULT_TS, 10),
    }


def timed(fn, repeat: int) -> float:
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if _compiled is None:
        raise SystemExit("compiled kernels unavailable; run `pip install -e .` first")
    print(f"{'kernel':<22}{'python s':>12}{'cython s':>12}{'speedup':>10}  max |diff|")
    for name, call in cases(args.samples).items():
        t_py = timed(lambda: call(_kernels_py), args.repeat)
        t_cy = timed(lambda: call(_compiled), args.repeat)
        a, b = call(_kernels_py), call(_compiled)
        a, b = (np.concatenate(a), np.concatenate(b)) if isinstance(a, tuple) else (a, b)
        diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        print(f"{name:<22}{t_py:>12.4g}{t_cy:>12.4g}{t_py / t_cy:>10.1f}  {diff:.2e}")


if __name__ == "__main__":
    main()
