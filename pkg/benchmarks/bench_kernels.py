"""Wall-clock comparison of the compiled and pure-Python kernel backends."""

import argparse
import timeit

import numpy as np

from stabledetect import _kernels_py
from stabledetect.stable import density_table

try:
    from stabledetect import _kernels
except ImportError:
    _kernels = None


def cases(rng, scale):
    x = np.concatenate([-np.logspace(3, -3, 500 * scale), np.logspace(-3, 3, 500 * scale)])
    v = rng.uniform(-np.pi / 2, np.pi / 2, 200_000 * scale)
    w = rng.standard_exponential(v.size)
    y = rng.standard_cauchy((20_000 * scale, 10))
    powers = np.array([0.001, 0.1, 0.2])
    signed = np.array([0, 1, 1], dtype=np.uint8)
    t1, t0 = density_table(0.5, 0.4, 1e-8, 0.05), density_table(0.5, 0.0, 1e-8, 0.05)
    targs = (2.0, t1.x0, t1.u0, t1.step, t1.log_values, t1.tail_slope,
             1.0, t0.x0, t0.u0, t0.step, t0.log_values, t0.tail_slope)
    return {
        "pdf_standard": lambda m: m.pdf_standard(x, 0.5, 0.7, 1e-10),
        "cms_transform": lambda m: m.cms_transform(v, w, 0.5, 1.0),
        "row_power_means": lambda m: m.row_power_means(y, powers, signed),
        "table_llr": lambda m: m.table_llr(y, *targs),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=int, default=1, help="problem size multiplier")
    args = ap.parse_args(argv)
    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases(np.random.default_rng(0), args.scale).items():
        best = {b: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat))
                for b, m in backends.items()}
        speed = best["python"] / best["cython"] if "cython" in best else float("nan")
        print(f"{name:<16}" + "".join(f"{best[b] * 1e3:>10.2f}ms" for b in backends)
              + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
