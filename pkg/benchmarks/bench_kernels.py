"""Time the numba kernels against the numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 20]

The numba column is empty when numba is not installed or
FREEJUNCTION_NO_NUMBA=1 is set.
"""
import argparse
import time

import numpy as np
from scipy.interpolate import CubicSpline

from freejunction import HAVE_NUMBA, kernels
from freejunction.junction import strip_junction


def best_of(fn, repeat):
    fn()  # warm up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    for N in (16, 32, 64):
        st = strip_junction([90, 135, -135], [1, 1, 1], n_radial=N, n_vertical=N)
        X = st.X + 1e-3 * rng.standard_normal(st.X.shape)
        F, w = st.all_faces()
        yield f"area_and_grad  faces={len(F)}", "area_and_grad", (X, F, w)
        yield f"triangle_areas faces={len(F)}", "triangle_areas", (X, F)
    for ncol in (64, 1024):
        x = np.linspace(0, 1, 65)
        cols = 1.3 * x[:, None] + 0.2 * np.sin(3 * x[:, None] + rng.uniform(0, 1, ncol)) * x[:, None]
        sp = CubicSpline(x, cols, axis=0)
        wn = sp(x)
        targets = np.broadcast_to(np.linspace(0, wn[-1].min(), 65), (ncol, 65)).copy()
        yield f"invert_columns cols={ncol}", "invert_columns", (sp.c, sp.x, wn, targets, 1e-14, 100)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    print(f"backend in use: {'numba' if HAVE_NUMBA else 'numpy'}")
    print(f"{'kernel':<32}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for label, name, a in cases():
        t_np = best_of(lambda: kernels.numpy_kernels[name](*a), args.repeat)
        if HAVE_NUMBA:
            t_nb = best_of(lambda: kernels.numba_kernels[name](*a), args.repeat)
            print(f"{label:<32}{1e3 * t_np:12.3f}{1e3 * t_nb:12.3f}{t_np / t_nb:10.1f}")
        else:
            print(f"{label:<32}{1e3 * t_np:12.3f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
