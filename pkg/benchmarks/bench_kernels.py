"""Compare the numba and numpy kernel backends on realistic layer sizes.

Run: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from sparse_evo import kernels

LAYERS = [
    ("input 500x1000", 500, 1000, 20.0),
    ("hidden 1000x1000", 1000, 1000, 20.0),
    ("output 1000x2", 1000, 2, 20.0),
]
BATCH = 100
REPEATS = 50


def build_layer(rng, n_prev, n_next, epsilon):
    p = min(1.0, epsilon * (n_prev + n_next) / (n_prev * n_next))
    mask = rng.random((n_prev, n_next)) < p
    rows, cols = np.nonzero(mask)
    weights = rng.normal(size=rows.size)
    return rows.astype(np.int64), cols.astype(np.int64), weights


def timeit(fn, *args):
    fn(*args)  # warm-up (numba compilation)
    t0 = time.perf_counter()
    for _ in range(REPEATS):
        fn(*args)
    return (time.perf_counter() - t0) / REPEATS * 1e3


def main():
    rng = np.random.default_rng(0)
    backends = sorted(kernels.IMPLEMENTATIONS)
    print(f"available backends: {', '.join(backends)} "
          f"(active: {kernels.BACKEND})")
    print(f"batch={BATCH}, averaged over {REPEATS} calls, times in ms\n")
    header = f"{'kernel':<18} {'layer':<18}" + "".join(f"{b:>10}" for b in backends)
    print(header)
    print("-" * len(header))
    for label, n_prev, n_next, epsilon in LAYERS:
        rows, cols, weights = build_layer(rng, n_prev, n_next, epsilon)
        x_t = np.ascontiguousarray(rng.normal(size=(BATCH, n_prev)).T)
        d_t = np.ascontiguousarray(rng.normal(size=(BATCH, n_next)).T)
        cases = {
            "forward_t": (x_t, rows, cols, weights, n_next),
            "backward_delta_t": (d_t, rows, cols, weights, n_prev),
            "weight_grad_t": (x_t, d_t, rows, cols),
            "edge_dots": (x_t, d_t, rows, cols),
        }
        for name, args in cases.items():
            times = [timeit(kernels.IMPLEMENTATIONS[b][name], *args)
                     for b in backends]
            cells = "".join(f"{t:>10.3f}" for t in times)
            print(f"{name:<18} {label:<18}{cells}")
        print()


if __name__ == "__main__":
    main()
