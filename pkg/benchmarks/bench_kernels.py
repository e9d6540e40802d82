"""Benchmark the compiled kernels against the numpy fallback.

Runs the per-sentence training kernels over a batch of synthetic
sentences at several sizes and prints microseconds per call for each
backend. Invoke from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from depprobe._kernels import available_backends


def make_batch(rng, count, n, width):
    batch = []
    for _ in range(count):
        points = np.ascontiguousarray(rng.normal(size=(n, width)))
        gold = rng.integers(0, 8, size=(n, n)).astype(np.float64)
        gold = np.ascontiguousarray((gold + gold.T) / 2)
        np.fill_diagonal(gold, 0.0)
        labels = rng.integers(0, 37, size=n).astype(np.int64)
        logits = np.ascontiguousarray(rng.normal(size=(n, 37)))
        depths = np.ascontiguousarray(rng.integers(0, 6, size=n).astype(np.float64))
        batch.append((points, gold, logits, labels, depths))
    return batch


def time_call(function, batch, repeats):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        for args in batch:
            function(*args)
        best = min(best, time.perf_counter() - started)
    return best / len(batch) * 1e6


def main():
    rng = np.random.default_rng(0)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    header = f"{'kernel':<22}{'n':>5}{'b':>5}" + "".join(
        f"{name + ' us':>14}" for name in backends
    )
    print(header)
    print("-" * len(header))

    for n, width in ((8, 32), (24, 128), (64, 128), (128, 128)):
        batch = make_batch(rng, count=64, n=n, width=width)
        rows = {
            "distance_matrix": [(points, 1e-9) for points, *_ in batch],
            "structural_loss_grad": [
                (points, gold, 1e-9) for points, gold, *_ in batch
            ],
            "softmax_xent_loss_grad": [
                (logits, labels) for _, _, logits, labels, _ in batch
            ],
            "depth_loss_grad": [
                (points, depths) for points, _, _, _, depths in batch
            ],
        }
        for kernel, args in rows.items():
            timings = [
                time_call(getattr(module, kernel), args, repeats=5)
                for module in backends.values()
            ]
            print(
                f"{kernel:<22}{n:>5}{width:>5}"
                + "".join(f"{t:>14.1f}" for t in timings)
            )
        print()


if __name__ == "__main__":
    main()
