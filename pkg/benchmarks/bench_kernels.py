"""Timing comparison of the numpy and compiled kernel backends.

Runs the two hot kernels on a realistic workload: one bulk transition count
over a full bin grid, and a storm of small path decodes like the ones the
imputer issues per gap.  Results from both backends are checked for bit
equality while timing, so a speedup never hides a divergence.

Usage::

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --subjects 2000 --gap-calls 20000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fedmarkov import _kernels_py

try:
    from fedmarkov import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None


def make_grid(rng, subjects: int, features: int, windows: int, bins: int, missing: float):
    grid = rng.integers(0, bins, size=(subjects, features, windows))
    grid[rng.random(grid.shape) < missing] = -1
    return grid.astype(np.int64)


def make_matrix(rng, bins: int):
    m = rng.random((bins, bins)) + 1e-3
    return m / m.sum(axis=1, keepdims=True)


def best_of(fn, repeats: int) -> tuple[float, object]:
    result = None
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_count(impl, grid, bins: int, repeats: int):
    return best_of(lambda: impl.count_pairs(grid, bins, 1), repeats)


def bench_decode(impl, matrix, calls, repeats: int):
    def run():
        out = 0
        for left, right, length in calls:
            out += int(impl.gap_path(matrix, left, right, length)[0])
        return out

    return best_of(run, repeats)


def fmt_row(name: str, py: float, comp: float | None) -> str:
    py_s = f"{py * 1e3:10.2f} ms"
    if comp is None:
        return f"{name:<14}{py_s}{'':>16}{'':>10}"
    return f"{name:<14}{py_s}{comp * 1e3:13.2f} ms{py / comp:9.1f}x"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="benchmark the kernel backends")
    parser.add_argument("--subjects", type=int, default=5000)
    parser.add_argument("--features", type=int, default=5)
    parser.add_argument("--windows", type=int, default=24)
    parser.add_argument("--bins", type=int, default=10)
    parser.add_argument("--missing", type=float, default=0.3)
    parser.add_argument("--gap-calls", type=int, default=10000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    grid = make_grid(rng, args.subjects, args.features, args.windows, args.bins, args.missing)
    matrix = make_matrix(rng, args.bins)
    calls = []
    for i in range(args.gap_calls):
        length = int(rng.integers(1, 4))
        anchor = int(rng.integers(0, args.bins))
        if i % 3 == 0:
            calls.append((anchor, int(rng.integers(0, args.bins)), length))  # both ends
        elif i % 3 == 1:
            calls.append((anchor, -1, length))  # forward only
        else:
            calls.append((-1, anchor, length))  # backward only

    print(
        f"workload: count_pairs on {args.subjects}x{args.features}x{args.windows} grid "
        f"({args.bins} bins, {args.missing:.0%} missing), "
        f"{args.gap_calls} gap decodes, best of {args.repeats}"
    )
    if _ckernels is None:
        print("compiled backend not built; timing the numpy fallback only\n")
    header = f"{'kernel':<14}{'python':>13}{'compiled':>16}{'speedup':>10}"
    print(header)
    print("-" * len(header))

    py_t, py_counts = bench_count(_kernels_py, grid, args.bins, args.repeats)
    comp_t = None
    if _ckernels is not None:
        comp_t, comp_counts = bench_count(_ckernels, grid, args.bins, args.repeats)
        assert np.array_equal(py_counts, comp_counts), "backends disagree on counts"
    print(fmt_row("count_pairs", py_t, comp_t))

    py_t, py_sum = bench_decode(_kernels_py, matrix, calls, args.repeats)
    comp_t = None
    if _ckernels is not None:
        comp_t, comp_sum = bench_decode(_ckernels, matrix, calls, args.repeats)
        assert py_sum == comp_sum, "backends disagree on decoded paths"
    print(fmt_row("gap_path", py_t, comp_t))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
