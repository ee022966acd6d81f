"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on the same inputs under both backends; the script checks
that the outputs agree before reporting the best-of-N time per call.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from aglb import _kernels_py

try:
    from aglb import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

DIM = 65_536
K = 32


def workloads(rng: np.random.Generator) -> dict:
    keys = [f"tok:{i}:{rng.integers(1 << 30)}".encode() for i in range(4096)]
    rows = 20_000
    feats = np.ascontiguousarray(rng.integers(0, DIM, size=(rows, K)), dtype=np.int64)
    weights = rng.normal(size=DIM)
    sizes = rng.integers(2, 12, size=4000)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    logits = rng.normal(size=int(offsets[-1]))
    coef = rng.normal(size=rows)
    return {
        "hash_keys (4096 keys)": lambda m: m.hash_keys(keys, DIM),
        "row_logits (20k x 32)": lambda m: m.row_logits(weights, feats, 1.0),
        "segment_log_softmax (4k segments)": lambda m: m.segment_log_softmax(logits, offsets),
        "scatter_rows (20k x 32)": lambda m: _scatter(m, feats, coef),
    }


def _scatter(m, feats, coef):
    out = np.zeros(DIM)
    m.scatter_rows(out, feats, coef)
    return out


def best_time(fn, repeat: int) -> float:
    number = 3
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<36}{'numpy ms':>10}{'cython ms':>11}{'speedup':>9}")
    for name, call in workloads(rng).items():
        ref = call(_kernels_py)
        t_py = best_time(lambda: call(_kernels_py), args.repeat) * 1e3
        if _compiled is None:
            print(f"{name:<36}{t_py:>10.3f}{'n/a':>11}{'':>9}")
            continue
        got = call(_compiled)
        if not np.allclose(got, ref, rtol=1e-12, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        t_cy = best_time(lambda: call(_compiled), args.repeat) * 1e3
        print(f"{name:<36}{t_py:>10.3f}{t_cy:>11.3f}{t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
