"""Compare the numba and numpy backends of the Monte-Carlo hot kernels.

    python benchmarks/bench_kernels.py [--N 2000] [--dim 1024] [--repeat 5]

Both backends are imported side by side (the env flag only picks the default),
so one run times both and checks that they agree (noise to within float
rounding of the transcendental functions, decode statistics exactly).
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from certmark import kernels
from certmark._accel import HAS_NUMBA


def _best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def run(N: int, dim: int, m: int, repeat: int) -> list[tuple[str, str, float]]:
    keys = kernels.sample_keys(0x1234, 0, N)
    logits = np.random.default_rng(0).standard_normal((N, m))
    wt = (np.arange(m) % 2).astype(np.uint8)
    cases = {
        "gaussian_block": {
            "numpy": lambda: kernels.gaussian_block_numpy(keys, dim, 0.1),
            "numba": lambda: kernels.gaussian_block_numba(keys, dim, 0.1),
        },
        "accumulate_decodes": {
            "numpy": lambda: kernels.accumulate_decodes_numpy(logits, wt, m // 2),
            "numba": lambda: kernels.accumulate_decodes_numba(logits, wt, m // 2),
        },
    }
    if HAS_NUMBA:
        a, b = cases["gaussian_block"]["numpy"](), cases["gaussian_block"]["numba"]()
        assert np.allclose(a, b, rtol=0, atol=1e-14), "backends disagree on noise"
        for x, y in zip(cases["accumulate_decodes"]["numpy"](), cases["accumulate_decodes"]["numba"]()):
            assert np.array_equal(x, y), "backends disagree on decode statistics"
    rows = []
    for name, impls in cases.items():
        for backend, fn in impls.items():
            if backend == "numba" and not HAS_NUMBA:
                continue
            fn()  # warm-up / JIT compile
            rows.append((name, backend, _best(fn, repeat)))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=2000, help="noise samples per block")
    ap.add_argument("--dim", type=int, default=1024, help="pixels per sample")
    ap.add_argument("--m", type=int, default=30, help="watermark bits")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rows = run(args.N, args.dim, args.m, args.repeat)
    print(f"N={args.N} dim={args.dim} m={args.m} (best of {args.repeat})")
    print(f"{'kernel':<20}{'backend':<9}{'ms':>10}{'speedup':>9}")
    base = {name: t for name, backend, t in rows if backend == "numpy"}
    for name, backend, t in rows:
        print(f"{name:<20}{backend:<9}{t * 1e3:>10.2f}{base[name] / t:>8.1f}x")


if __name__ == "__main__":
    main()
