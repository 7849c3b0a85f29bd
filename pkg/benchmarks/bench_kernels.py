"""Compare the compiled kernels against the pure-Python fallback.

Times the two hot loops on representative workloads: Jaro over
name-length code-point sequences, and banded-equality edit distance over
short strings and full 48x48 pixel sequences. Both backends must agree
exactly on every sample; the table reports per-call latency and speedup.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--names N] [--images N]
"""

import argparse
import time

import numpy as np

from profilematch.kernels import available_backends


def _name_pairs(rng, count):
    pairs = []
    for _ in range(count):
        n1, n2 = rng.integers(4, 17, size=2)
        pairs.append((rng.integers(97, 123, size=n1, dtype=np.uint32),
                      rng.integers(97, 123, size=n2, dtype=np.uint32)))
    return pairs


def _pixel_pairs(rng, count):
    return [(rng.integers(0, 256, size=2304, dtype=np.uint8),
             rng.integers(0, 256, size=2304, dtype=np.uint8))
            for _ in range(count)]


def _time(fn, pairs, *extra):
    start = time.perf_counter()
    out = [fn(a, b, *extra) for a, b in pairs]
    return time.perf_counter() - start, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--names", type=int, default=20_000,
                        help="name pairs for the Jaro workload")
    parser.add_argument("--images", type=int, default=50,
                        help="48x48 pixel-sequence pairs for edit distance")
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not importable; timing fallback only")

    rng = np.random.default_rng(0)
    workloads = [
        ("jaro 4-16 cp", "jaro_u32", _name_pairs(rng, args.names), ()),
        ("lev 30 sym", "levenshtein_u8",
         [(a[:30], b[:30]) for a, b in _pixel_pairs(rng, 2000)], (0,)),
        ("lev 2304 px", "levenshtein_u8", _pixel_pairs(rng, args.images),
         (8,)),
    ]

    print(f"{'workload':<14} {'calls':>7} "
          + "".join(f"{name + ' us/call':>18}" for name in backends)
          + ("   speedup" if len(backends) > 1 else ""))
    for label, fn_name, pairs, extra in workloads:
        per_call = {}
        results = {}
        for name, module in backends.items():
            elapsed, out = _time(getattr(module, fn_name), pairs, *extra)
            per_call[name] = 1e6 * elapsed / len(pairs)
            results[name] = out
        first, *rest = results.values()
        for other in rest:
            if other != first:
                raise SystemExit(f"backend disagreement on {label}")
        row = f"{label:<14} {len(pairs):>7} "
        row += "".join(f"{per_call[name]:>18.2f}" for name in backends)
        if "compiled" in per_call and "python" in per_call:
            row += f"   {per_call['python'] / per_call['compiled']:>6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
