"""Compare the compiled and pure-Python Levenshtein kernels.

Usage: python benchmarks/bench_kernels.py [--sizes 500,2000,8000] [--repeat 3]

Times both element types the comparators use: byte strings (the str1
concatenations) and 32-bit integer sequences (the cc1 value lists), on
random pairs and on a near-identical pair (one mutation per 100 elements, the
adjacent-version case the prefix/suffix trim targets).
"""

from __future__ import annotations

import argparse
import random
import time

from libident import _pykernels

try:
    from libident import _speedups
except ImportError:
    _speedups = None


def _time(fn, *args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def _pairs(size: int, rng: random.Random):
    alphabet = 64
    a = bytes(rng.randrange(alphabet) for _ in range(size))
    b = bytes(rng.randrange(alphabet) for _ in range(size))
    near = bytearray(a)
    for _ in range(max(1, size // 100)):
        near[rng.randrange(size)] = rng.randrange(alphabet)
    ints_a = tuple(rng.randrange(1, 50) for _ in range(size))
    ints_b = tuple(rng.randrange(1, 50) for _ in range(size))
    return [
        ("bytes/random", "levenshtein_bytes", (a, b)),
        ("bytes/near-dup", "levenshtein_bytes", (a, bytes(near))),
        ("u32/random", "levenshtein_u32", (ints_a, ints_b)),
    ]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="500,2000,8000",
                        help="comma-separated sequence lengths (default %(default)s)")
    parser.add_argument("--repeat", type=int, default=3, help="timing repeats, best-of (default %(default)s)")
    parser.add_argument("--seed", type=int, default=1234)
    args = parser.parse_args()

    if _speedups is None:
        print("compiled extension not available; timing the pure kernel only")

    rng = random.Random(args.seed)
    header = f"{'case':<16} {'size':>6} {'pure (s)':>10}"
    if _speedups is not None:
        header += f" {'compiled (s)':>13} {'speedup':>8}"
    print(header)
    for size in (int(s) for s in args.sizes.split(",")):
        for case, fn_name, operands in _pairs(size, rng):
            pure = _time(getattr(_pykernels, fn_name), *operands, repeat=args.repeat)
            line = f"{case:<16} {size:>6} {pure:>10.4f}"
            if _speedups is not None:
                fast = _time(getattr(_speedups, fn_name), *operands, repeat=args.repeat)
                line += f" {fast:>13.4f} {pure / fast:>7.1f}x"
            print(line)


if __name__ == "__main__":
    main()
