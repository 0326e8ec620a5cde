"""Pure-Python Levenshtein kernels.

Fallback for platforms where the compiled extension is unavailable. Same
contract as libident._speedups: unit-cost insert/delete/substitute distance.
"""

from __future__ import annotations

IMPLEMENTATION = "python"


def _levenshtein(a, b) -> int:
    # Two-row dynamic program. Trimming the common prefix and suffix first
    # keeps near-identical inputs (the common case when comparing adjacent
    # library versions) cheap.
    if a == b:
        return 0
    start = 0
    end_a, end_b = len(a), len(b)
    while start < end_a and start < end_b and a[start] == b[start]:
        start += 1
    while end_a > start and end_b > start and a[end_a - 1] == b[end_b - 1]:
        end_a -= 1
        end_b -= 1
    a = a[start:end_a]
    b = b[start:end_b]
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)

    previous = list(range(len(b) + 1))
    current = [0] * (len(b) + 1)
    for i, ca in enumerate(a, start=1):
        current[0] = i
        for j, cb in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            )
        previous, current = current, previous
    return previous[len(b)]


def levenshtein_bytes(a: bytes, b: bytes) -> int:
    """Edit distance between two byte strings."""
    return _levenshtein(bytes(a), bytes(b))


def levenshtein_u32(a, b) -> int:
    """Edit distance between two sequences of 32-bit integers."""
    return _levenshtein(tuple(a), tuple(b))
