"""Kernel selection: compiled Levenshtein when available, pure Python otherwise.

Set LIBIDENT_PURE=1 to force the fallback (useful for benchmarking and for
debugging suspected extension bugs).
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("LIBIDENT_PURE"):
    _impl = _pykernels
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

IMPLEMENTATION: str = _impl.IMPLEMENTATION

levenshtein_bytes = _impl.levenshtein_bytes
levenshtein_u32 = _impl.levenshtein_u32


def levenshtein_ratio_bytes(a: bytes, b: bytes) -> float:
    """1 - distance/max(len) similarity over byte strings; 1.0 when both empty."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein_bytes(a, b) / longest


def levenshtein_ratio_u32(a, b) -> float:
    """1 - distance/max(len) similarity over integer sequences; 1.0 when both empty."""
    a = tuple(a)
    b = tuple(b)
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein_u32(a, b) / longest
