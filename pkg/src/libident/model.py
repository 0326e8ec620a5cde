"""Shared domain model: analysis reports, signature types, and the prime table
backing the small-primes-product fingerprint.

All types are immutable after construction; validation lives in
:func:`validate_report` and the ``from_*`` constructors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property, lru_cache


class LibIdentError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LibIdentError):
    """An argument is outside the domain an operation is defined on."""


class ValidationError(LibIdentError):
    """A report, signature, or database entry violates a structural invariant."""


class ConsistencyError(LibIdentError):
    """Two sources of the same fact disagree (e.g. declared vs recomputed cc)."""


class UnsupportedTechniqueError(LibIdentError):
    """A signature lacks the data a comparison technique requires."""


class NoComparableReferencesError(LibIdentError):
    """Ranking found zero references comparable with the sample."""


class ConflictError(LibIdentError):
    """A database entry already exists and overwriting was not requested."""


class NotFoundError(LibIdentError):
    """A requested database root or entry does not exist."""


FORMAT_VERSION = 1

# Hard cap on cyclomatic complexity values: no realistic function exceeds it,
# and it bounds the sieve instead of letting pathological inputs grow it.
PRIME_CAP = 10000

BLOOM_BITS_DEFAULT = 2 ** 15

INSN_TOKEN_MAX_LEN = 32

ENDIANNESS_VALUES = ("little", "big")


@lru_cache(maxsize=1)
def _prime_table() -> tuple[int, ...]:
    # n * (ln n + ln ln n) over-approximates the n-th prime for n >= 6.
    bound = int(PRIME_CAP * (math.log(PRIME_CAP) + math.log(math.log(PRIME_CAP)))) + 10
    sieve = bytearray([1]) * (bound + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(bound) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, bound + 1, i)))
    primes = [i for i, flag in enumerate(sieve) if flag]
    return tuple(primes[:PRIME_CAP])


def nth_prime(n: int) -> int:
    """Return the n-th prime (1-based: nth_prime(1) == 2).

    The table is sieved once on first use and memoized; concurrent first calls
    are safe. Raises DomainError for n < 1 or n > PRIME_CAP.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 1 or n > PRIME_CAP:
        raise DomainError(f"prime index must be in 1..{PRIME_CAP}, got {n!r}")
    return _prime_table()[n - 1]


def valid_insn_token(token: object) -> bool:
    """True if token is a usable instruction-type label: nonempty printable
    ASCII of at most 32 bytes, without the '|' join separator."""
    return (
        isinstance(token, str)
        and 0 < len(token) <= INSN_TOKEN_MAX_LEN
        and all(0x20 <= ord(c) <= 0x7E for c in token)
        and "|" not in token
    )


@dataclass(frozen=True)
class BasicBlock:
    """A straight-line run of instructions, reduced to its type tokens."""

    offset: int
    insn_types: tuple[str, ...]


@dataclass(frozen=True)
class FunctionCFG:
    """One function's control-flow graph: blocks plus intra-function edges."""

    name: str | None
    offset: int
    blocks: tuple[BasicBlock, ...]
    edges: tuple[tuple[int, int], ...]
    declared_cc: int | None = None


@dataclass(frozen=True)
class AnalysisReport:
    """Disassembler-independent description of a binary's functions."""

    architecture: str
    endianness: str
    functions: tuple[FunctionCFG, ...]


def validate_report(report: AnalysisReport) -> AnalysisReport:
    """Check every report invariant and return the report with its functions
    sorted by entry offset.

    Idempotent: validating an already valid report returns an equal one.
    Raises ValidationError naming the offending function offset.
    """
    if not report.architecture or not isinstance(report.architecture, str):
        raise ValidationError("report architecture must be a nonempty token")
    if report.endianness not in ENDIANNESS_VALUES:
        raise ValidationError(f"endianness must be 'little' or 'big', got {report.endianness!r}")

    seen_offsets: set[int] = set()
    for func in report.functions:
        where = f"function 0x{func.offset:x}" if isinstance(func.offset, int) else f"function {func.offset!r}"
        if not isinstance(func.offset, int) or isinstance(func.offset, bool) or func.offset < 0:
            raise ValidationError(f"{where}: entry offset must be a non-negative integer")
        if func.offset in seen_offsets:
            raise ValidationError(f"{where}: duplicate function offset")
        seen_offsets.add(func.offset)
        if func.declared_cc is not None and (not isinstance(func.declared_cc, int) or func.declared_cc < 1):
            raise ValidationError(f"{where}: declared cc must be a positive integer")
        if not func.blocks:
            raise ValidationError(f"{where}: function has no basic blocks")
        block_offsets: set[int] = set()
        for block in func.blocks:
            if not isinstance(block.offset, int) or isinstance(block.offset, bool) or block.offset < 0:
                raise ValidationError(f"{where}: block offset must be a non-negative integer")
            if block.offset in block_offsets:
                raise ValidationError(f"{where}: duplicate block offset 0x{block.offset:x}")
            block_offsets.add(block.offset)
            if not block.insn_types:
                raise ValidationError(f"{where}: empty block 0x{block.offset:x}")
            for token in block.insn_types:
                if not valid_insn_token(token):
                    raise ValidationError(f"{where}: invalid instruction type token {token!r}")
        for edge in func.edges:
            if len(edge) != 2:
                raise ValidationError(f"{where}: edge {edge!r} is not a (src, dst) pair")
            for end in edge:
                if end not in block_offsets:
                    raise ValidationError(f"{where}: edge references missing block 0x{end:x}")

    offsets = [f.offset for f in report.functions]
    if offsets != sorted(offsets):
        return replace(report, functions=tuple(sorted(report.functions, key=lambda f: f.offset)))
    return report


@dataclass(frozen=True)
class StringSignature:
    """Printable strings extracted from a file, in file-offset order."""

    strings: tuple[str, ...]

    @classmethod
    def from_strings(cls, strings) -> "StringSignature":
        out = tuple(strings)
        for s in out:
            if not isinstance(s, str) or not s:
                raise ValidationError(f"signature string must be nonempty text, got {s!r}")
            if not all(c == "\t" or 0x20 <= ord(c) <= 0x7E for c in s):
                raise ValidationError(f"signature string contains non-printable bytes: {s!r}")
        return cls(out)

    @cached_property
    def string_set(self) -> frozenset[str]:
        return frozenset(self.strings)


@dataclass(frozen=True)
class CCSignature:
    """Per-function cyclomatic complexity values, in ascending entry-offset order."""

    values: tuple[int, ...]

    @classmethod
    def from_values(cls, values) -> "CCSignature":
        out = tuple(values)
        for v in out:
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValidationError(f"cyclomatic complexity values must be positive integers, got {v!r}")
        return cls(out)

    @cached_property
    def value_set(self) -> frozenset[int]:
        return frozenset(self.values)

    @cached_property
    def spp_factors(self) -> tuple[int, ...]:
        """Sorted multiset of primes indexed by the cc values. Their product is
        the small-primes-product fingerprint; keeping the factors saves a
        factoring step at comparison time."""
        return tuple(sorted(nth_prime(v) for v in self.values))


@dataclass(frozen=True)
class BloomFilter:
    """Fixed-size bit array over basic-block hash buckets.

    Bit i lives in bits[i // 8] at position i % 8, least-significant-bit first.
    """

    m: int
    bits: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.m, int) or self.m < 8 or self.m & (self.m - 1):
            raise DomainError(f"bloom filter size must be a power of two >= 8, got {self.m!r}")
        if len(self.bits) != self.m // 8:
            raise DomainError(f"bloom filter needs {self.m // 8} bytes of bits, got {len(self.bits)}")

    @classmethod
    def empty(cls, m: int = BLOOM_BITS_DEFAULT) -> "BloomFilter":
        return cls(m, bytes(m // 8))

    @classmethod
    def from_buckets(cls, buckets, m: int = BLOOM_BITS_DEFAULT) -> "BloomFilter":
        raw = bytearray(m // 8)
        for bucket in buckets:
            if not 0 <= bucket < m:
                raise DomainError(f"bucket {bucket!r} out of range for m={m}")
            raw[bucket >> 3] |= 1 << (bucket & 7)
        return cls(m, bytes(raw))

    @cached_property
    def population(self) -> int:
        return self.as_int.bit_count()

    @cached_property
    def as_int(self) -> int:
        return int.from_bytes(self.bits, "little")

    def test(self, index: int) -> bool:
        if not 0 <= index < self.m:
            raise DomainError(f"bit index {index} out of range for m={self.m}")
        return bool(self.bits[index >> 3] >> (index & 7) & 1)

    def set_bits(self):
        """Iterate indices of set bits in ascending order."""
        for i in range(self.m):
            if self.bits[i >> 3] >> (i & 7) & 1:
                yield i


@dataclass(frozen=True)
class LibrarySignature:
    """The persisted fingerprint of one library version build.

    cc and bloom are present together or absent together: both derive from a
    CFG analysis report, and an entry without one cannot support the other.
    """

    format_version: int
    library_name: str
    library_version: str
    architecture: str
    source_sha256: bytes
    source_size: int
    strings: StringSignature
    cc: CCSignature | None = None
    bloom: BloomFilter | None = None

    def __post_init__(self) -> None:
        if (self.cc is None) != (self.bloom is None):
            raise ValidationError("cc and bloom signatures must be present together or absent together")
        if len(self.source_sha256) != 32:
            raise ValidationError(f"source_sha256 must be a 32-byte digest, got {len(self.source_sha256)} bytes")

    @property
    def has_cfg_data(self) -> bool:
        return self.cc is not None


@dataclass(frozen=True)
class MatchResult:
    """One ranking row: how similar a reference entry is to the sample."""

    library_name: str
    library_version: str
    technique: str
    similarity: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.similarity <= 1.0:
            raise DomainError(f"similarity must be within [0, 1], got {self.similarity!r}")
