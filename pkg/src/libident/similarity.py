"""The six comparison techniques and the ranking engine.

Each comparator maps a (sample, reference) pair of LibrarySignatures to a
similarity in [0, 1]:

  str1   Levenshtein ratio over the sorted, newline-joined string lists
  str2   Jaccard index of the string sets
  cc1    Levenshtein ratio over the per-function complexity sequences
  cc2    Jaccard index of the complexity value sets
  cc3    multiset Jaccard over small-primes-product factors
  bloom  Jaccard index of the basic-block Bloom filters (popcounts)

All six are symmetric, return 1.0 on identical inputs, and define the
degenerate both-empty case as 1.0.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from . import kernels
from .model import (
    BloomFilter,
    CCSignature,
    DomainError,
    LibrarySignature,
    MatchResult,
    NoComparableReferencesError,
    UnsupportedTechniqueError,
)

logger = logging.getLogger(__name__)

_STRING_JOIN = b"\n"


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Edit distance (unit-cost insert, delete, substitute) between two byte
    strings or two integer sequences."""
    if isinstance(a, (bytes, bytearray, memoryview)) and isinstance(b, (bytes, bytearray, memoryview)):
        return kernels.levenshtein_bytes(bytes(a), bytes(b))
    return kernels.levenshtein_u32(a, b)


def jaccard_sets(a: Iterable, b: Iterable) -> float:
    """|a intersect b| / |a union b|; 1.0 when both sets are empty."""
    sa, sb = set(a), set(b)
    union = len(sa | sb)
    if union == 0:
        return 1.0
    return len(sa & sb) / union


def jaccard_bits(x: BloomFilter, y: BloomFilter) -> float:
    """popcount(x AND y) / popcount(x OR y); 1.0 when both filters are empty."""
    if x.m != y.m:
        raise DomainError(f"cannot compare Bloom filters of different sizes: {x.m} != {y.m}")
    ones_or = (x.as_int | y.as_int).bit_count()
    if ones_or == 0:
        return 1.0
    return (x.as_int & y.as_int).bit_count() / ones_or


def _concatenated_strings(sig: LibrarySignature, max_chars: int | None) -> bytes:
    joined = _STRING_JOIN.join(sorted(s.encode("ascii") for s in sig.strings.strings))
    if max_chars is not None and len(joined) > max_chars:
        logger.warning(
            "str1: truncating %d-byte concatenation of %s/%s to %d bytes",
            len(joined), sig.library_name or "<sample>", sig.library_version or "?", max_chars,
        )
        joined = joined[:max_chars]
    return joined


def compare_str1(
    sample: LibrarySignature,
    reference: LibrarySignature,
    *,
    max_chars: int | None = None,
) -> float:
    """Levenshtein ratio between sorted, newline-joined string lists:
    1 - distance / max(lengths).

    Quadratic in the concatenation lengths. max_chars truncates both
    concatenations (with a warning) to bound the cost; default is exact.
    """
    if max_chars is not None and max_chars < 1:
        raise DomainError(f"max_chars must be >= 1, got {max_chars}")
    a = _concatenated_strings(sample, max_chars)
    b = _concatenated_strings(reference, max_chars)
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - kernels.levenshtein_bytes(a, b) / longest


def compare_str2(sample: LibrarySignature, reference: LibrarySignature) -> float:
    """Jaccard index of the two string sets."""
    return jaccard_sets(sample.strings.string_set, reference.strings.string_set)


def _require_cc(sig: LibrarySignature) -> CCSignature:
    if sig.cc is None:
        raise UnsupportedTechniqueError(
            f"signature {sig.library_name or '<sample>'}/{sig.library_version or '?'} has no complexity data"
        )
    return sig.cc


def compare_cc1(sample: LibrarySignature, reference: LibrarySignature) -> float:
    """Levenshtein ratio between the complexity sequences (function entry-offset
    order), so function reordering can change the score."""
    a = _require_cc(sample).values
    b = _require_cc(reference).values
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - kernels.levenshtein_u32(a, b) / longest


def compare_cc2(sample: LibrarySignature, reference: LibrarySignature) -> float:
    """Jaccard index of the complexity value sets (multiplicity discarded)."""
    return jaccard_sets(_require_cc(sample).value_set, _require_cc(reference).value_set)


def compare_cc3(sample: LibrarySignature, reference: LibrarySignature) -> float:
    """Multiset Jaccard over the prime factors of the small-primes products:
    per-prime minimum counts over per-prime maximum counts."""
    ca = Counter(_require_cc(sample).spp_factors)
    cb = Counter(_require_cc(reference).spp_factors)
    union = (ca | cb).total()
    if union == 0:
        return 1.0
    return (ca & cb).total() / union


def compare_bloom(sample: LibrarySignature, reference: LibrarySignature) -> float:
    """Jaccard index of the basic-block Bloom filters."""
    if sample.bloom is None or reference.bloom is None:
        raise UnsupportedTechniqueError("both signatures need a Bloom filter for this technique")
    if sample.bloom.m != reference.bloom.m:
        raise UnsupportedTechniqueError(
            f"Bloom filter sizes differ: sample m={sample.bloom.m}, reference m={reference.bloom.m}"
        )
    return jaccard_bits(sample.bloom, reference.bloom)


@dataclass(frozen=True)
class Technique:
    """One comparison technique: an identifier and its comparator."""

    id: str
    compare: Callable[[LibrarySignature, LibrarySignature], float]
    needs_cfg: bool


TECHNIQUES: dict[str, Technique] = {
    t.id: t
    for t in (
        Technique("str1", compare_str1, needs_cfg=False),
        Technique("str2", compare_str2, needs_cfg=False),
        Technique("cc1", compare_cc1, needs_cfg=True),
        Technique("cc2", compare_cc2, needs_cfg=True),
        Technique("cc3", compare_cc3, needs_cfg=True),
        Technique("bloom", compare_bloom, needs_cfg=True),
    )
}

TECHNIQUE_IDS: tuple[str, ...] = tuple(TECHNIQUES)


def get_technique(technique: Technique | str) -> Technique:
    if isinstance(technique, Technique):
        return technique
    try:
        return TECHNIQUES[technique]
    except KeyError:
        raise UnsupportedTechniqueError(
            f"unknown technique {technique!r}; expected one of {', '.join(TECHNIQUE_IDS)}"
        ) from None


def supports(sig: LibrarySignature, technique: Technique | str) -> bool:
    """Whether the signature carries the data the technique compares."""
    t = get_technique(technique)
    if not t.needs_cfg:
        return True
    if t.id == "bloom":
        return sig.bloom is not None
    return sig.cc is not None


def comparable(sample: LibrarySignature, reference: LibrarySignature, technique: Technique | str) -> bool:
    """Whether the pair can be compared under the technique (both carry the
    data; Bloom filters agree on size)."""
    t = get_technique(technique)
    if not supports(sample, t) or not supports(reference, t):
        return False
    if t.id == "bloom" and sample.bloom.m != reference.bloom.m:
        return False
    return True


def rank(
    sample: LibrarySignature,
    references: list[LibrarySignature],
    technique: Technique | str,
) -> list[MatchResult]:
    """Compare the sample against every reference and sort the results by
    similarity descending, ties broken by (library_name, library_version).

    References the technique cannot compare (missing complexity or Bloom data,
    mismatched filter size) are skipped with a logged count. Raises
    UnsupportedTechniqueError when the sample itself lacks the data, and
    NoComparableReferencesError when no reference is comparable.
    """
    t = get_technique(technique)
    if not supports(sample, t):
        raise UnsupportedTechniqueError(f"sample signature has no data for technique {t.id}")

    results = []
    skipped = 0
    for reference in references:
        try:
            similarity = t.compare(sample, reference)
        except UnsupportedTechniqueError:
            skipped += 1
            continue
        results.append(
            MatchResult(
                library_name=reference.library_name,
                library_version=reference.library_version,
                technique=t.id,
                similarity=similarity,
            )
        )
    if skipped:
        logger.warning(
            "technique %s: skipped %d of %d references lacking comparable data",
            t.id, skipped, len(references),
        )
    if not results:
        raise NoComparableReferencesError(
            f"no references comparable with the sample under technique {t.id}"
        )
    results.sort(key=lambda r: (-r.similarity, r.library_name, r.library_version))
    return results
