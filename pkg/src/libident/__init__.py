"""libident: identify library names and versions in stripped binaries.

Signatures combine three views of a file: its printable strings, the
cyclomatic complexity of each function, and a Bloom filter over hashed basic
blocks. Six comparison techniques score a sample signature against reference
signatures stored in an on-disk database.
"""

from .extraction import (
    DEFAULT_CONFIG,
    ExtractionConfig,
    build_bloom,
    build_cc_signature,
    build_signature,
    compute_cc,
    crc32,
    extract_strings,
    hash_basic_block,
    load_report,
    parse_report,
    sniff_architecture,
)
from .model import (
    AnalysisReport,
    BasicBlock,
    BloomFilter,
    CCSignature,
    ConflictError,
    ConsistencyError,
    DomainError,
    FunctionCFG,
    LibIdentError,
    LibrarySignature,
    MatchResult,
    NoComparableReferencesError,
    NotFoundError,
    StringSignature,
    UnsupportedTechniqueError,
    ValidationError,
    nth_prime,
    validate_report,
)
from .refdb import DBLayout, DBStats, db_stats, load_references, save_signature
from .similarity import (
    TECHNIQUE_IDS,
    TECHNIQUES,
    Technique,
    compare_bloom,
    compare_cc1,
    compare_cc2,
    compare_cc3,
    compare_str1,
    compare_str2,
    jaccard_bits,
    jaccard_sets,
    levenshtein,
    rank,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "BasicBlock",
    "BloomFilter",
    "CCSignature",
    "ConflictError",
    "ConsistencyError",
    "DBLayout",
    "DBStats",
    "DEFAULT_CONFIG",
    "DomainError",
    "ExtractionConfig",
    "FunctionCFG",
    "LibIdentError",
    "LibrarySignature",
    "MatchResult",
    "NoComparableReferencesError",
    "NotFoundError",
    "StringSignature",
    "TECHNIQUES",
    "TECHNIQUE_IDS",
    "Technique",
    "UnsupportedTechniqueError",
    "ValidationError",
    "build_bloom",
    "build_cc_signature",
    "build_signature",
    "compare_bloom",
    "compare_cc1",
    "compare_cc2",
    "compare_cc3",
    "compare_str1",
    "compare_str2",
    "compute_cc",
    "crc32",
    "db_stats",
    "extract_strings",
    "hash_basic_block",
    "jaccard_bits",
    "jaccard_sets",
    "levenshtein",
    "load_references",
    "load_report",
    "nth_prime",
    "parse_report",
    "rank",
    "save_signature",
    "sniff_architecture",
    "validate_report",
    "__version__",
]
