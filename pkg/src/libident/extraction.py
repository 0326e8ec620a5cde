"""Signature extraction: printable strings, ELF header sniffing, basic-block
hashing, Bloom filter population, and cyclomatic complexity derivation."""

from __future__ import annotations

import hashlib
import json
import re
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .model import (
    BLOOM_BITS_DEFAULT,
    FORMAT_VERSION,
    AnalysisReport,
    BasicBlock,
    BloomFilter,
    CCSignature,
    ConsistencyError,
    DomainError,
    FunctionCFG,
    LibrarySignature,
    StringSignature,
    ValidationError,
    validate_report,
)

# Byte values the string scanner accepts: 0x20..0x7E plus tab.
DEFAULT_PRINTABLE = frozenset([0x09, *range(0x20, 0x7F)])

UNKNOWN_ARCH = "unknown"

ELF_MAGIC = b"\x7fELF"

# e_machine values mapped to architecture tokens; everything else is unknown.
_ELF_MACHINE_TOKENS = {0x03: "x86", 0x08: "mips", 0x28: "arm", 0x3E: "x86_64"}


@dataclass(frozen=True)
class ExtractionConfig:
    """Knobs for signature extraction. The defaults replicate the plain
    `strings` scan (minimum run of 4) and a 2^15-bit Bloom filter."""

    min_string_length: int = 4
    printable: frozenset[int] = field(default=DEFAULT_PRINTABLE)
    bloom_bits: int = BLOOM_BITS_DEFAULT

    def __post_init__(self) -> None:
        if self.min_string_length < 1:
            raise DomainError(f"min_string_length must be >= 1, got {self.min_string_length}")
        if self.bloom_bits & (self.bloom_bits - 1) or not 2 ** 10 <= self.bloom_bits <= 2 ** 24:
            raise DomainError(f"bloom_bits must be a power of two in [2^10, 2^24], got {self.bloom_bits}")
        if not self.printable or not self.printable <= DEFAULT_PRINTABLE:
            raise DomainError("printable set must be a nonempty subset of tab plus 0x20..0x7E")


DEFAULT_CONFIG = ExtractionConfig()


@lru_cache(maxsize=16)
def _run_pattern(min_length: int, printable: frozenset[int]) -> re.Pattern[bytes]:
    cls = b"".join(re.escape(bytes([b])) for b in sorted(printable))
    return re.compile(b"[" + cls + b"]{" + str(min_length).encode() + b",}")


def extract_strings(data: bytes, config: ExtractionConfig = DEFAULT_CONFIG) -> StringSignature:
    """Collect every maximal run of at least min_string_length printable bytes,
    decoded as ASCII, in file-offset order. Runs end at any non-printable byte
    or at end of input."""
    matcher = _run_pattern(config.min_string_length, config.printable)
    return StringSignature.from_strings(m.group().decode("ascii") for m in matcher.finditer(bytes(data)))


def sniff_architecture(data: bytes) -> tuple[str, str | None]:
    """Read the ELF ident and machine fields and map them to an
    (architecture, endianness) pair.

    Returns ("unknown", None) for non-ELF or truncated input, and
    ("unknown", endianness) for a valid ELF whose machine field is unmapped.
    """
    if len(data) < 0x14 or bytes(data[:4]) != ELF_MAGIC:
        return (UNKNOWN_ARCH, None)
    ei_data = data[5]
    if ei_data == 1:
        endianness = "little"
    elif ei_data == 2:
        endianness = "big"
    else:
        return (UNKNOWN_ARCH, None)
    machine = int.from_bytes(data[0x12:0x14], endianness)
    return (_ELF_MACHINE_TOKENS.get(machine, UNKNOWN_ARCH), endianness)


def crc32(data: bytes) -> int:
    """CRC-32 in the common zlib/IEEE form: reflected polynomial 0xEDB88320,
    initial value 0xFFFFFFFF, final XOR 0xFFFFFFFF."""
    return zlib.crc32(data) & 0xFFFFFFFF


def hash_basic_block(block: BasicBlock, bloom_bits: int = BLOOM_BITS_DEFAULT) -> int:
    """Bucket index of a basic block: crc32 over its instruction-type tokens
    joined with '|', masked to the low log2(bloom_bits) bits.

    The explicit separator keeps the join injective; token validation forbids
    '|' inside a type label.
    """
    if not block.insn_types:
        raise DomainError(f"cannot hash empty block 0x{block.offset:x}")
    if bloom_bits < 2 or bloom_bits & (bloom_bits - 1):
        raise DomainError(f"bloom_bits must be a power of two >= 2, got {bloom_bits}")
    joined = "|".join(block.insn_types).encode("ascii")
    return crc32(joined) & (bloom_bits - 1)


def build_bloom(report: AnalysisReport, config: ExtractionConfig = DEFAULT_CONFIG) -> BloomFilter:
    """Bloom filter with the bucket of every basic block of every function set.
    Blocks hashing to the same bucket set it once."""
    buckets = {
        hash_basic_block(block, config.bloom_bits)
        for func in report.functions
        for block in func.blocks
    }
    return BloomFilter.from_buckets(buckets, config.bloom_bits)


def compute_cc(func: FunctionCFG, strict: bool = False) -> int:
    """Cyclomatic complexity of one function: edges - blocks + 2, floored at 1.

    A declared value from the disassembler wins when present; strict mode
    recomputes and raises ConsistencyError on disagreement.
    """
    computed = max(1, len(func.edges) - len(func.blocks) + 2)
    if func.declared_cc is not None:
        if strict and func.declared_cc != computed:
            raise ConsistencyError(
                f"function 0x{func.offset:x}: declared cc {func.declared_cc} != computed {computed}"
            )
        return func.declared_cc
    return computed


def build_cc_signature(report: AnalysisReport, strict: bool = False) -> CCSignature:
    """Per-function cc values in ascending entry-offset order."""
    ordered = sorted(report.functions, key=lambda f: f.offset)
    return CCSignature.from_values(compute_cc(f, strict=strict) for f in ordered)


def build_signature(
    data: bytes,
    report: AnalysisReport | None = None,
    *,
    library_name: str = "",
    library_version: str = "",
    architecture: str | None = None,
    config: ExtractionConfig = DEFAULT_CONFIG,
    strict_cc: bool = False,
) -> LibrarySignature:
    """Assemble a LibrarySignature from raw file bytes and an optional CFG
    analysis report.

    Strings are always extracted; cc and bloom signatures exist only when a
    report is supplied. An explicit architecture overrides the sniffed one.
    Raises ConsistencyError when the report and the ELF header disagree on
    architecture (and the header is readable).
    """
    data = bytes(data)
    sniffed, _ = sniff_architecture(data)
    if report is not None:
        report = validate_report(report)
        if sniffed != UNKNOWN_ARCH and report.architecture != sniffed:
            raise ConsistencyError(
                f"report architecture {report.architecture!r} does not match ELF header {sniffed!r}"
            )
    if architecture is not None:
        arch = architecture
    elif report is not None:
        arch = report.architecture
    else:
        arch = sniffed
    return LibrarySignature(
        format_version=FORMAT_VERSION,
        library_name=library_name,
        library_version=library_version,
        architecture=arch,
        source_sha256=hashlib.sha256(data).digest(),
        source_size=len(data),
        strings=extract_strings(data, config),
        cc=build_cc_signature(report, strict=strict_cc) if report is not None else None,
        bloom=build_bloom(report, config) if report is not None else None,
    )


def parse_report(source: str | bytes | dict) -> AnalysisReport:
    """Build an AnalysisReport from its JSON interchange form.

    Schema: {"architecture": str, "endianness": "little"|"big", "functions":
    [{"name": str|null, "offset": int, "cc": int|null,
      "blocks": [{"offset": int, "insn_types": [str, ...]}],
      "edges": [[int, int], ...]}]}

    Unknown keys are ignored. The result is unvalidated; run
    validate_report (or use load_report) before trusting it.
    """
    if isinstance(source, (str, bytes)):
        try:
            obj = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"report is not valid JSON: {exc}") from exc
    else:
        obj = source
    if not isinstance(obj, dict):
        raise ValidationError("report must be a JSON object")

    try:
        architecture = obj["architecture"]
        endianness = obj["endianness"]
        raw_functions = obj["functions"]
    except KeyError as exc:
        raise ValidationError(f"report is missing required key {exc.args[0]!r}") from exc
    if not isinstance(architecture, str) or not isinstance(endianness, str):
        raise ValidationError("architecture and endianness must be strings")
    if not isinstance(raw_functions, list):
        raise ValidationError("functions must be a list")

    functions = []
    for raw in raw_functions:
        if not isinstance(raw, dict):
            raise ValidationError(f"function entry must be an object, got {type(raw).__name__}")
        try:
            blocks = tuple(
                BasicBlock(offset=b["offset"], insn_types=tuple(b["insn_types"]))
                for b in raw["blocks"]
            )
            edges = tuple((e[0], e[1]) for e in raw.get("edges", []))
            functions.append(
                FunctionCFG(
                    name=raw.get("name"),
                    offset=raw["offset"],
                    blocks=blocks,
                    edges=edges,
                    declared_cc=raw.get("cc"),
                )
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ValidationError(f"malformed function entry: {exc!r}") from exc
    return AnalysisReport(
        architecture=architecture.strip().lower(),
        endianness=endianness.strip().lower(),
        functions=tuple(functions),
    )


def load_report(path: str | Path) -> AnalysisReport:
    """Parse and validate an AnalysisReport JSON file."""
    return validate_report(parse_report(Path(path).read_text(encoding="utf-8")))
