"""Shared builders for randomized test inputs.

Everything is driven by explicitly seeded random.Random instances so failures
reproduce; tests pick their own seeds.
"""

from __future__ import annotations

import hashlib
import string
import struct

import pytest

from libident.extraction import DEFAULT_CONFIG, build_bloom, build_cc_signature
from libident.model import (
    AnalysisReport,
    BasicBlock,
    FunctionCFG,
    LibrarySignature,
    StringSignature,
)

INSN_POOL = (
    "mov", "add", "sub", "cmp", "jmp", "jne", "je", "call",
    "ret", "push", "pop", "xor", "lea", "nop", "test", "shl",
)

ELF_MACHINES = {"x86": 0x03, "mips": 0x08, "arm": 0x28, "x86_64": 0x3E}


def make_elf(architecture: str = "x86_64", endianness: str = "little", payload: bytes = b"") -> bytes:
    """A minimal ELF header (64 bytes) followed by payload bytes."""
    header = bytearray(0x40)
    header[:4] = b"\x7fELF"
    header[4] = 2
    header[5] = 1 if endianness == "little" else 2
    fmt = "<H" if endianness == "little" else ">H"
    struct.pack_into(fmt, header, 0x12, ELF_MACHINES[architecture])
    return bytes(header) + payload


def string_blob(strings) -> bytes:
    """Embed strings in a binary-ish blob, NUL-separated, so extraction finds
    exactly the ones at least the minimum length."""
    return b"\x00" + b"\x00\x01\xff".join(s.encode("ascii") for s in strings) + b"\x00"


def random_strings(rng, count: int, prefix: str = "s") -> list[str]:
    return [
        f"{prefix}{i}_" + "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(4, 12)))
        for i in range(count)
    ]


def random_function(rng, offset: int, max_blocks: int = 5) -> FunctionCFG:
    n = rng.randint(1, max_blocks)
    offsets = [offset + 0x10 * i for i in range(n)]
    blocks = tuple(
        BasicBlock(offset=o, insn_types=tuple(rng.choice(INSN_POOL) for _ in range(rng.randint(1, 6))))
        for o in offsets
    )
    edges = set()
    for _ in range(rng.randint(0, 2 * n)):
        edges.add((rng.choice(offsets), rng.choice(offsets)))
    return FunctionCFG(name=None, offset=offset, blocks=blocks, edges=tuple(sorted(edges)))


def random_report(rng, n_functions: int | None = None, architecture: str = "x86_64") -> AnalysisReport:
    n = rng.randint(1, 10) if n_functions is None else n_functions
    functions = tuple(random_function(rng, 0x1000 + 0x100 * i) for i in range(n))
    return AnalysisReport(architecture=architecture, endianness="little", functions=functions)


def make_signature(
    strings,
    report: AnalysisReport | None = None,
    *,
    name: str = "lib",
    version: str = "1.0",
    architecture: str = "x86_64",
    config=DEFAULT_CONFIG,
) -> LibrarySignature:
    """Assemble a signature directly from parts, bypassing file extraction.
    The sha256 is of a synthetic blob so distinct inputs get distinct digests."""
    blob = string_blob(strings) if strings else b""
    return LibrarySignature(
        format_version=1,
        library_name=name,
        library_version=version,
        architecture=architecture,
        source_sha256=hashlib.sha256(blob).digest(),
        source_size=len(blob),
        strings=StringSignature.from_strings(strings),
        cc=build_cc_signature(report) if report is not None else None,
        bloom=build_bloom(report, config) if report is not None else None,
    )


def random_signature(rng, *, name: str = "lib", version: str = "1.0", architecture: str = "x86_64",
                     n_strings: int | None = None, n_functions: int | None = None) -> LibrarySignature:
    strings = random_strings(rng, rng.randint(1, 30) if n_strings is None else n_strings)
    report = random_report(rng, n_functions, architecture=architecture)
    return make_signature(strings, report, name=name, version=version, architecture=architecture)


@pytest.fixture
def rng():
    import random

    return random.Random(0xC0FFEE)
