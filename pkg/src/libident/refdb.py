"""On-disk reference signature database.

Layout: <root>/<library_name>/<library_version>/<architecture>.sig.json, one
JSON document per signature, plus an optional manifest.json index at the root.
Writes go through a temp file and os.replace so readers never observe a
half-written entry.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

from .model import (
    BloomFilter,
    CCSignature,
    ConflictError,
    LibrarySignature,
    NotFoundError,
    StringSignature,
    ValidationError,
)

logger = logging.getLogger(__name__)

ENTRY_SUFFIX = ".sig.json"
MANIFEST_NAME = "manifest.json"
_TMP_PREFIX = ".tmp-"


@dataclass(frozen=True)
class DBLayout:
    """A reference database rooted at a directory."""

    root: Path

    @classmethod
    def at(cls, root: str | Path) -> "DBLayout":
        return cls(Path(root))

    def entry_path(self, library_name: str, library_version: str, architecture: str) -> Path:
        for token in (library_name, library_version, architecture):
            _check_path_token(token)
        return self.root / library_name / library_version / (architecture + ENTRY_SUFFIX)

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME


def _check_path_token(token: str) -> None:
    if not token or not isinstance(token, str):
        raise ValidationError("library name, version, and architecture must be nonempty")
    if "/" in token or "\\" in token or "\x00" in token or ".." in token or token.startswith("."):
        raise ValidationError(f"token {token!r} cannot be used as a path component")


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(f"{_TMP_PREFIX}{os.getpid()}-{path.name}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def signature_to_dict(sig: LibrarySignature) -> dict:
    """The JSON interchange form of a signature. Bloom bits are base64 of the
    little-endian bit array (bit i at byte i // 8, position i % 8, LSB first);
    spp_factors are stored so loading skips re-deriving primes."""
    return {
        "format_version": sig.format_version,
        "library_name": sig.library_name,
        "library_version": sig.library_version,
        "architecture": sig.architecture,
        "source_sha256": sig.source_sha256.hex(),
        "source_size": sig.source_size,
        "strings": list(sig.strings.strings),
        "cc_values": list(sig.cc.values) if sig.cc is not None else None,
        "spp_factors": list(sig.cc.spp_factors) if sig.cc is not None else None,
        "bloom": (
            {"m": sig.bloom.m, "bits_b64": base64.b64encode(sig.bloom.bits).decode("ascii")}
            if sig.bloom is not None
            else None
        ),
    }


def signature_from_dict(obj: dict) -> LibrarySignature:
    """Inverse of signature_to_dict, with full validation."""
    if not isinstance(obj, dict):
        raise ValidationError("signature document must be a JSON object")
    version = obj.get("format_version")
    if version != 1:
        raise ValidationError(f"unsupported signature format_version {version!r}")
    try:
        name = obj["library_name"]
        lib_version = obj["library_version"]
        architecture = obj["architecture"]
        sha_hex = obj["source_sha256"]
        size = obj["source_size"]
        strings = obj["strings"]
        cc_values = obj["cc_values"]
        spp_factors = obj["spp_factors"]
        bloom_obj = obj["bloom"]
    except KeyError as exc:
        raise ValidationError(f"signature document is missing key {exc.args[0]!r}") from exc
    for field_name, value in (("library_name", name), ("library_version", lib_version), ("architecture", architecture)):
        if not isinstance(value, str):
            raise ValidationError(f"{field_name} must be a string")
    if not isinstance(sha_hex, str):
        raise ValidationError("source_sha256 must be a hex string")
    try:
        sha = bytes.fromhex(sha_hex)
    except ValueError as exc:
        raise ValidationError(f"source_sha256 is not valid hex: {sha_hex!r}") from exc
    if not isinstance(size, int) or isinstance(size, bool) or size < 0:
        raise ValidationError("source_size must be a non-negative integer")
    if not isinstance(strings, list):
        raise ValidationError("strings must be a list")

    cc = None
    if cc_values is not None:
        if not isinstance(cc_values, list):
            raise ValidationError("cc_values must be a list or null")
        cc = CCSignature.from_values(cc_values)
        if spp_factors is None or tuple(spp_factors) != cc.spp_factors:
            raise ValidationError("stored spp_factors disagree with cc_values")
    elif spp_factors is not None:
        raise ValidationError("spp_factors present without cc_values")

    bloom = None
    if bloom_obj is not None:
        if not isinstance(bloom_obj, dict) or not isinstance(bloom_obj.get("m"), int):
            raise ValidationError("bloom must be null or an object with integer m and bits_b64")
        try:
            bits = base64.b64decode(bloom_obj["bits_b64"], validate=True)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bloom bits_b64 is not valid base64: {exc}") from exc
        bloom = BloomFilter(m=bloom_obj["m"], bits=bits)

    return LibrarySignature(
        format_version=version,
        library_name=name,
        library_version=lib_version,
        architecture=architecture,
        source_sha256=sha,
        source_size=size,
        strings=StringSignature.from_strings(strings),
        cc=cc,
        bloom=bloom,
    )


def _update_manifest(db: DBLayout, sig: LibrarySignature, entry: Path) -> None:
    entries: dict[str, dict] = {}
    if db.manifest_path.exists():
        try:
            for item in json.loads(db.manifest_path.read_text(encoding="utf-8"))["entries"]:
                entries[item["path"]] = item
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            logger.warning("rebuilding unreadable manifest %s: %s", db.manifest_path, exc)
            entries = {}
    rel = entry.relative_to(db.root).as_posix()
    entries[rel] = {
        "library_name": sig.library_name,
        "library_version": sig.library_version,
        "architecture": sig.architecture,
        "path": rel,
        "sha256": hashlib.sha256(entry.read_bytes()).hexdigest(),
    }
    ordered = sorted(entries.values(), key=lambda e: e["path"])
    _write_atomic(db.manifest_path, json.dumps({"format_version": 1, "entries": ordered}, indent=2) + "\n")


def save_signature(db: DBLayout, sig: LibrarySignature, overwrite: bool = False) -> Path:
    """Persist a signature under its (name, version, architecture) key.

    Raises ConflictError when the key exists and overwrite is false, and
    ValidationError when a key token cannot form a safe path component.
    """
    entry = db.entry_path(sig.library_name, sig.library_version, sig.architecture)
    if entry.exists() and not overwrite:
        raise ConflictError(f"entry already exists: {entry} (pass overwrite to replace)")
    entry.parent.mkdir(parents=True, exist_ok=True)
    _write_atomic(entry, json.dumps(signature_to_dict(sig), indent=2) + "\n")
    _update_manifest(db, sig, entry)
    return entry


def _entry_files(db: DBLayout) -> list[Path]:
    files = [
        p
        for p in db.root.glob(f"*/*/*{ENTRY_SUFFIX}")
        if not p.name.startswith(_TMP_PREFIX)
    ]
    files.sort(key=lambda p: (p.parts[-3], p.parts[-2], p.name))
    return files


def load_references(
    db: DBLayout,
    architecture_filter: str | None = None,
    strict: bool = False,
) -> list[LibrarySignature]:
    """Load every entry, or only those matching the architecture filter, in
    (name, version, architecture) order.

    Corrupt entries (bad JSON, schema violations, metadata disagreeing with
    the path) are skipped with a warning; strict mode raises instead. A
    missing root raises NotFoundError.
    """
    if not db.root.is_dir():
        raise NotFoundError(f"reference database root does not exist: {db.root}")
    out = []
    for path in _entry_files(db):
        name, version, arch = path.parts[-3], path.parts[-2], path.name[: -len(ENTRY_SUFFIX)]
        if architecture_filter is not None and arch != architecture_filter:
            continue
        try:
            sig = signature_from_dict(json.loads(path.read_text(encoding="utf-8")))
            if (sig.library_name, sig.library_version, sig.architecture) != (name, version, arch):
                raise ValidationError(
                    f"entry metadata ({sig.library_name}, {sig.library_version}, {sig.architecture}) "
                    f"does not match its path"
                )
        except (ValidationError, json.JSONDecodeError, OSError) as exc:
            if strict:
                raise ValidationError(f"corrupt database entry {path}: {exc}") from exc
            logger.warning("skipping corrupt database entry %s: %s", path, exc)
            continue
        out.append(sig)
    return out


@dataclass(frozen=True)
class DBStats:
    """Aggregate database census."""

    entries: int
    libraries: int
    versions_per_library: dict[str, int]
    architectures: dict[str, int]


def db_stats(db: DBLayout) -> DBStats:
    """Count entries, libraries, distinct versions per library, and entries
    per architecture. Corrupt entries are excluded (with a warning)."""
    refs = load_references(db)
    versions: dict[str, set[str]] = {}
    architectures: dict[str, int] = {}
    for sig in refs:
        versions.setdefault(sig.library_name, set()).add(sig.library_version)
        architectures[sig.architecture] = architectures.get(sig.architecture, 0) + 1
    return DBStats(
        entries=len(refs),
        libraries=len(versions),
        versions_per_library={name: len(v) for name, v in sorted(versions.items())},
        architectures=dict(sorted(architectures.items())),
    )
