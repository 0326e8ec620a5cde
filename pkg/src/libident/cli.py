"""Command-line front end.

Three subcommands: generate-db stores a reference signature, identify ranks a
sample against the database, db-stats summarizes what the database holds.

Exit codes: 0 match, 3 no match above the threshold, 1 runtime error, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import similarity
from .extraction import DEFAULT_CONFIG, ExtractionConfig, build_signature, load_report
from .model import (
    LibIdentError,
    LibrarySignature,
    NoComparableReferencesError,
    UnsupportedTechniqueError,
)
from .refdb import DBLayout, db_stats, load_references, save_signature

logger = logging.getLogger(__name__)

EXIT_MATCH = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NO_MATCH = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="libident",
        description="Identify library names and versions by comparing extracted signatures "
        "against a reference database.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser(
        "generate-db",
        help="extract a signature from a library file and store it in the database",
    )
    gen.add_argument("db_root", help="database root directory (created if missing)")
    gen.add_argument("file", help="library file to fingerprint")
    gen.add_argument("--name", required=True, help="library name, e.g. libpng")
    gen.add_argument("--version", required=True, help="library version, e.g. 1.6.15")
    gen.add_argument("--arch", help="override the architecture sniffed from the file")
    gen.add_argument("--report", help="analysis report JSON (enables the cc and bloom techniques)")
    gen.add_argument("--min-str-len", type=int, default=DEFAULT_CONFIG.min_string_length,
                     help="minimum printable run length for string extraction (default %(default)s)")
    gen.add_argument("--overwrite", action="store_true", help="replace an existing entry")
    gen.set_defaults(func=cmd_generate_db)

    ident = sub.add_parser("identify", help="rank database references by similarity to a sample")
    ident.add_argument("db_root", help="database root directory")
    ident.add_argument("sample", help="sample file to identify")
    ident.add_argument("--technique", default="all",
                       choices=(*similarity.TECHNIQUE_IDS, "all"),
                       help="comparison technique to run (default all)")
    ident.add_argument("--report", help="analysis report JSON for the sample")
    ident.add_argument("--top", type=int, default=10, help="rows shown per technique (default %(default)s)")
    ident.add_argument("--min-similarity", type=float, default=0.0,
                       help="exit 0 only if some result reaches this similarity (default %(default)s)")
    ident.add_argument("--json", action="store_true", help="emit a machine-readable report")
    ident.add_argument("--no-arch-filter", action="store_true",
                       help="compare against references of every architecture")
    ident.set_defaults(func=cmd_identify)

    stats = sub.add_parser("db-stats", help="summarize the reference database")
    stats.add_argument("db_root", help="database root directory")
    stats.set_defaults(func=cmd_db_stats)

    return parser


def cmd_generate_db(args: argparse.Namespace) -> int:
    data = Path(args.file).read_bytes()
    report = load_report(args.report) if args.report else None
    if report is None:
        print(
            "warning: no analysis report given; cc and bloom techniques "
            "will be unavailable for this entry",
            file=sys.stderr,
        )
    config = ExtractionConfig(min_string_length=args.min_str_len)
    sig = build_signature(
        data,
        report,
        library_name=args.name,
        library_version=args.version,
        architecture=args.arch,
        config=config,
    )
    path = save_signature(DBLayout.at(args.db_root), sig, overwrite=args.overwrite)
    print(f"stored {path}")
    functions = str(len(sig.cc.values)) if sig.cc is not None else "-"
    population = str(sig.bloom.population) if sig.bloom is not None else "-"
    print(f"strings: {len(sig.strings.strings)}  functions: {functions}  bloom population: {population}")
    return EXIT_MATCH


def _requested_techniques(name: str) -> tuple[str, ...]:
    return similarity.TECHNIQUE_IDS if name == "all" else (name,)


def _rank_techniques(
    sample: LibrarySignature,
    references: list[LibrarySignature],
    technique_ids: tuple[str, ...],
    warnings: list[str],
) -> dict[str, list | None]:
    ranked: dict[str, list | None] = {}
    for tid in technique_ids:
        if not similarity.supports(sample, tid):
            warnings.append(f"technique {tid} unavailable: sample signature has no data for it")
            ranked[tid] = None
            continue
        skipped = sum(1 for ref in references if not similarity.comparable(sample, ref, tid))
        if skipped:
            warnings.append(
                f"technique {tid}: skipped {skipped} of {len(references)} references lacking comparable data"
            )
        try:
            ranked[tid] = similarity.rank(sample, references, tid)
        except (NoComparableReferencesError, UnsupportedTechniqueError) as exc:
            warnings.append(f"technique {tid} unavailable: {exc}")
            ranked[tid] = None
    return ranked


def cmd_identify(args: argparse.Namespace) -> int:
    if args.top < 1:
        raise LibIdentError(f"--top must be >= 1, got {args.top}")
    data = Path(args.sample).read_bytes()
    report = load_report(args.report) if args.report else None
    sample = build_signature(data, report)

    db = DBLayout.at(args.db_root)
    arch_filter = None if args.no_arch_filter else sample.architecture
    references = load_references(db, architecture_filter=arch_filter)
    if not references:
        where = f"for architecture {arch_filter!r} " if arch_filter is not None else ""
        print(
            f"error: no references {where}in {db.root}"
            + ("" if args.no_arch_filter else " (try --no-arch-filter)"),
            file=sys.stderr,
        )
        return EXIT_ERROR

    warnings: list[str] = []
    ranked = _rank_techniques(sample, references, _requested_techniques(args.technique), warnings)

    if args.json:
        print(json.dumps(_json_report(args.sample, sample, ranked, warnings, args.top), indent=2))
    else:
        _print_tables(args.sample, sample, ranked, warnings, args.top)

    best = max(
        (r.similarity for results in ranked.values() if results for r in results),
        default=None,
    )
    if best is not None and best >= args.min_similarity:
        return EXIT_MATCH
    return EXIT_NO_MATCH


def _json_report(
    sample_path: str,
    sample: LibrarySignature,
    ranked: dict[str, list | None],
    warnings: list[str],
    top: int,
) -> dict:
    return {
        "sample": sample_path,
        "architecture": sample.architecture,
        "techniques": {
            tid: None
            if results is None
            else [
                {"name": r.library_name, "version": r.library_version, "similarity": r.similarity}
                for r in results[:top]
            ]
            for tid, results in ranked.items()
        },
        "warnings": warnings,
    }


def _print_tables(
    sample_path: str,
    sample: LibrarySignature,
    ranked: dict[str, list | None],
    warnings: list[str],
    top: int,
) -> None:
    print(f"sample: {sample_path} (architecture: {sample.architecture})")
    for tid, results in ranked.items():
        print(f"\ntechnique {tid}")
        if results is None:
            print("  unavailable")
            continue
        rows = [(r.library_name, r.library_version, f"{r.similarity * 100:.2f}%") for r in results[:top]]
        name_w = max(len(r[0]) for r in rows)
        version_w = max(len(r[1]) for r in rows)
        for name, version, percent in rows:
            print(f"  {name:<{name_w}}  {version:<{version_w}}  {percent:>7}")
    for line in warnings:
        print(f"warning: {line}", file=sys.stderr)


def cmd_db_stats(args: argparse.Namespace) -> int:
    stats = db_stats(DBLayout.at(args.db_root))
    print(f"entries: {stats.entries}")
    print(f"libraries: {stats.libraries}")
    for name, count in stats.versions_per_library.items():
        print(f"  {name}: {count} version{'s' if count != 1 else ''}")
    arch_list = ", ".join(f"{arch}={count}" for arch, count in stats.architectures.items())
    print(f"architectures: {arch_list if arch_list else '(none)'}")
    return EXIT_MATCH


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LibIdentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
