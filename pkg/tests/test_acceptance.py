"""Acceptance gate: one test per release criterion.

Each test prints `[acceptance] <criterion>: PASS|FAIL`; `pytest -v` adds the
per-test verdict. Oracles here are written independently of the library code
they check: a bit-by-bit CRC-32, a memoized textbook recursion for edit
distance, trial-division primes, and brute-force set arithmetic.
"""

import json
import math
import random
import time
from contextlib import contextmanager
from dataclasses import replace

from libident.cli import main
from libident.extraction import (
    build_signature,
    compute_cc,
    hash_basic_block,
)
from libident.kernels import IMPLEMENTATION, levenshtein_bytes
from libident.model import (
    AnalysisReport,
    BasicBlock,
    CCSignature,
    FunctionCFG,
)
from libident.refdb import DBLayout, load_references, save_signature
from libident.model import BloomFilter
from libident.similarity import (
    TECHNIQUE_IDS,
    TECHNIQUES,
    compare_bloom,
    compare_cc1,
    compare_cc2,
    compare_cc3,
    compare_str2,
    rank,
)
from tests.conftest import (
    make_elf,
    make_signature,
    random_report,
    random_signature,
    random_strings,
    string_blob,
)


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL")
        raise
    print(f"[acceptance] {name}: PASS")


@contextmanager
def deadline(seconds: float, what: str):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"{what} took {elapsed:.2f}s, budget {seconds}s"


# Independent oracles


def crc32_oracle(data: bytes) -> int:
    """Bit-by-bit reflected CRC-32: polynomial 0xEDB88320, init and final
    XOR 0xFFFFFFFF. No tables, no library calls."""
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            if crc & 1:
                crc = (crc >> 1) ^ 0xEDB88320
            else:
                crc >>= 1
    return crc ^ 0xFFFFFFFF


def levenshtein_oracle(a: bytes, b: bytes, memo: dict) -> int:
    """The textbook exponential recursion, memoized so exhausting all short
    pairs stays feasible; memoization cannot change its values."""
    key = (a, b)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if not a:
        result = len(b)
    elif not b:
        result = len(a)
    else:
        result = min(
            levenshtein_oracle(a[1:], b, memo) + 1,
            levenshtein_oracle(a, b[1:], memo) + 1,
            levenshtein_oracle(a[1:], b[1:], memo) + (a[0] != b[0]),
        )
    memo[key] = result
    return result


def nth_prime_oracle(n: int) -> int:
    """Trial-division prime walk, independent of the library's sieve."""
    count, candidate = 0, 1
    while count < n:
        candidate += 1
        if all(candidate % d for d in range(2, int(math.isqrt(candidate)) + 1)):
            count += 1
    return candidate


def multiset_jaccard_oracle(a: list, b: list) -> float:
    """Per-element min/max counting with plain dicts."""
    counts_a: dict = {}
    counts_b: dict = {}
    for x in a:
        counts_a[x] = counts_a.get(x, 0) + 1
    for x in b:
        counts_b[x] = counts_b.get(x, 0) + 1
    keys = set(counts_a) | set(counts_b)
    inter = sum(min(counts_a.get(k, 0), counts_b.get(k, 0)) for k in keys)
    union = sum(max(counts_a.get(k, 0), counts_b.get(k, 0)) for k in keys)
    return 1.0 if union == 0 else inter / union


REPORT_JSON = {
    "architecture": "x86_64",
    "endianness": "little",
    "functions": [
        {
            "name": "check",
            "offset": 16,
            "blocks": [
                {"offset": 16, "insn_types": ["cmp", "jne"]},
                {"offset": 32, "insn_types": ["mov", "ret"]},
                {"offset": 48, "insn_types": ["ret"]},
            ],
            "edges": [[16, 32], [16, 48], [32, 48]],
        },
        {
            "name": "leaf",
            "offset": 128,
            "blocks": [{"offset": 128, "insn_types": ["ret"]}],
            "edges": [],
        },
    ],
}


def test_criterion_self_match(tmp_path, capsys):
    """Storing a signature and identifying the very same file must put it on
    top with similarity 1.0 under every technique."""
    with criterion("self-match 1.0 across all six techniques"), deadline(5.0, "self-match"):
        sample = tmp_path / "libdemo.so"
        sample.write_bytes(make_elf("x86_64", payload=string_blob(random_strings(random.Random(1), 40))))
        report = tmp_path / "report.json"
        report.write_text(json.dumps(REPORT_JSON))
        db = tmp_path / "db"

        assert main([
            "generate-db", str(db), str(sample),
            "--name", "libdemo", "--version", "3.1.4", "--report", str(report),
        ]) == 0
        capsys.readouterr()
        assert main([
            "identify", str(db), str(sample), "--report", str(report), "--json",
        ]) == 0
        out = json.loads(capsys.readouterr().out)

        assert set(out["techniques"]) == set(TECHNIQUE_IDS)
        for tid in TECHNIQUE_IDS:
            top = out["techniques"][tid][0]
            assert (top["name"], top["version"]) == ("libdemo", "3.1.4"), tid
            assert top["similarity"] == 1.0, tid


def _version_chain(rng, length=6):
    """Cumulative mutations: each version adds 5 fresh strings, replaces 3
    not-yet-touched originals with fresh ones, and appends 2 functions with
    random complexity at higher offsets."""
    strings = [f"orig_{i:03d}_{rng.random():.8f}" for i in range(60)]
    untouched = list(range(60))
    functions = [_cc_function(0x1000, rng.randint(1, 8), rng)]
    versions = []
    serial = 0
    for v in range(length):
        if v > 0:
            strings = strings + [f"added_v{v}_{i}_{rng.random():.8f}" for i in range(5)]
            for _ in range(3):
                idx = untouched.pop(rng.randrange(len(untouched)))
                strings[idx] = f"edited_v{v}_{serial}_{rng.random():.8f}"
                serial += 1
            for _ in range(2):
                functions = functions + [_cc_function(0x1000 + 0x200 * len(functions), rng.randint(1, 8), rng)]
        report = AnalysisReport("x86_64", "little", tuple(functions))
        versions.append(make_signature(list(strings), report, name="chainlib", version=f"{v + 1}.0"))
    return versions


def _cc_function(base: int, cc: int, rng) -> FunctionCFG:
    n = cc + 1
    offsets = [base + 0x10 * j for j in range(n)]
    blocks = tuple(
        BasicBlock(o, tuple(rng.choice(("mov", "add", "cmp", "ret")) for _ in range(rng.randint(1, 4))))
        for o in offsets
    )
    chain = [(offsets[j], offsets[j + 1]) for j in range(n - 1)]
    backs = [(offsets[j + 1], offsets[j]) for j in range(cc - 1)]
    return FunctionCFG(None, base, blocks, tuple(chain + backs))


def test_criterion_version_ordering():
    """Similarity to the newest version must fall strictly with chain distance
    for str1, str2, cc1, and cc3."""
    with criterion("version chain strictly ordered (str1, str2, cc1, cc3)"), deadline(10.0, "version ordering"):
        versions = _version_chain(random.Random(20260816))
        newest = versions[-1]
        for tid in ("str1", "str2", "cc1", "cc3"):
            scores = [TECHNIQUES[tid].compare(newest, older) for older in versions[:-1]]
            # scores[j] is against version j+1; later versions must score higher
            for j in range(len(scores) - 1):
                assert scores[j] < scores[j + 1], (tid, scores)


def test_criterion_oracle_equivalence():
    """str2, cc3, and bloom must agree exactly with brute-force oracles."""
    with criterion("oracle equivalence for str2, cc3, bloom"), deadline(30.0, "oracle equivalence"):
        rng = random.Random(7001)

        # (a) str2 vs brute-force set Jaccard, 1000 pairs
        pool = random_strings(rng, 120, prefix="p")
        for _ in range(1000):
            a = rng.sample(pool, rng.randint(0, 40))
            b = rng.sample(pool, rng.randint(0, 40))
            sig_a, sig_b = make_signature(a), make_signature(b)
            sa, sb = set(a), set(b)
            expected = 1.0 if not (sa | sb) else len(sa & sb) / len(sa | sb)
            assert abs(compare_str2(sig_a, sig_b) - expected) <= 1e-12

        # (b) cc3 vs per-prime min/max counting, 500 list pairs
        prime_by_cc = {}

        def factors(values):
            out = []
            for v in values:
                if v not in prime_by_cc:
                    prime_by_cc[v] = nth_prime_oracle(v)
                out.append(prime_by_cc[v])
            return out

        for _ in range(500):
            a = [rng.randint(1, 30) for _ in range(rng.randint(0, 50))]
            b = [rng.randint(1, 30) for _ in range(rng.randint(0, 50))]
            got = multiset_jaccard_oracle(factors(a), factors(b))
            sig_a = _sig_with_cc_values(a)
            sig_b = _sig_with_cc_values(b)
            assert abs(compare_cc3(sig_a, sig_b) - got) <= 1e-12

        # (c) bloom vs set Jaccard of exact bucket sets, 200 report pairs
        for _ in range(200):
            ra = random_report(rng, n_functions=rng.randint(1, 60))
            rb = random_report(rng, n_functions=rng.randint(1, 60))
            assert sum(len(f.blocks) for f in ra.functions) <= 300
            buckets_a = {hash_basic_block(b, 32768) for f in ra.functions for b in f.blocks}
            buckets_b = {hash_basic_block(b, 32768) for f in rb.functions for b in f.blocks}
            expected = (
                1.0
                if not (buckets_a | buckets_b)
                else len(buckets_a & buckets_b) / len(buckets_a | buckets_b)
            )
            got = compare_bloom(make_signature(["aaaa"], ra), make_signature(["aaaa"], rb))
            assert abs(got - expected) <= 1e-12


def _sig_with_cc_values(values):
    """Signature carrying exactly these cc values (bypasses CFG construction;
    the bloom side is a placeholder single-block report)."""
    placeholder = AnalysisReport(
        "x86_64", "little", (FunctionCFG(None, 0, (BasicBlock(0, ("ret",)),), ()),)
    )
    base = make_signature(["aaaa"], placeholder)
    return replace(base, cc=CCSignature.from_values(values))


def test_criterion_metric_kernels():
    """Edit distance must match the recursive definition on every short pair;
    CRC-32 must match a bit-by-bit oracle and the standard check value."""
    with criterion("levenshtein exhaustive + crc32 oracle"):
        from libident.extraction import crc32

        assert crc32_oracle(b"123456789") == 0xCBF43926
        assert crc32(b"123456789") == 0xCBF43926
        assert crc32(b"") == 0 == crc32_oracle(b"")
        rng = random.Random(5150)
        for _ in range(200):
            blob = bytes(rng.randrange(256) for _ in range(rng.randrange(64)))
            assert crc32(blob) == crc32_oracle(blob)

        alphabet = b"abc"
        sequences = [b""]
        frontier = [b""]
        for _ in range(6):
            frontier = [s + bytes([c]) for s in frontier for c in alphabet]
            sequences.extend(frontier)
        assert len(sequences) == 1093

        memo: dict = {}
        for i, a in enumerate(sequences):
            for b in sequences[i:]:
                expected = levenshtein_oracle(a, b, memo)
                assert levenshtein_bytes(a, b) == expected
                assert levenshtein_bytes(b, a) == expected


def test_criterion_formula_checks():
    """Complexity of a single-block, edge-free function is 1; the factor
    product for cc values [1, 2, 2] is 2 * 3 * 3 = 18."""
    with criterion("cc formula and factor product"):
        rng = random.Random(8)
        for _ in range(50):
            block = BasicBlock(0, tuple(rng.choice(("mov", "ret", "nop")) for _ in range(rng.randint(1, 5))))
            func = FunctionCFG(None, 0, (block,), ())
            assert compute_cc(func) == 1
        assert math.prod(CCSignature.from_values([1, 2, 2]).spp_factors) == 18
        assert nth_prime_oracle(1) == 2 and nth_prime_oracle(2) == 3


def test_criterion_permutation_suite():
    """Reordering strings, functions, or blocks must not move str1, str2, cc2,
    cc3, or bloom; one constructed function transposition must move cc1."""
    with criterion("permutation invariance + cc1 sensitivity"):
        rng = random.Random(1312)
        for _ in range(100):
            strings = random_strings(rng, rng.randint(1, 25))
            report = random_report(rng, n_functions=rng.randint(1, 8))
            original = make_signature(strings, report)
            probe = random_signature(rng)

            shuffled_strings = strings[:]
            rng.shuffle(shuffled_strings)
            shuffled_functions = list(report.functions)
            rng.shuffle(shuffled_functions)
            shuffled_functions = [
                FunctionCFG(
                    f.name,
                    f.offset,
                    tuple(sorted(f.blocks, key=lambda b: rng.random())),
                    tuple(sorted(f.edges, key=lambda e: rng.random())),
                    f.declared_cc,
                )
                for f in shuffled_functions
            ]
            permuted = make_signature(
                shuffled_strings,
                AnalysisReport(report.architecture, report.endianness, tuple(shuffled_functions)),
            )

            for tid in ("str1", "str2", "cc2", "cc3", "bloom"):
                fn = TECHNIQUES[tid].compare
                assert fn(original, probe) == fn(permuted, probe), tid

        # cc values (1, 2) vs (2, 1): same set, same multiset, different order.
        before = make_signature(
            ["aaaa"],
            AnalysisReport("x86_64", "little", (_cc_function(0x100, 1, rng), _cc_function(0x900, 2, rng))),
        )
        after = make_signature(
            ["aaaa"],
            AnalysisReport("x86_64", "little", (_cc_function(0x100, 2, rng), _cc_function(0x900, 1, rng))),
        )
        assert before.cc.values == (1, 2) and after.cc.values == (2, 1)
        assert compare_cc1(before, after) != compare_cc1(before, before)
        assert compare_cc2(before, after) == 1.0
        assert compare_cc3(before, after) == 1.0


def test_criterion_range_symmetry_identity():
    """All six comparators: results within [0,1], symmetric, and 1.0 on self."""
    with criterion("range, symmetry, identity over 500 pairs"):
        rng = random.Random(600613)
        for _ in range(500):
            a = random_signature(rng)
            b = random_signature(rng)
            for tid in TECHNIQUE_IDS:
                fn = TECHNIQUES[tid].compare
                ab = fn(a, b)
                assert 0.0 <= ab <= 1.0, tid
                assert ab == fn(b, a), tid
                assert fn(a, a) == 1.0, tid


def _perf_reference_set(rng, count=200):
    placeholder = AnalysisReport(
        "x86_64", "little", (FunctionCFG(None, 0, (BasicBlock(0, ("ret",)),), ()),)
    )
    refs = []
    for i in range(count):
        strings = random_strings(rng, 1000, prefix=f"r{i}")
        values = [rng.randint(1, 40) for _ in range(500)]
        base = make_signature(strings, placeholder, name=f"lib{i:03d}", version="1.0")
        buckets = {rng.randrange(32768) for _ in range(600)}
        refs.append(
            replace(
                base,
                cc=CCSignature.from_values(values),
                bloom=BloomFilter.from_buckets(buckets, 32768),
            )
        )
    return refs


def test_criterion_performance():
    """One full ranking against 200 heavyweight references inside budget:
    under 1 s each for str2, cc1, cc2, bloom; under 10 s for cc3. str1 is
    exempt (quadratic on ~12 KB concatenations; measured separately in
    benchmarks/)."""
    rng = random.Random(414243)
    refs = _perf_reference_set(rng)
    sample = refs[0]
    budgets = {"str2": 1.0, "cc1": 1.0, "cc2": 1.0, "bloom": 1.0, "cc3": 10.0}
    with criterion(f"ranking throughput vs 200 references ({IMPLEMENTATION} kernel)"):
        for tid, budget in budgets.items():
            start = time.perf_counter()
            results = rank(sample, refs, tid)
            elapsed = time.perf_counter() - start
            assert len(results) == len(refs)
            assert elapsed < budget, f"{tid} ranking took {elapsed:.2f}s, budget {budget}s"


def test_criterion_db_round_trip(tmp_path):
    """50 random signatures survive save/load bit-identically; the filter
    returns exactly the per-architecture subset."""
    with criterion("database round-trip and architecture filter"):
        rng = random.Random(50)
        db = DBLayout.at(tmp_path / "db")
        saved = []
        for i in range(50):
            arch = rng.choice(("x86", "arm", "mips", "x86_64"))
            sig = random_signature(rng, name=f"lib{i:02d}", version=f"{rng.randint(0, 3)}.{i}", architecture=arch)
            save_signature(db, sig)
            saved.append(sig)

        loaded = load_references(db)
        assert sorted(loaded, key=lambda s: (s.library_name, s.library_version)) == sorted(
            saved, key=lambda s: (s.library_name, s.library_version)
        )
        for sig, twin in zip(
            sorted(saved, key=lambda s: s.library_name),
            sorted(loaded, key=lambda s: s.library_name),
        ):
            assert twin.source_sha256 == sig.source_sha256
            assert twin.bloom.bits == sig.bloom.bits

        for arch in ("x86", "arm", "mips", "x86_64"):
            subset = load_references(db, architecture_filter=arch)
            expected = sorted(
                (s for s in saved if s.architecture == arch),
                key=lambda s: (s.library_name, s.library_version, s.architecture),
            )
            assert subset == expected
