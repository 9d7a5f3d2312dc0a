"""Acceptance suite.

Each test implements one release criterion end to end and prints a single
PASS/FAIL line (run with `pytest -s` to see them as they complete).  The
randomized suites share one fixed seed set; all tolerances are stated
inline.
"""

import time

import pytest

from conftest import (
    ID_BOUNDARY, ID_BOUNDARY_CORE, ID_BOUNDARY_OPTIMIZED_CORE,
    ID_BOUNDARY_SLICE_U1, parse_ok,
)
from gtlc.analysis import analyze
from gtlc.bench import (
    bench_entry, blamed_slice_covers, lattice_configs, run_differential,
)
from gtlc.frontend import parse_expr, parse_program
from gtlc.gen import GenConfig, gen_program
from gtlc.interp import BlamedA, evaluate
from gtlc.optimize import copt, optimize_program, slice_for_module
from gtlc.syntax import (
    ANY_C, ArrowC, BOOL_C, BlameLabel, INT_C, Polarity, structurally_equal,
)
from gtlc.translate import compile_program

SEED_COUNT = 1000
GEN_FUEL = 300_000
CORPUS_FUEL = 100_000_000


def _report(num: int, name: str, failures: list) -> None:
    status = "PASS" if not failures else "FAIL"
    print(f"\nACCEPTANCE {num} {name}: {status}")
    assert not failures, failures[:10]


@pytest.fixture(scope="module")
def generated():
    """The pinned random programs together with their concrete outcomes."""
    out = []
    for seed in range(SEED_COUNT):
        program = gen_program(GenConfig(seed=seed))
        answer, metrics = evaluate(compile_program(program).root, fuel=GEN_FUEL)
        typed = frozenset(m.name for m in program.modules if m.typed)
        out.append((seed, program, answer, metrics, typed))
    return out


@pytest.fixture(scope="module")
def corpus_programs(corpus_path):
    out = []
    for entry in sorted(p for p in corpus_path.iterdir() if p.is_dir()):
        for config in lattice_configs(entry):
            program, diags = parse_program(config.read_text(encoding="utf-8"))
            assert program is not None and not diags, config
            out.append((f"{entry.name}/{config.stem}", program))
    return out


def test_criterion_1_golden_chain():
    failures = []
    t0 = time.perf_counter()

    program = parse_ok(ID_BOUNDARY)
    compiled = compile_program(program)
    if not structurally_equal(compiled.root, parse_expr(ID_BOUNDARY_CORE)):
        failures.append("compilation does not match the expected core program")

    answer, _ = evaluate(compiled.root)
    if answer != BlamedA(BlameLabel("u2", "t1")):
        failures.append(f"expected blame (u2, t1), got {answer}")

    sliced = parse_ok(ID_BOUNDARY_SLICE_U1)
    labels = analyze(compile_program(sliced).root).labels
    if BlameLabel("u1", "t1") in labels:
        failures.append("slice analysis wrongly blames u1")
    if BlameLabel("t1", "u1") not in labels:
        failures.append("slice analysis misses the provider's obligation")

    optimized, report = optimize_program(program)
    if not structurally_equal(optimized.root, parse_expr(ID_BOUNDARY_OPTIMIZED_CORE)):
        failures.append("optimized program does not match the expected output")
    opt_answer, _ = evaluate(optimized.root)
    if opt_answer != BlamedA(BlameLabel("u2", "t1")):
        failures.append(f"optimized run changed the outcome: {opt_answer}")

    elapsed = time.perf_counter() - t0
    if elapsed >= 1.0:
        failures.append(f"took {elapsed:.2f}s, bound is 1s")
    _report(1, "golden chain on the boundary example", failures)


def _contracts_up_to(height):
    leaves = [INT_C, BOOL_C, ANY_C]
    levels = [leaves]
    for _ in range(height - 1):
        smaller = [c for level in levels for c in level]
        levels.append([ArrowC(d, c) for d in smaller for c in smaller])
    return [c for level in levels for c in level]


def test_criterion_2_contract_rewrite_unit_suite():
    failures = []
    t0 = time.perf_counter()

    expected = [
        (INT_C, Polarity.POS, ANY_C),
        (ArrowC(INT_C, INT_C), Polarity.POS, ArrowC(INT_C, ANY_C)),
        (ArrowC(INT_C, INT_C), Polarity.NEG, ArrowC(ANY_C, INT_C)),
        (ArrowC(ANY_C, ANY_C), Polarity.POS, ANY_C),
    ]
    for contract, side, want in expected:
        got = copt(contract, side)
        if got != want:
            failures.append(f"copt({contract}, {side}) = {got}, want {want}")

    contracts = _contracts_up_to(4)
    for c in contracts:
        for s in Polarity:
            once = copt(c, s)
            if copt(once, s) != once:
                failures.append(f"copt not idempotent on {c} at {s}")

    elapsed = time.perf_counter() - t0
    if elapsed >= 1.0:
        failures.append(f"took {elapsed:.2f}s over {len(contracts)} contracts, bound is 1s")
    _report(2, "contract rewriting unit suite", failures)


def test_criterion_3_differential_equivalence(generated, corpus_programs):
    failures = []
    t0 = time.perf_counter()

    for seed, program, answer, metrics, _ in generated:
        for trust in (True, False):
            r = run_differential(program, trust_typed=trust, fuel=GEN_FUEL)
            if not r["agree"]:
                failures.append(f"seed {seed} trust={trust}: answers diverge")
            if not r["checks_reduced"]:
                failures.append(f"seed {seed} trust={trust}: check counts grew")

    for name, program in corpus_programs:
        for trust in (True, False):
            r = run_differential(program, trust_typed=trust, fuel=CORPUS_FUEL)
            if not r["agree"]:
                failures.append(f"{name} trust={trust}: answers diverge")
            if not r["checks_reduced"]:
                failures.append(f"{name} trust={trust}: check counts grew")

    elapsed = time.perf_counter() - t0
    if elapsed >= 300:
        failures.append(f"took {elapsed:.0f}s, bound is 300s")
    _report(3, f"differential equivalence over {SEED_COUNT} programs + corpus",
            failures)


def test_criterion_4_blame_soundness(generated, corpus_programs):
    failures = []
    t0 = time.perf_counter()
    checked = 0

    for seed, program, answer, _, _ in generated:
        if isinstance(answer, BlamedA):
            checked += 1
            if not blamed_slice_covers(program, answer.label):
                failures.append(f"seed {seed}: {answer.label} missed by the slice")

    for name, program in corpus_programs:
        answer, _ = evaluate(compile_program(program).root, fuel=CORPUS_FUEL)
        if isinstance(answer, BlamedA):
            checked += 1
            if not blamed_slice_covers(program, answer.label):
                failures.append(f"{name}: {answer.label} missed by the slice")

    if checked < 50:
        failures.append(f"only {checked} blaming runs; the suite is undersized")
    elapsed = time.perf_counter() - t0
    if elapsed >= 600:
        failures.append(f"took {elapsed:.0f}s, bound is 600s")
    _report(4, f"blame soundness over {checked} blaming runs", failures)


def test_criterion_5_typed_modules_never_blamed(generated, corpus_programs):
    failures = []

    for seed, program, answer, _, typed in generated:
        outcomes = [answer]
        for trust in (True, False):
            compiled, _ = optimize_program(program, trust_typed=trust)
            a, _ = evaluate(compiled.root, fuel=GEN_FUEL)
            outcomes.append(a)
        for a in outcomes:
            if isinstance(a, BlamedA) and a.label.blamed in typed:
                failures.append(f"seed {seed}: typed module {a.label.blamed} blamed")

    for name, program in corpus_programs:
        typed = {m.name for m in program.modules if m.typed}
        answer, _ = evaluate(compile_program(program).root, fuel=CORPUS_FUEL)
        if isinstance(answer, BlamedA) and answer.label.blamed in typed:
            failures.append(f"{name}: typed module {answer.label.blamed} blamed")

    _report(5, "typed modules are never blamed", failures)


def test_criterion_6_check_elimination(corpus_path):
    failures = []

    # Every configuration of the fully-verifiable entries must lose all
    # run-time checking.
    for entry in ("chain", "hotloop"):
        report = bench_entry(corpus_path / entry, iterations=1, fuel=CORPUS_FUEL)
        for config in report["configs"]:
            metrics = config["optimized"]["metrics"]
            if metrics["flat_checks"] != 0 or metrics["wrappers_allocated"] != 0:
                failures.append(f"{entry}/{config['id']}: residual checking "
                                f"{metrics['flat_checks']}/{metrics['wrappers_allocated']}")
            if not config["agree"]:
                failures.append(f"{entry}/{config['id']}: answers diverge")

    # The hot loop: at least a million checks before, none after, and wall
    # time within 10% of the fully-untyped baseline (3 timed iterations).
    report = bench_entry(corpus_path / "hotloop", iterations=3, fuel=CORPUS_FUEL)
    configs = {c["id"]: c for c in report["configs"]}
    hot = configs["1"]
    if hot["unoptimized"]["metrics"]["flat_checks"] < 1_000_000:
        failures.append("hot loop performs fewer than 1e6 checks unoptimized")
    if hot["optimized"]["metrics"]["flat_checks"] != 0:
        failures.append("hot loop keeps checks after optimization")
    ratio = hot["overhead_optimized"]
    if ratio > 1.10:
        failures.append(f"optimized hot loop at {ratio:.3f}x baseline, bound 1.10x")

    _report(6, "check elimination on fully-verifiable entries", failures)


def test_criterion_7_unverifiable_entry_fails_safe(corpus_path):
    failures = []
    text = (corpus_path / "flaggate" / "1.gtl").read_text(encoding="utf-8")
    program = parse_ok(text)

    baseline, _ = evaluate(compile_program(program).root)
    compiled, report = optimize_program(program)
    optimized, _ = evaluate(compiled.root)

    surviving = [d for d in report.dispositions if d.kind != "removed"]
    if not surviving:
        failures.append("the violated obligation was removed")
    else:
        kept_domains = [d.after.dom for d in surviving
                        if isinstance(d.after, ArrowC)]
        if INT_C not in kept_domains:
            failures.append(f"domain obligation missing from {surviving}")
    if not isinstance(baseline, BlamedA):
        failures.append(f"expected the unoptimized run to blame, got {baseline}")
    elif optimized != baseline:
        failures.append(f"blame changed: {baseline} vs {optimized}")

    _report(7, "unverifiable entry keeps its obligation", failures)


def test_criterion_8_analysis_terminates(corpus_programs):
    failures = []
    t0 = time.perf_counter()

    for name, program in corpus_programs:
        for m in program.modules:
            root = compile_program(slice_for_module(program, m.name)).root
            bs = analyze(root)
            if bs.exhausted:
                failures.append(f"{name}, module {m.name}: hit the state cap")

    elapsed = time.perf_counter() - t0
    if elapsed >= 120:
        failures.append(f"took {elapsed:.0f}s, bound is 120s")
    _report(8, "analysis terminates on the whole corpus", failures)
