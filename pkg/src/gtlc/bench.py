"""Benchmark harness over a corpus of configuration lattices.

A corpus directory holds one subdirectory per benchmark entry; each entry
holds one `.gtl` file per typed/untyped configuration, named by a bitstring
over the entry's toggleable modules ('1' = typed), so the lattice is
enumerated by the files themselves.  The all-zeros file is the
fully-untyped baseline.

For every configuration the harness runs the program unoptimized and
optimized, reports wall-time overhead of each against the baseline's
unoptimized run (mean over the requested iterations), and reports the
check-count ratio of optimized to unoptimized.  Check counts are the
deterministic signal; wall time is informational.  Configurations whose
optimized answer disagrees with the unoptimized one are flagged, never
fatal.
"""

from __future__ import annotations

import importlib.resources
import statistics
import time
from pathlib import Path

from . import analysis, interp, optimize
from .frontend import check_wellformed, parse_program
from .optimize import Verdict
from .syntax import Program
from .translate import compile_program

BENCH_FUEL = 100_000_000


def corpus_dir() -> Path:
    """The corpus bundled with the package."""
    return Path(importlib.resources.files("gtlc") / "corpus")


def list_entries(corpus: Path) -> list[str]:
    return sorted(d.name for d in corpus.iterdir() if d.is_dir()
                  and any(f.suffix == ".gtl" for f in d.iterdir()))


def lattice_configs(entry_dir: Path) -> list[Path]:
    """Configuration files in lattice order: by number of typed modules,
    then by bitstring value."""
    files = [f for f in entry_dir.iterdir() if f.suffix == ".gtl"]
    return sorted(files, key=lambda f: (f.stem.count("1"), f.stem))


def timed_verdicts(p: Program, trust_typed: bool,
                   budget: int) -> tuple[list[Verdict], dict[str, float]]:
    """Per-module verdicts plus the wall time each module's analysis took."""
    verdicts: list[Verdict] = []
    seconds: dict[str, float] = {}
    parties = p.names()
    for m in p.modules:
        others = frozenset(n for n in parties if n != m.name)
        if trust_typed and m.typed:
            verdicts.append(Verdict(m.name, others, exhausted=False))
            seconds[m.name] = 0.0
            continue
        t0 = time.perf_counter()
        root = compile_program(optimize.slice_for_module(p, m.name)).root
        bs = analysis.analyze(root, budget)
        seconds[m.name] = time.perf_counter() - t0
        if bs.exhausted:
            verdicts.append(Verdict(m.name, frozenset(), exhausted=True))
        else:
            blamed_toward = {l.holder for l in bs.labels if l.blamed == m.name}
            verdicts.append(Verdict(m.name, others - blamed_toward, exhausted=False))
    return verdicts, seconds


def _run_times(root, fuel: int, iterations: int):
    if iterations > 1:
        interp.evaluate(root, fuel=fuel)  # warmup, untimed
    answers = []
    times = []
    metrics = None
    for _ in range(max(1, iterations)):
        a, m = interp.evaluate(root, fuel=fuel)
        answers.append(a)
        times.append(m.wall_time)
        metrics = m
    mean = statistics.fmean(times)
    sd = statistics.stdev(times) if len(times) > 1 else 0.0
    return answers[0], metrics, mean, sd


def bench_entry(entry_dir: Path, iterations: int = 3, fuel: int = BENCH_FUEL,
                budget: int = analysis.DEFAULT_BUDGET,
                trust_typed: bool = True) -> dict:
    configs = []
    baseline_mean = None
    for path in lattice_configs(entry_dir):
        text = path.read_text(encoding="utf-8")
        program, diags = parse_program(text)
        if program is not None:
            diags = diags + check_wellformed(program)
        if program is None or diags:
            configs.append({"id": path.stem, "path": str(path), "failed": True,
                            "diagnostics": [str(d) for d in diags]})
            continue
        compiled = compile_program(program)
        answer, metrics, mean, sd = _run_times(compiled.root, fuel, iterations)

        verdicts, seconds = timed_verdicts(program, trust_typed, budget)
        opt_compiled, report = optimize.optimize_program(
            program, trust_typed=trust_typed, budget=budget, verdicts=verdicts)
        opt_answer, opt_metrics, opt_mean, opt_sd = _run_times(
            opt_compiled.root, fuel, iterations)

        if baseline_mean is None:  # lattice order puts the all-untyped file first
            baseline_mean = mean

        checks = metrics.flat_checks
        configs.append({
            "id": path.stem,
            "path": str(path),
            "failed": False,
            "typed_modules": [m.name for m in program.modules if m.typed],
            "unoptimized": {
                "answer": interp.answer_to_json(answer),
                "metrics": metrics.as_dict(),
                "time_mean": mean, "time_sd": sd,
            },
            "optimized": {
                "answer": interp.answer_to_json(opt_answer),
                "metrics": opt_metrics.as_dict(),
                "time_mean": opt_mean, "time_sd": opt_sd,
            },
            "overhead_unoptimized": mean / baseline_mean,
            "overhead_optimized": opt_mean / baseline_mean,
            "check_ratio": (opt_metrics.flat_checks / checks) if checks else None,
            "agree": interp.answer_to_json(answer) == interp.answer_to_json(opt_answer),
            "optimization": report.as_json(),
            "analysis_seconds": seconds,
        })
    return {"entry": entry_dir.name, "configs": configs}


def bench_corpus(corpus: Path, iterations: int = 3, fuel: int = BENCH_FUEL,
                 budget: int = analysis.DEFAULT_BUDGET,
                 trust_typed: bool = True) -> dict:
    entries = [bench_entry(corpus / name, iterations, fuel, budget, trust_typed)
               for name in list_entries(corpus)]
    return {"schema": 1, "corpus": str(corpus), "iterations": iterations,
            "entries": entries}


# ---------------------------------------------------------------------------
# Differential and soundness harness primitives
# ---------------------------------------------------------------------------

def answers_agree(a: interp.Answer, b: interp.Answer) -> bool:
    """Semantic agreement of two run outcomes.  First-order results compare
    directly once guards are stripped.  Two function results count as
    agreeing: optimization rewrites the monitors inside closure bodies, and
    the removals are justified only against the interactions the program
    itself performs, so applying result functions to fresh arguments would
    probe behaviour outside the guarantee."""
    if type(a) is not type(b):
        return False
    if isinstance(a, interp.BlamedA):
        return a.label == b.label
    if not isinstance(a, interp.ValA):
        return True  # both stuck, or both out of fuel
    va = interp.strip_guards(a.value)
    vb = interp.strip_guards(b.value)
    if type(va) is interp.VInt and type(vb) is interp.VInt:
        return va.n == vb.n
    if type(va) is interp.VBool and type(vb) is interp.VBool:
        return va.b == vb.b
    return interp.is_function(va) and interp.is_function(vb)


def run_differential(program: Program, trust_typed: bool = True,
                     fuel: int = 1_000_000,
                     budget: int = analysis.DEFAULT_BUDGET) -> dict:
    """Evaluate a program unoptimized and optimized and compare.  When one
    side runs out of fuel, both are retried with a hundredfold budget before
    the outcomes are compared."""
    original = compile_program(program)
    optimized, report = optimize.optimize_program(
        program, trust_typed=trust_typed, budget=budget)
    a0, m0 = interp.evaluate(original.root, fuel=fuel)
    a1, m1 = interp.evaluate(optimized.root, fuel=fuel)
    if isinstance(a0, interp.OutOfFuelA) or isinstance(a1, interp.OutOfFuelA):
        a0, m0 = interp.evaluate(original.root, fuel=fuel * 100)
        a1, m1 = interp.evaluate(optimized.root, fuel=fuel * 100)
    return {
        "agree": answers_agree(a0, a1),
        "checks_reduced": (m1.flat_checks <= m0.flat_checks
                           and m1.wrappers_allocated <= m0.wrappers_allocated),
        "original": (a0, m0),
        "optimized": (a1, m1),
        "report": report,
    }


def blamed_slice_covers(program: Program, label,
                        budget: int = analysis.DEFAULT_BUDGET) -> bool:
    """Does the analysis of the blamed module's slice account for a blame
    label observed concretely?  Exhaustion counts as covered (fail-safe)."""
    sliced = optimize.slice_for_module(program, label.blamed)
    bs = analysis.analyze(compile_program(sliced).root, budget)
    return bs.exhausted or label in bs.labels


def render_table(report: dict) -> str:
    """Flat TSV overhead table, one row per configuration."""
    rows = ["entry\tconfig\toverhead\toverhead_opt\tchecks\tchecks_opt\twraps_opt\tagree"]
    for entry in report["entries"]:
        for c in entry["configs"]:
            if c.get("failed"):
                rows.append(f"{entry['entry']}\t{c['id']}\tFAILED\t-\t-\t-\t-\t-")
                continue
            rows.append("\t".join([
                entry["entry"], c["id"],
                f"{c['overhead_unoptimized']:.2f}x",
                f"{c['overhead_optimized']:.2f}x",
                str(c["unoptimized"]["metrics"]["flat_checks"]),
                str(c["optimized"]["metrics"]["flat_checks"]),
                str(c["optimized"]["metrics"]["wrappers_allocated"]),
                "yes" if c["agree"] else "NO",
            ]))
    return "\n".join(rows)
