"""Verdict-driven contract elimination.

For each module X the optimizer analyzes a slice of the program in which
every other module body is replaced by an opaque term (imports marked
opaque in the source stay opaque in every slice).  If the slice's blame set
has no label blaming X toward some party X2, then no run of the full
program can produce that label either, and every obligation of X at the
X/X2 boundary can be dropped: flat contracts where X is the positive party
become the trivial contract, arrow contracts recur with the usual reversal
of parties in the domain, and an arrow reduced to trivial on both sides in
positive position disappears entirely.

Typed modules can be trusted to be blame-free outright (`trust_typed`);
their slices are then skipped.  An analysis that hits its state cap yields
no verdicts for its module, so exhaustion can only cost optimization
opportunity, never soundness.
"""

from __future__ import annotations

from dataclasses import dataclass

from .analysis import analyze, DEFAULT_BUDGET
from .syntax import (
    ANY_C, AnyC, ArrowC, App, BoolC, Contract, Expr, If, IntC, Lam, Let, Mon,
    Module, Opaque, Polarity, Program, Var, flip,
)
from .translate import CompiledProgram, compile_program, scan_boundaries


@dataclass
class Verdict:
    module: str
    safe_against: frozenset[str]
    exhausted: bool

    def as_json(self) -> dict:
        return {"module": self.module,
                "safe_against": sorted(self.safe_against),
                "exhausted": self.exhausted}


@dataclass
class Disposition:
    pos: str
    neg: str
    before: Contract
    after: Contract
    kind: str  # kept | weakened | removed

    def as_json(self) -> dict:
        return {"pos": self.pos, "neg": self.neg,
                "before": str(self.before), "after": str(self.after),
                "kind": self.kind}


@dataclass
class OptimizationReport:
    monitors_before: int
    monitors_after: int
    dispositions: list[Disposition]
    verdicts: list[Verdict]

    def counts(self) -> dict:
        out = {"kept": 0, "weakened": 0, "removed": 0}
        for d in self.dispositions:
            out[d.kind] += 1
        return out

    def as_json(self) -> dict:
        return {
            "monitors_before": self.monitors_before,
            "monitors_after": self.monitors_after,
            "dispositions": [d.as_json() for d in self.dispositions],
            "verdicts": [v.as_json() for v in self.verdicts],
            **self.counts(),
        }


# ---------------------------------------------------------------------------
# Slicing
# ---------------------------------------------------------------------------

def slice_for_module(p: Program, target: str) -> Program:
    """Keep `target`'s body; replace every other body (and the body of any
    module someone imported opaquely) with an opaque term.  Annotations and
    requires are untouched, so all boundary monitors survive compilation."""
    if p.module_named(target) is None:
        raise ValueError(f"unknown module {target!r}")
    marked = {r.target for m in p.modules for r in m.requires if r.opaque}
    out = []
    for m in p.modules:
        if m.name == target and m.name not in marked:
            out.append(m)
        else:
            out.append(Module(m.name, m.ty, m.requires, Opaque(), span=m.span))
    return Program(out)


# ---------------------------------------------------------------------------
# Contract and expression rewriting
# ---------------------------------------------------------------------------

_COPT_CACHE: dict = {}
_ARROW_INTERN: dict = {}


def _arrow(dom: Contract, cod: Contract) -> ArrowC:
    # Hash-consed so repeated rewriting returns identical objects.
    key = (id(dom), id(cod))
    hit = _ARROW_INTERN.get(key)
    if hit is not None and hit[0] is dom and hit[1] is cod:
        return hit[2]
    out = ArrowC(dom, cod)
    if len(_ARROW_INTERN) > 200_000:
        _ARROW_INTERN.clear()
    _ARROW_INTERN[key] = (dom, cod, out)
    return out


def copt(c: Contract, s: Polarity) -> Contract:
    """Drop the obligations of the party on side `s`.  Flat contracts are
    positive-party obligations only; the domain of an arrow swaps sides."""
    key = (id(c), s)
    hit = _COPT_CACHE.get(key)
    if hit is not None and hit[0] is c:
        return hit[1]
    match c:
        case AnyC():
            out: Contract = ANY_C
        case IntC() | BoolC():
            out = ANY_C if s is Polarity.POS else c
        case ArrowC(dom, cod):
            d, r = copt(dom, flip(s)), copt(cod, s)
            if s is Polarity.POS and d == ANY_C and r == ANY_C:
                out = ANY_C
            else:
                out = _arrow(d, r)
        case _:
            raise TypeError(f"not a contract: {c!r}")
    # Keyed by identity with the original kept alive in the entry, so a
    # recycled id cannot alias a different contract.
    if len(_COPT_CACHE) > 200_000:
        _COPT_CACHE.clear()
    _COPT_CACHE[key] = (c, out)
    return out


def opt(e: Expr, x: str, x2: str) -> Expr:
    """Rewrite monitors between `x` and `x2` given that no run can blame
    `x` toward `x2`; everything else recurs structurally."""
    match e:
        case Mon(pos, neg, contract, body):
            if pos == x and neg == x2:
                contract = copt(contract, Polarity.POS)
            elif pos == x2 and neg == x:
                contract = copt(contract, Polarity.NEG)
            return Mon(pos, neg, contract, opt(body, x, x2))
        case App(fn, arg):
            return App(opt(fn, x, x2), opt(arg, x, x2))
        case If(test, then, orelse):
            return If(opt(test, x, x2), opt(then, x, x2), opt(orelse, x, x2))
        case Lam(param, ann, body):
            return Lam(param, ann, opt(body, x, x2))
        case Let(name, rhs, body):
            return Let(name, opt(rhs, x, x2), opt(body, x, x2))
        case _:
            return e


def normalize(e: Expr) -> Expr:
    """Erase monitors whose contract became trivial, then collapse the
    self-aliasing lets this leaves behind at former require boundaries."""
    match e:
        case Mon(pos, neg, contract, body):
            body = normalize(body)
            if contract == ANY_C:
                return body
            return Mon(pos, neg, contract, body)
        case App(fn, arg):
            return App(normalize(fn), normalize(arg))
        case If(test, then, orelse):
            return If(normalize(test), normalize(then), normalize(orelse))
        case Lam(param, ann, body):
            return Lam(param, ann, normalize(body))
        case Let(name, rhs, body):
            rhs = normalize(rhs)
            body = normalize(body)
            if isinstance(rhs, Var) and rhs.name == name:
                return body
            return Let(name, rhs, body)
        case _:
            return e


# ---------------------------------------------------------------------------
# Whole-program optimization
# ---------------------------------------------------------------------------

def compute_verdicts(p: Program, trust_typed: bool = True,
                     budget: int = DEFAULT_BUDGET) -> list[Verdict]:
    parties = p.names()
    verdicts = []
    for m in p.modules:
        others = frozenset(n for n in parties if n != m.name)
        if trust_typed and m.typed:
            verdicts.append(Verdict(m.name, others, exhausted=False))
            continue
        bs = analyze(compile_program(slice_for_module(p, m.name)).root, budget)
        if bs.exhausted:
            verdicts.append(Verdict(m.name, frozenset(), exhausted=True))
        else:
            blamed_toward = {l.holder for l in bs.labels if l.blamed == m.name}
            verdicts.append(Verdict(m.name, others - blamed_toward, exhausted=False))
    return verdicts


def _final_contract(c: Contract, pos: str, neg: str, proven: set[tuple[str, str]]) -> Contract:
    while True:
        before = c
        if (pos, neg) in proven:
            c = copt(c, Polarity.POS)
        if (neg, pos) in proven:
            c = copt(c, Polarity.NEG)
        if c == before:
            return c


def optimize_program(p: Program, trust_typed: bool = True,
                     budget: int = DEFAULT_BUDGET,
                     verdicts: "list[Verdict] | None" = None,
                     ) -> tuple[CompiledProgram, OptimizationReport]:
    """Analyze every module, then strip the contract obligations of every
    proven-safe ordered pair from the compiled program.  The pair rewrites
    are folded in module order and repeated to a fixpoint: weakening one
    side can make the other side's arrow collapse entirely."""
    compiled = compile_program(p)
    if verdicts is None:
        verdicts = compute_verdicts(p, trust_typed=trust_typed, budget=budget)

    order = {name: i for i, name in enumerate(p.names())}
    pairs = sorted(
        ((v.module, other) for v in verdicts for other in v.safe_against),
        key=lambda xy: (order[xy[0]], xy[1]),
    )

    root = compiled.root
    while True:
        out = root
        for x, x2 in pairs:
            out = opt(out, x, x2)
        if out == root:
            break
        root = out
    root = normalize(root)

    proven = set(pairs)
    dispositions = []
    for b in compiled.boundary_index:
        after = _final_contract(b.contract, b.pos, b.neg, proven)
        if after == ANY_C:
            kind = "removed"
        elif after == b.contract:
            kind = "kept"
        else:
            kind = "weakened"
        dispositions.append(Disposition(b.pos, b.neg, b.contract, after, kind))

    report = OptimizationReport(
        monitors_before=len(compiled.boundary_index),
        monitors_after=sum(1 for d in dispositions if d.kind != "removed"),
        dispositions=dispositions,
        verdicts=verdicts,
    )
    return CompiledProgram(root, scan_boundaries(root)), report
