"""Sound symbolic execution of the contract core with opaque terms.

The analyzer over-approximates every concrete instantiation of the opaque
parts of a program and reports the set of blame labels that some
instantiation could reach.  Finiteness comes from a monovariant abstract
machine: value and continuation addresses are keyed by syntactic position,
store entries are joined as sets, and exploration is a worklist fixpoint
with dependency-driven re-stepping.  The model language has no arithmetic,
so the abstract value universe for a fixed program is finite and the
fixpoint always terminates; a state cap is still enforced and reported via
`exhausted` so callers can fail safe.

Unknown code is explored through an escape pool: evaluating an opaque term
dumps every value in scope into the pool, and every function-like value
that ever enters the pool is applied to a fresh opaque argument, with the
result escaping back into the pool.  A fresh opaque branches both ways on
every contract check, so each monitor reachable by unknown code gets all
of its failure branches exercised under the parties recorded on the
monitor itself.  Errors internal to unknown code (stuck applications, a
non-boolean `if` test) have no blame label and simply prune the path.

Opaque values carry type-tag refinements so a value that passed `int?`
cannot fail it later on the same path; branches of an `(if (int? x) ...)`
test rebind `x` to a refined address, and monitor checks thread the
refined value through.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Optional, Union

from .syntax import (
    AnyC, ArrowC, App, Blame, BlameLabel, BoolC, BoolLit, Expr, If, IntC,
    IntLit, Lam, Let, Mon, Opaque, Prim, Var,
)

DEFAULT_BUDGET = 1_000_000

# Widen exact integers at an address once this many distinct constants pile up.
_CONST_WIDTH = 8

_TAGS = ("int", "bool", "fn")


# ---------------------------------------------------------------------------
# Abstract values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AInt:
    """Some integer."""


@dataclass(frozen=True)
class AConst:
    n: int


@dataclass(frozen=True)
class ABool:
    known: Optional[bool]


@dataclass(frozen=True)
class AClos:
    lam: int          # label of the lambda; doubles as the parameter's address key
    param: str
    body: int
    env: tuple        # ((name, addr), ...) sorted


@dataclass(frozen=True)
class APrim:
    op: str


@dataclass(frozen=True)
class AOpq:
    site: object
    refs: frozenset = frozenset()


@dataclass(frozen=True)
class AGuard:
    contract: ArrowC
    inner: tuple      # store address of the wrapped function
    pos: str
    neg: str
    site: object      # anchors the addresses of values wrapped here


AbsVal = Union[AInt, AConst, ABool, AClos, APrim, AOpq, AGuard]


@dataclass(frozen=True)
class BlameSet:
    labels: frozenset[BlameLabel]
    exhausted: bool

    def as_json(self) -> dict:
        return {
            "labels": [{"blamed": l.blamed, "holder": l.holder}
                       for l in sorted(self.labels)],
            "exhausted": self.exhausted,
        }


def function_like(v: AbsVal) -> bool:
    if isinstance(v, (AClos, APrim, AGuard)):
        return True
    return isinstance(v, AOpq) and "!fn" not in v.refs


def refine(o: AOpq, kind: str, outcome: bool) -> Optional[AOpq]:
    """Record the outcome of a type-tag test on an opaque value, or report
    the path contradictory (None).  The base tags are mutually disjoint."""
    refs = o.refs
    if outcome:
        if f"!{kind}" in refs:
            return None
        if any(other in refs for other in _TAGS if other != kind):
            return None
        return AOpq(o.site, refs | {kind})
    if kind in refs:
        return None
    return AOpq(o.site, refs | {f"!{kind}"})


def _refine_value(v: AbsVal, kind: str, outcome: bool) -> Optional[AbsVal]:
    """The portion of `v` consistent with a test outcome, or None."""
    if isinstance(v, AOpq):
        return refine(v, kind, outcome)
    if kind == "int":
        holds = isinstance(v, (AInt, AConst))
    elif kind == "bool":
        holds = isinstance(v, ABool)
    else:
        holds = isinstance(v, (AClos, APrim, AGuard))
    return v if holds == outcome else None


# ---------------------------------------------------------------------------
# Node indexing
# ---------------------------------------------------------------------------

class _Index:
    def __init__(self, root: Expr):
        self.nodes: list[Expr] = []
        self.of: dict[int, int] = {}
        self.free: list[frozenset[str]] = []
        self._walk(root)

    def _walk(self, e: Expr) -> int:
        lbl = len(self.nodes)
        self.nodes.append(e)
        self.free.append(frozenset())
        self.of[id(e)] = lbl
        for child in _children(e):
            self._walk(child)
        self.free[lbl] = _free(e, self)
        return lbl


def _children(e: Expr) -> tuple:
    match e:
        case App(fn, arg):
            return (fn, arg)
        case If(t, a, b):
            return (t, a, b)
        case Lam(_, _, body):
            return (body,)
        case Let(_, rhs, body):
            return (rhs, body)
        case Mon(_, _, _, body):
            return (body,)
        case _:
            return ()


def _free(e: Expr, ix: "_Index") -> frozenset[str]:
    match e:
        case Var(name):
            return frozenset((name,))
        case App(fn, arg):
            return ix.free[ix.of[id(fn)]] | ix.free[ix.of[id(arg)]]
        case If(t, a, b):
            return ix.free[ix.of[id(t)]] | ix.free[ix.of[id(a)]] | ix.free[ix.of[id(b)]]
        case Lam(param, _, body):
            return ix.free[ix.of[id(body)]] - {param}
        case Let(name, rhs, body):
            return ix.free[ix.of[id(rhs)]] | (ix.free[ix.of[id(body)]] - {name})
        case Mon(_, _, _, body):
            return ix.free[ix.of[id(body)]]
        case _:
            return frozenset()


# ---------------------------------------------------------------------------
# The machine
# ---------------------------------------------------------------------------

_POOL = ("pool",)
_K_HALT = ("halt",)
_K_HAVOC = ("havoc",)
_HAVOC_ARG_SITE = ("havoc-arg",)
_HAVOC_APP = ("havoc-app",)


class _Machine:
    def __init__(self, root: Expr, budget: int):
        self.ix = _Index(root)
        self.budget = budget
        self.store: dict = defaultdict(set)
        self.kstore: dict = defaultdict(set)
        self.vdeps: dict = defaultdict(set)
        self.kdeps: dict = defaultdict(set)
        self.redges: dict = defaultdict(list)  # addr -> [(dst, kind, outcome)]
        self.found: set[BlameLabel] = set()
        self.seen: set = set()
        self.pending: set = set()
        self.work: deque = deque()
        self.exhausted = False

    # -- scheduling ---------------------------------------------------------

    def schedule(self, st) -> None:
        """Enqueue a state the first time it is discovered.  Seen states are
        only ever re-run through `reschedule`, when something they read grew."""
        if self.exhausted or st in self.seen:
            return
        if len(self.seen) >= self.budget:
            self.exhausted = True
            return
        self.seen.add(st)
        self.pending.add(st)
        self.work.append(st)

    def reschedule(self, st) -> None:
        if self.exhausted or st in self.pending:
            return
        self.pending.add(st)
        self.work.append(st)

    def store_join(self, addr, vals) -> None:
        cur = self.store[addr]
        new = set(vals) - cur
        if not new:
            return
        consts = sum(1 for v in cur if isinstance(v, AConst))
        if consts >= _CONST_WIDTH:
            widened = {v for v in new if not isinstance(v, AConst)}
            if any(isinstance(v, AConst) for v in new):
                widened.add(AInt())
            new = widened - cur
            if not new:
                return
        cur |= new
        for dst, kind, outcome in self.redges[addr]:
            refined = {_refine_value(v, kind, outcome) for v in new}
            refined.discard(None)
            if refined:
                self.store_join(dst, refined)
        for st in list(self.vdeps[addr]):
            self.reschedule(st)
        if addr == _POOL:
            for v in new:
                self.schedule(("hv", v))

    def kstore_join(self, kaddr, frames) -> None:
        cur = self.kstore[kaddr]
        new = set(frames) - cur
        if not new:
            return
        cur |= new
        for st in list(self.kdeps[kaddr]):
            self.reschedule(st)

    def ensure_redge(self, src, dst, kind, outcome) -> None:
        edge = (dst, kind, outcome)
        if edge in self.redges[src]:
            return
        self.redges[src].append(edge)
        refined = {_refine_value(v, kind, outcome) for v in self.store[src]}
        refined.discard(None)
        if refined:
            self.store_join(dst, refined)

    # -- driver ---------------------------------------------------------------

    def run(self) -> BlameSet:
        self.kstore[_K_HALT].add(("halt",))
        self.kstore[_K_HAVOC].add(("havocret",))
        self.schedule(("ev", 0, (), _K_HALT))
        while self.work and not self.exhausted:
            st = self.work.popleft()
            self.pending.discard(st)
            self.step(st)
        return BlameSet(frozenset(self.found), self.exhausted)

    # -- transitions ----------------------------------------------------------

    def step(self, st) -> None:
        tag = st[0]
        if tag == "ev":
            self.step_eval(st)
        elif tag == "va":
            self.step_value(st)
        else:  # "hv"
            self.havoc(st, st[1])

    def havoc(self, st, v) -> None:
        """Exercise a value that escaped to unknown code: apply it to a
        fresh opaque argument, with the result escaping in turn (via the
        havoc continuation), so every monitor wrapped around it is driven
        through all of its branches.  First-order values have no
        application successor."""
        if function_like(v):
            self.apply_abs(st, v, AOpq(_HAVOC_ARG_SITE), _HAVOC_APP, _K_HAVOC)

    def step_eval(self, st) -> None:
        _, lbl, env, kaddr = st
        node = self.ix.nodes[lbl]
        t = type(node)
        if t is Var:
            addr = _env_get(env, node.name)
            if addr is None:
                return  # open term: prune
            self.vdeps[addr].add(st)
            for v in list(self.store[addr]):
                self.schedule(("va", v, kaddr))
        elif t is IntLit:
            self.schedule(("va", AConst(node.value), kaddr))
        elif t is BoolLit:
            self.schedule(("va", ABool(node.value), kaddr))
        elif t is Prim:
            self.schedule(("va", APrim(node.op), kaddr))
        elif t is Lam:
            body_lbl = self.ix.of[id(node.body)]
            keep = self.ix.free[lbl]
            cenv = tuple((n, a) for n, a in env if n in keep)
            self.schedule(("va", AClos(lbl, node.param, body_lbl, cenv), kaddr))
        elif t is Opaque:
            allowed = node.allowed
            for name, addr in env:
                if allowed is not None and name not in allowed:
                    continue
                self.vdeps[addr].add(st)
                self.pool_join(self.store[addr])
            self.schedule(("va", AOpq(lbl), kaddr))
        elif t is App:
            fn_lbl = self.ix.of[id(node.fn)]
            arg_lbl = self.ix.of[id(node.arg)]
            knew = ("k", fn_lbl)
            self.kstore_join(knew, {("arg", arg_lbl, env, lbl, kaddr)})
            self.schedule(("ev", fn_lbl, env, knew))
        elif t is Let:
            rhs_lbl = self.ix.of[id(node.rhs)]
            body_lbl = self.ix.of[id(node.body)]
            knew = ("k", rhs_lbl)
            self.kstore_join(knew, {("let", node.name, lbl, body_lbl, env, kaddr)})
            self.schedule(("ev", rhs_lbl, env, knew))
        elif t is If:
            test_lbl = self.ix.of[id(node.test)]
            then_lbl = self.ix.of[id(node.then)]
            else_lbl = self.ix.of[id(node.orelse)]
            knew = ("k", test_lbl)
            info = _refinable_test(node)
            self.kstore_join(knew, {("if", lbl, then_lbl, else_lbl, env, info, kaddr)})
            self.schedule(("ev", test_lbl, env, knew))
        elif t is Mon:
            body_lbl = self.ix.of[id(node.body)]
            knew = ("k", body_lbl)
            self.kstore_join(knew, {("mon", node.contract, node.pos, node.neg, lbl, kaddr)})
            self.schedule(("ev", body_lbl, env, knew))
        elif t is Blame:
            self.found.add(node.label)

    def step_value(self, st) -> None:
        _, v, kaddr = st
        self.kdeps[kaddr].add(st)
        for frame in list(self.kstore[kaddr]):
            self.frame(st, frame, v)

    def frame(self, st, frame, v) -> None:
        tag = frame[0]
        if tag == "arg":
            _, arg_lbl, env, app_lbl, nxt = frame
            knew = ("k", arg_lbl)
            self.kstore_join(knew, {("call", v, app_lbl, nxt)})
            self.schedule(("ev", arg_lbl, env, knew))
        elif tag == "call":
            _, fv, app_lbl, nxt = frame
            self.apply_abs(st, fv, v, app_lbl, nxt)
        elif tag == "calladdr":
            _, addr, app_lbl, nxt = frame
            self.vdeps[addr].add(st)
            for fv in list(self.store[addr]):
                self.apply_abs(st, fv, v, app_lbl, nxt)
        elif tag == "let":
            _, name, binder_lbl, body_lbl, env, nxt = frame
            addr = ("v", binder_lbl)
            self.store_join(addr, {v})
            self.schedule(("ev", body_lbl, _env_set(env, name, addr), nxt))
        elif tag == "if":
            _, if_lbl, then_lbl, else_lbl, env, info, nxt = frame
            if isinstance(v, ABool):
                branches = [True, False] if v.known is None else [v.known]
            elif isinstance(v, AOpq):
                branches = [True, False] if refine(v, "bool", True) else []
            else:
                branches = []  # non-boolean test: stuck, prune
            for taken in branches:
                env2 = env
                if info is not None:
                    name, kind = info
                    src = _env_get(env, name)
                    if src is not None:
                        dst = ("rif", if_lbl, taken, name)
                        self.ensure_redge(src, dst, kind, taken)
                        env2 = _env_set(env, name, dst)
                self.schedule(("ev", then_lbl if taken else else_lbl, env2, nxt))
        elif tag == "mon":
            _, contract, pos, neg, site, nxt = frame
            self.mon_check(contract, pos, neg, site, nxt, v)
        elif tag == "havocret":
            self.pool_join({v})
        # "halt": program value, nothing to do

    def apply_abs(self, st, fv, argv, app_lbl, nxt) -> None:
        t = type(fv)
        if t is AClos:
            addr = ("v", fv.lam)
            self.store_join(addr, {argv})
            self.schedule(("ev", fv.body, _env_set(fv.env, fv.param, addr), nxt))
        elif t is APrim:
            kind = "int" if fv.op == "int?" else "bool"
            if _refine_value(argv, kind, True) is not None:
                self.schedule(("va", ABool(True), nxt))
            if _refine_value(argv, kind, False) is not None:
                self.schedule(("va", ABool(False), nxt))
        elif t is AGuard:
            c = fv.contract
            site = fv.site
            kr = ("kr", site)
            kc = ("kc", site)
            kd = ("kd", site)
            self.kstore_join(kr, {("mon", c.cod, fv.pos, fv.neg, ("r", site), nxt)})
            self.kstore_join(kc, {("calladdr", fv.inner, app_lbl, kr)})
            self.kstore_join(kd, {("mon", c.dom, fv.neg, fv.pos, ("d", site), kc)})
            self.schedule(("va", argv, kd))
        elif t is AOpq:
            if refine(fv, "fn", True) is not None:
                self.pool_join({argv})
                self.schedule(("va", AOpq(("app", app_lbl)), nxt))
        # first-order values in operator position: stuck, prune

    def mon_check(self, contract, pos, neg, site, nxt, v) -> None:
        t = type(contract)
        if t is IntC or t is BoolC:
            kind = "int" if t is IntC else "bool"
            passed = _refine_value(v, kind, True)
            if passed is not None:
                self.schedule(("va", passed, nxt))
            if _refine_value(v, kind, False) is not None:
                self.found.add(BlameLabel(pos, neg))
        elif t is AnyC:
            self.schedule(("va", v, nxt))
        else:  # ArrowC
            as_fn = _refine_value(v, "fn", True)
            if as_fn is not None:
                inner = ("m", site)
                self.store_join(inner, {as_fn})
                self.schedule(("va", AGuard(contract, inner, pos, neg, site), nxt))
            if _refine_value(v, "fn", False) is not None:
                self.found.add(BlameLabel(pos, neg))

    def pool_join(self, vals) -> None:
        self.store_join(_POOL, set(vals))


def _env_get(env: tuple, name: str):
    for n, a in env:
        if n == name:
            return a
    return None


def _env_set(env: tuple, name: str, addr) -> tuple:
    items = [(n, a) for n, a in env if n != name]
    items.append((name, addr))
    items.sort()
    return tuple(items)


def _refinable_test(node: If):
    """(name, kind) when the test is a predicate applied to a variable, so
    the branches can rebind the variable to a refined address."""
    t = node.test
    if isinstance(t, App) and isinstance(t.fn, Prim) and isinstance(t.arg, Var):
        return (t.arg.name, "int" if t.fn.op == "int?" else "bool")
    return None


def analyze(root: Expr, budget: int = DEFAULT_BUDGET) -> BlameSet:
    """Every blame label reachable by some concrete instantiation of the
    opaque parts of `root`.  When the state cap is hit, `exhausted` is set
    and callers must treat the label set as if it held every label."""
    return _Machine(root, budget).run()


def reachable_states(root: Expr, budget: int = DEFAULT_BUDGET) -> int:
    """Size of the explored abstract state space (for termination checks)."""
    m = _Machine(root, budget)
    m.run()
    return len(m.seen)
