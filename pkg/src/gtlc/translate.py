"""Compilation of module programs into the contract core.

Each module becomes one `let` binding, nested in program order, with the
variable `main` as the innermost body.  Within a module's right-hand side,
every import that crosses a typed/untyped boundary introduces an inner
`let` that rebinds the imported name to a monitored version; imports on the
same side of the boundary introduce no binding at all.  The module that
defines a monitored value is the positive party of its contract and the
importing module is the negative party.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    ArrowC, App, Blame, BoolLit, BOOL_C, Contract, Expr, If, IntLit, INT_C,
    Lam, Let, Mon, Module, Opaque, Prim, Program, TArrow, TBool, TInt, Ty,
    Var,
)

# A path is a tuple of field names leading from the root to a node.
Path = tuple[str, ...]


@dataclass
class Boundary:
    pos: str
    neg: str
    contract: Contract
    path: Path


@dataclass
class CompiledProgram:
    root: Expr
    boundary_index: list[Boundary]


def compile_type(t: Ty) -> Contract:
    """Types map to contracts structurally; the trivial contract never
    appears in the image."""
    match t:
        case TInt():
            return INT_C
        case TBool():
            return BOOL_C
        case TArrow(dom, cod):
            return ArrowC(compile_type(dom), compile_type(cod))
    raise TypeError(f"not a type: {t!r}")


def erase(e: Expr, scope: "frozenset[str] | None" = None) -> Expr:
    """Strip lambda annotations; opaque terms map to themselves.  When
    `scope` is given, each opaque hole records the names a concrete
    instantiation of it may reference (scope plus enclosing binders), which
    the analyzer uses to bound what unknown code can reach."""
    match e:
        case Lam(param, _, body):
            inner = None if scope is None else scope | {param}
            return Lam(param, None, erase(body, inner))
        case App(fn, arg):
            return App(erase(fn, scope), erase(arg, scope))
        case If(test, then, orelse):
            return If(erase(test, scope), erase(then, scope), erase(orelse, scope))
        case Let(name, rhs, body):
            inner = None if scope is None else scope | {name}
            return Let(name, erase(rhs, scope), erase(body, inner))
        case Mon(pos, neg, contract, body):
            return Mon(pos, neg, contract, erase(body, scope))
        case Opaque():
            return Opaque(allowed=scope)
        case Var(_) | IntLit(_) | BoolLit(_) | Prim(_) | Blame(_):
            return e
    raise TypeError(f"not an expression: {e!r}")


def _module_rhs(m: Module, prior: list[Module]) -> Expr:
    """The right-hand side for module `m`: its erased body wrapped in one
    inner let per monitored require, in require order (first require
    outermost)."""
    rhs = erase(m.body, frozenset(r.target for r in m.requires))
    by_name = {p.name: p for p in prior}
    for r in reversed(m.requires):
        target = by_name.get(r.target)
        if target is None:
            raise ValueError(f"require of unknown module {r.target!r}")
        if m.typed:
            monitored = r.ann is not None  # annotated import of an untyped module
            contract = compile_type(r.ann) if monitored else None
        else:
            monitored = target.typed  # plain import of a typed module
            contract = compile_type(target.ty) if monitored else None
        if monitored:
            rhs = Let(r.target,
                      Mon(r.target, m.name, contract, Var(r.target)),
                      rhs)
    return rhs


def compile_program(p: Program) -> CompiledProgram:
    """Compile a well-formed program.  Evaluation order of module right-hand
    sides is program order, forced by the let nesting."""
    root: Expr = Var("main")
    for i in range(len(p.modules) - 1, -1, -1):
        m = p.modules[i]
        root = Let(m.name, _module_rhs(m, p.modules[:i]), root)
    return CompiledProgram(root, scan_boundaries(root))


def scan_boundaries(root: Expr) -> list[Boundary]:
    """Every monitor in a compiled program marks a require boundary; list
    them in evaluation order with their paths."""
    found: list[Boundary] = []

    def walk(e: Expr, path: Path) -> None:
        match e:
            case Mon(pos, neg, contract, body):
                found.append(Boundary(pos, neg, contract, path))
                walk(body, path + ("body",))
            case App(fn, arg):
                walk(fn, path + ("fn",))
                walk(arg, path + ("arg",))
            case If(test, then, orelse):
                walk(test, path + ("test",))
                walk(then, path + ("then",))
                walk(orelse, path + ("orelse",))
            case Lam(_, _, body):
                walk(body, path + ("body",))
            case Let(_, rhs, body):
                walk(rhs, path + ("rhs",))
                walk(body, path + ("body",))
            case _:
                pass

    walk(root, ())
    return found


def expr_at(root: Expr, path: Path) -> Expr:
    node = root
    for step in path:
        node = getattr(node, step)
    return node
