"""Seeded random generation of well-formed programs.

Programs are built module by module: each module gets a nominal type, a
random subset of earlier modules as imports, and a body generated
type-directed at its nominal type.  Typed modules follow their nominal
type exactly, so generated programs always pass the well-formedness check.
Untyped bodies are generated against the generator's private beliefs about
nominal types and then perturbed: with configurable probability a call
across a boundary receives a wrong-typed argument, an annotated import
claims a wrong type for its untyped target, or a first-order value is
applied.  This keeps both blame-free and blaming runs common, which the
differential and soundness suites both need.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .syntax import (
    App, BoolLit, Expr, If, IntLit, Lam, Module, Prim, Program, Require,
    TArrow, TBool, TInt, Ty, T_BOOL, T_INT, Var,
)


@dataclass
class GenConfig:
    seed: int
    max_modules: int = 5        # counting main
    expr_size: int = 8
    typed_fraction: float = 0.5
    boundary_density: float = 0.7
    violation_rate: float = 0.35
    stuck_rate: float = 0.03


def gen_program(cfg: GenConfig) -> Program:
    """Deterministic in the seed; always well-formed."""
    rng = random.Random(cfg.seed)
    n_lib = rng.randint(0, max(0, cfg.max_modules - 1))
    modules: list[Module] = []
    nominal: dict[str, Ty] = {}

    for i in range(n_lib):
        name = f"m{i}"
        typed = rng.random() < cfg.typed_fraction
        ty = _gen_type(rng, depth=2)
        requires, env = _gen_requires(rng, cfg, modules, nominal, typed)
        if typed:
            body = _gen_term(rng, env, ty, cfg.expr_size, typed=True, cfg=cfg)
            modules.append(Module(name, ty, requires, body))
        else:
            body = _gen_term(rng, env, ty, cfg.expr_size, typed=False, cfg=cfg)
            modules.append(Module(name, None, requires, body))
        nominal[name] = ty

    main_ty = _gen_type(rng, depth=1) if rng.random() < 0.2 else \
        (T_INT if rng.random() < 0.5 else T_BOOL)
    requires, env = _gen_requires(rng, cfg, modules, nominal, typed=False)
    body = _gen_term(rng, env, main_ty, cfg.expr_size, typed=False, cfg=cfg)
    modules.append(Module("main", None, requires, body))
    return Program(modules)


def _gen_type(rng: random.Random, depth: int) -> Ty:
    if depth > 0 and rng.random() < 0.35:
        return TArrow(_gen_type(rng, depth - 1), _gen_type(rng, depth - 1))
    return T_INT if rng.random() < 0.6 else T_BOOL


def _mutate_type(rng: random.Random, t: Ty) -> Ty:
    """A type deliberately different from `t`."""
    if isinstance(t, TInt):
        return T_BOOL if rng.random() < 0.7 else TArrow(T_INT, T_INT)
    if isinstance(t, TBool):
        return T_INT if rng.random() < 0.7 else TArrow(T_BOOL, T_BOOL)
    if rng.random() < 0.5:
        return T_INT
    return TArrow(_mutate_type(rng, t.dom) if rng.random() < 0.5 else t.dom, t.cod)


def _gen_requires(rng, cfg, prior: list[Module], nominal: dict[str, Ty],
                  typed: bool) -> tuple[list[Require], list[tuple[str, Ty]]]:
    """Pick imports and the types the new module believes them to have."""
    requires: list[Require] = []
    env: list[tuple[str, Ty]] = []
    for m in prior:
        if rng.random() >= cfg.boundary_density:
            continue
        if typed:
            if m.typed:
                requires.append(Require(m.name))
                env.append((m.name, m.ty))
            else:
                ann = nominal[m.name]
                if rng.random() < cfg.violation_rate:
                    ann = _mutate_type(rng, ann)
                requires.append(Require(m.name, ann=ann))
                env.append((m.name, ann))
        else:
            requires.append(Require(m.name))
            env.append((m.name, m.ty if m.typed else nominal[m.name]))
    return requires, env


def _vars_of(env: list[tuple[str, Ty]], ty: Ty) -> list[str]:
    return [n for n, t in env if t == ty]


def _fns_into(env: list[tuple[str, Ty]], cod: Ty) -> list[tuple[str, TArrow]]:
    return [(n, t) for n, t in env if isinstance(t, TArrow) and t.cod == cod]


def _gen_term(rng, env, ty: Ty, size: int, typed: bool, cfg: GenConfig) -> Expr:
    if size <= 1:
        return _gen_leaf(rng, env, ty, typed)

    roll = rng.random()
    # Apply something from scope that lands on the target type.
    fns = _fns_into(env, ty)
    if fns and roll < 0.45:
        name, ft = rng.choice(fns)
        wrong = not typed and rng.random() < cfg.violation_rate
        arg_ty = _mutate_type(rng, ft.dom) if wrong else ft.dom
        return App(Var(name), _gen_term(rng, env, arg_ty, size - 2, typed, cfg))
    if roll < 0.55 and isinstance(ty, TArrow):
        param = f"x{len(env)}"
        inner = env + [(param, ty.dom)]
        return Lam(param, ty.dom if typed else None,
                   _gen_term(rng, inner, ty.cod, size - 1, typed, cfg))
    if roll < 0.70:
        half = max(1, (size - 1) // 3)
        return If(_gen_term(rng, env, T_BOOL, half, typed, cfg),
                  _gen_term(rng, env, ty, half, typed, cfg),
                  _gen_term(rng, env, ty, half, typed, cfg))
    if roll < 0.80 and ty == T_BOOL:
        op = "int?" if rng.random() < 0.5 else "bool?"
        scrut_ty = rng.choice([T_INT, T_BOOL] + [t for _, t in env])
        return App(Prim(op), _gen_term(rng, env, scrut_ty, size - 2, typed, cfg))
    if roll < 0.86:
        # Immediate application of a local function.
        dom = _gen_type(rng, 1)
        param = f"x{len(env)}"
        inner = env + [(param, dom)]
        fn = Lam(param, dom if typed else None,
                 _gen_term(rng, inner, ty, (size - 1) // 2, typed, cfg))
        return App(fn, _gen_term(rng, env, dom, (size - 1) // 2, typed, cfg))
    if not typed and rng.random() < cfg.stuck_rate:
        first_order = [n for n, t in env if not isinstance(t, TArrow)]
        if first_order:
            return App(Var(rng.choice(first_order)),
                       _gen_leaf(rng, env, T_INT, typed))
    return _gen_leaf(rng, env, ty, typed)


def _gen_leaf(rng, env, ty: Ty, typed: bool) -> Expr:
    candidates = _vars_of(env, ty)
    if candidates and rng.random() < 0.5:
        return Var(rng.choice(candidates))
    match ty:
        case TInt():
            return IntLit(rng.randint(-3, 9))
        case TBool():
            return BoolLit(rng.random() < 0.5)
        case TArrow(dom, cod):
            param = f"x{len(env)}"
            inner = env + [(param, dom)]
            body = _gen_leaf(rng, inner, cod, typed)
            return Lam(param, dom if typed else None, body)
    raise TypeError(f"not a type: {ty!r}")
