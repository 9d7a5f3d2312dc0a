from conftest import ID_BOUNDARY, parse_ok
from gtlc import frontend
from gtlc.frontend import (
    check_wellformed, name_env, parse_program, ty_env, typecheck_expr,
)
from gtlc.gen import GenConfig, gen_program
from gtlc.syntax import Module, Opaque, Require, TArrow, T_INT, format_program

ARROW_II = TArrow(T_INT, T_INT)


def test_parse_id_boundary_shape():
    p = parse_ok(ID_BOUNDARY)
    assert p.names() == ["t1", "u1", "u2", "main"]
    t1, u1, u2, main = p.modules
    assert t1.ty == ARROW_II and not u1.typed and not u2.typed and not main.typed
    assert [r.target for r in u1.requires] == ["t1"]
    assert [r.target for r in u2.requires] == ["t1"]
    assert [r.target for r in main.requires] == ["u2"]


def test_parse_smallest_program():
    p, diags = parse_program("(module main 5)")
    assert not diags and len(p.modules) == 1
    assert p.modules[0].body.value == 5
    assert not check_wellformed(p)


def test_parse_unbalanced_paren():
    p, diags = parse_program("(module main (5")
    assert p is None
    assert any(d.kind == "parse" for d in diags)


def test_parse_diagnostic_spans_lie_in_text():
    text = "(module main (5"
    _, diags = parse_program(text)
    for d in diags:
        assert 0 <= d.span[0] <= d.span[1] <= len(text)


def test_comments():
    p, diags = parse_program("; only a comment before\n(module main 5)")
    assert not diags and p is not None


def test_core_forms_rejected_in_source():
    p, diags = parse_program("(module main (let [x 1] x))")
    assert p is None and any(d.kind == "parse" for d in diags)


def test_ty_env_plain_typed_target():
    t1 = Module("t1", ARROW_II, [], Opaque())
    env, diags = ty_env([Require("t1")], [t1])
    assert env == [("t1", ARROW_II)] and not diags


def test_ty_env_empty():
    assert ty_env([], []) == ([], [])


def test_ty_env_annotated_untyped_target():
    u9 = Module("u9", None, [], Opaque())
    env, diags = ty_env([Require("u9", ann=T_INT)], [u9])
    assert env == [("u9", T_INT)] and not diags


def test_ty_env_kind_mismatches():
    t1 = Module("t1", ARROW_II, [], Opaque())
    u1 = Module("u1", None, [], Opaque())
    _, diags = ty_env([Require("u1")], [t1, u1])
    assert any(d.kind == "require-kind-mismatch" for d in diags)
    _, diags = ty_env([Require("t1", ann=T_INT)], [t1, u1])
    assert any(d.kind == "require-kind-mismatch" for d in diags)


def test_name_env():
    t1 = Module("t1", ARROW_II, [], Opaque())
    env, diags = name_env([Require("t1")], [t1])
    assert env == ["t1"] and not diags
    assert name_env([], []) == ([], [])
    _, diags = name_env([Require("ghost")], [t1])
    assert any(d.kind == "unbound" for d in diags)


def test_typecheck_unannotated_lambda_rejected():
    ty, diags = typecheck_expr([], frontend.parse_expr("(λ (x) x)"))
    assert ty is None and diags


def test_typecheck_annotated_identity():
    p, _ = parse_program("(module t (-> Int Int) (λ (x : Int) x))")
    ty, diags = typecheck_expr([], p.modules[0].body)
    assert ty == ARROW_II and not diags


def test_typecheck_application_of_import():
    p, _ = parse_program("(module t Int (t1 5))")
    body = p.modules[0].body
    ty, diags = typecheck_expr([("t1", ARROW_II)], body)
    assert ty == T_INT and not diags


def test_typecheck_bad_if_test():
    p, _ = parse_program("(module t Int (if 1 2 3))")
    ty, diags = typecheck_expr([], p.modules[0].body)
    assert ty is None and any(d.kind == "type-error" for d in diags)


def test_typecheck_opaque_takes_expected_type():
    ty, diags = typecheck_expr([], Opaque(), expected=ARROW_II)
    assert ty == ARROW_II and not diags


def test_wellformed_id_boundary():
    assert not check_wellformed(parse_ok(ID_BOUNDARY))


def test_wellformed_forward_require():
    p, _ = parse_program("(module u1 (require t1) (t1 5))\n"
                         "(module t1 (-> Int Int) (λ (x : Int) x))\n"
                         "(module main 5)")
    diags = check_wellformed(p)
    assert any(d.kind == "unbound" for d in diags)


def test_wellformed_annotation_mismatch():
    p, _ = parse_program("(module t Bool 5)\n(module main 5)")
    diags = check_wellformed(p)
    assert any(d.kind == "type-error" for d in diags)


def test_wellformed_main_missing():
    p, _ = parse_program("(module t Bool #t)")
    assert any(d.kind == "main-missing" for d in check_wellformed(p))
    p2, diags2 = parse_program("")
    assert p2 is not None and not diags2
    assert any(d.kind == "main-missing" for d in check_wellformed(p2))


def test_wellformed_typed_main_rejected():
    p, _ = parse_program("(module main Int 5)")
    assert any(d.kind == "type-error" for d in check_wellformed(p))


def test_wellformed_duplicate_modules():
    p, _ = parse_program("(module a 1)\n(module a 2)\n(module main 5)")
    assert any(d.kind == "duplicate-module" for d in check_wellformed(p))


def test_wellformed_require_typed_in_untyped_module():
    _, diags = parse_program("(module a 1)\n"
                             "(module main (require/typed a Int) 5)")
    assert any(d.kind == "require-kind-mismatch" for d in diags)


def test_untyped_body_may_shadow_required_name():
    p, _ = parse_program("(module a 1)\n"
                         "(module main (require a) ((λ (a) a) 2))")
    assert not check_wellformed(p)


def test_roundtrip_on_generated_programs():
    for seed in range(150):
        p = gen_program(GenConfig(seed=seed))
        text = format_program(p)
        again, diags = parse_program(text)
        assert not diags and again == p, f"seed {seed}"


def test_generated_programs_are_wellformed():
    for seed in range(150):
        p = gen_program(GenConfig(seed=seed))
        assert not check_wellformed(p), f"seed {seed}"


def test_prefix_monotonicity():
    # Every prefix of a well-formed program is well-formed, once prefixes
    # are excused from needing a main module.
    from gtlc.syntax import Program
    for seed in range(60):
        p = gen_program(GenConfig(seed=seed))
        assert not check_wellformed(p)
        for k in range(len(p.modules)):
            diags = check_wellformed(Program(p.modules[:k]))
            assert all(d.kind == "main-missing" for d in diags), (seed, k)
