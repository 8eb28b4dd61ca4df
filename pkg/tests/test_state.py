"""Value, expression, and substitution semantics."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdes.state import (
    BinOp,
    BoolType,
    Head,
    IfE,
    IntType,
    Len,
    Lit,
    Not,
    SeqType,
    SymbolTable,
    Tail,
    Var,
    apply_subst,
    apply_to_valuation,
    assignment_subst,
    compose_subst,
    cond_implies,
    cond_is_false,
    cond_is_true,
    eval_expr,
    exprs_equiv,
    fold,
    pp_expr,
    subst_of,
    valuation_of,
)

SYMTAB = SymbolTable(
    {"bf": SeqType(IntType(0, 1), 2), "v": IntType(0, 1)},
    {"inp": IntType(0, 1), "out": IntType(0, 1)},
)


def val(**kw):
    base = {"bf": (), "v": 0}
    base.update(kw)
    return valuation_of(base)


def test_eval_head_of_literal():
    assert eval_expr(Head(Lit((1, 0))), val()) == 1


def test_eval_totalisation_defaults():
    assert eval_expr(Tail(Lit(())), val()) == ()
    assert eval_expr(Head(Lit(())), val()) == 0


def test_eval_concat_with_state():
    e = BinOp("++", Var("bf"), BinOp("++", Lit(()), Lit((0,))))
    assert eval_expr(e, val(bf=(1,))) == (1, 0)


def test_eval_prefix_on_sequences():
    assert eval_expr(BinOp("<=", Lit((1,)), Lit((1, 0))), val())
    assert not eval_expr(BinOp("<=", Lit((0,)), Lit((1, 0))), val())


def test_apply_subst_example():
    s = subst_of({"x": Lit(1)})
    assert apply_subst(s, BinOp("+", Var("x"), Lit(2))) == Lit(3)


def test_apply_subst_identity():
    e = BinOp("<", Lit(0), Len(Var("bf")))
    assert apply_subst(subst_of({}), e) == e


def test_compose_subst_folds_constants():
    s = compose_subst(subst_of({"x": Lit(1)}), subst_of({"x": BinOp("+", Var("x"), Lit(2))}))
    assert s == subst_of({"x": Lit(3)})


def test_compose_subst_units():
    s = subst_of({"bf": Tail(Var("bf"))})
    assert compose_subst(s, subst_of({})) == s
    assert compose_subst(subst_of({}), s) == s


def test_compose_subst_pointwise_semantics():
    # oracle: pointwise composition over the whole finite domain; assignment
    # substitutions record their saturation so both routes agree at the
    # carrier boundaries
    s1 = assignment_subst({"bf": BinOp("++", Var("bf"), Lit((0,)))}, SYMTAB)
    s2 = assignment_subst({"bf": Tail(Var("bf"))}, SYMTAB)
    composed = compose_subst(s1, s2)
    for v in SYMTAB.valuations():
        step = apply_to_valuation(s2, apply_to_valuation(s1, v, SYMTAB), SYMTAB)
        assert apply_to_valuation(composed, v, SYMTAB) == step


def test_subst_drops_identity_entries():
    assert subst_of({"x": Var("x")}).is_identity()


def test_valuation_clamps_on_update():
    v = val()
    out = v.set("v", 7, SYMTAB.variables["v"])
    assert out.get("v") == 1
    out = v.set("bf", (1, 0, 1), SYMTAB.variables["bf"])
    assert out.get("bf") == (1, 0)


def test_cond_decisions():
    c = BinOp("<=", Lit(0), Len(Var("bf")))
    assert cond_is_true(c, SYMTAB)
    assert cond_is_false(BinOp("<", Len(Var("bf")), Lit(0)), SYMTAB)
    assert cond_implies(
        BinOp("=", Var("v"), Lit(1)), BinOp("<", Lit(0), Var("v")), SYMTAB
    )


def test_exprs_equiv_semantic():
    a = BinOp("and", BinOp("<", Lit(0), Var("v")), Lit(True))
    b = BinOp("=", Var("v"), Lit(1))
    assert exprs_equiv(a, b, SYMTAB)


# -- randomised properties ---------------------------------------------------

_INT_EXPR = st.deferred(
    lambda: st.one_of(
        st.integers(min_value=-1, max_value=2).map(Lit),
        st.just(Var("v")),
        st.just(Head(Var("bf"))),
        st.just(Len(Var("bf"))),
        st.tuples(_INT_EXPR, _INT_EXPR).map(lambda t: BinOp("+", *t)),
        st.tuples(_INT_EXPR, _INT_EXPR).map(lambda t: BinOp("-", *t)),
    )
)

_SEQ_EXPR = st.deferred(
    lambda: st.one_of(
        st.lists(
            st.integers(min_value=0, max_value=1), max_size=2
        ).map(lambda xs: Lit(tuple(xs))),
        st.just(Var("bf")),
        st.just(Tail(Var("bf"))),
        st.tuples(_SEQ_EXPR, _SEQ_EXPR).map(lambda t: BinOp("++", *t)),
    )
)

_BOOL_EXPR = st.deferred(
    lambda: st.one_of(
        st.booleans().map(Lit),
        st.tuples(_INT_EXPR, _INT_EXPR).map(lambda t: BinOp("<", *t)),
        st.tuples(_SEQ_EXPR, _SEQ_EXPR).map(lambda t: BinOp("<=", *t)),
        st.tuples(_SEQ_EXPR, _SEQ_EXPR).map(lambda t: BinOp("=", *t)),
        _BOOL_EXPR.map(Not),
        st.tuples(_BOOL_EXPR, _BOOL_EXPR).map(lambda t: BinOp("and", *t)),
        st.tuples(_BOOL_EXPR, _BOOL_EXPR, _BOOL_EXPR).map(lambda t: IfE(*t)),
    )
)

_ANY_EXPR = st.one_of(_INT_EXPR, _SEQ_EXPR, _BOOL_EXPR)

_SUBSTS = st.fixed_dictionaries(
    {},
    optional={
        "v": _INT_EXPR,
        "bf": _SEQ_EXPR,
    },
).map(subst_of)


@settings(max_examples=200, deadline=None)
@given(_ANY_EXPR)
def test_fold_preserves_eval(e):
    folded = fold(e)
    for v in SYMTAB.valuations():
        assert eval_expr(folded, v) == eval_expr(e, v)


@settings(max_examples=200, deadline=None)
@given(_SUBSTS, _ANY_EXPR)
def test_subst_then_eval_is_eval_after_update(s, e):
    # clamping applies on both routes: substituted expressions evaluate over
    # the raw state, so compare against unclamped pointwise updates
    out = apply_subst(s, e)
    for v in SYMTAB.valuations():
        updated = valuation_of(
            {n: eval_expr(s.get(n), v) for n, _ in v.items}
        )
        assert eval_expr(out, v) == eval_expr(e, updated)


@settings(max_examples=100, deadline=None)
@given(_SUBSTS, _SUBSTS, _SUBSTS)
def test_compose_subst_associative(s1, s2, s3):
    left = compose_subst(compose_subst(s1, s2), s3)
    right = compose_subst(s1, compose_subst(s2, s3))
    for n in left.domain() | right.domain():
        assert exprs_equiv(left.get(n), right.get(n), SYMTAB)


@settings(max_examples=100, deadline=None)
@given(_ANY_EXPR)
def test_pp_expr_is_stable(e):
    # printing is deterministic and total on all generated expressions
    assert pp_expr(e) == pp_expr(e)


def test_symtab_valuations_cover_product():
    count = sum(1 for _ in SYMTAB.valuations())
    assert count == 7 * 2  # bf: 1+2+4 sequences, v: 2 values


def test_alphabet_sorted_and_ground():
    names = [str(e) for e in SYMTAB.alphabet()]
    assert names == ["inp.0", "inp.1", "out.0", "out.1"]
