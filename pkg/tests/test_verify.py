"""Refinement discharge, loop invariants, and deadlock freedom."""

import pytest

from rdes import dsl, ground
from rdes.contracts import calculate, chaos_c, miracle_c, while_contract
from rdes.relalg import (
    EventTerm,
    RAtom,
    TRUE_PRE,
    TRUE_R,
    event_set,
    quiescent,
)
from rdes.state import (
    Acc,
    BinOp,
    Lit,
    Proj,
    TRUE,
    Var,
    valuation_of,
)
from rdes.verify import (
    Config,
    InvariantRel,
    Obligation,
    SpecTriple,
    assign_then_contract_reduction,
    check_deadlock_free,
    check_invariant_loop,
    check_rrel_refine,
    inv_check_program,
    refine_check,
    refine_obligations,
)

CFG = Config()

BUFFER = """\
channel inp : int[0..1]
channel out : int[0..1]
var bf : seq int[0..1] maxlen 2
bf := <> ;
while true do (
  inp?v -> bf := bf ++ <v>
  [] #bf > 0 & out!head(bf) -> bf := tail(bf)
)
"""


@pytest.fixture(scope="module")
def buffer():
    tp = dsl.load_program(BUFFER)
    return tp, calculate(tp)


def test_reflexive_refinement(buffer):
    tp, c = buffer
    v = refine_check(c, c, tp.symtab, CFG)
    assert v.verified


def test_obligation_shapes(buffer):
    tp, c = buffer
    obs = refine_obligations(c, c)
    assert [o.kind for o in obs] == ["pre", "peri", "post"]
    # implementation precondition on the left of the weakening obligation
    assert obs[0].lhs is c.pre and obs[0].rhs is c.pre


def test_chaos_refined_by_everything(buffer):
    tp, c = buffer
    for impl in (c, calculate(dsl.load_program("skip"))):
        v = refine_check(chaos_c(), impl, tp.symtab, CFG)
        assert v.verified


def test_miracle_refines_everything(buffer):
    tp, c = buffer
    v = refine_check(c, miracle_c(), tp.symtab, CFG)
    assert v.verified


def test_choice_does_not_refine_single_prefix():
    tp = dsl.load_program("channel a\nchannel c\na -> skip")
    narrow = calculate(tp)
    wide = calculate(
        dsl.load_program("channel a\nchannel c\na -> skip [] c -> skip")
    )
    # the choice can perform c, which the spec forbids
    v = refine_check(narrow, wide, tp.symtab, CFG)
    assert v.kind == "refuted"
    assert v.witness["trace"] == "<c>"


def test_refusal_narrowing_refuted():
    tp = dsl.load_program("channel a\nchannel c\na -> skip")
    narrow = calculate(tp)
    wide = calculate(
        dsl.load_program("channel a\nchannel c\na -> skip [] c -> skip")
    )
    # the single prefix may refuse c at quiescence; the choice may not
    v = refine_check(wide, narrow, tp.symtab, CFG)
    assert v.kind == "refuted"
    assert v.witness["trace"] == "<>"
    assert "c" not in v.witness["accept"]


def test_witness_replay(buffer):
    tp, c = buffer
    stop = calculate(dsl.load_program("stop"))
    spec = SpecTriple(
        TRUE_PRE,
        InvariantRel("peri", BinOp("!=", Acc(), Lit(frozenset()))),
        TRUE_R,
    )
    v = refine_check(spec, stop, SpecTripleTab(), CFG)
    assert v.kind == "refuted"
    # replay: the witness satisfies the implementation side and fails the
    # invariant
    s = valuation_of({})
    assert ground.holds_quiet(stop.peri, s, (), frozenset(), SpecTripleTab())


def SpecTripleTab():
    from rdes.state import SymbolTable

    return SymbolTable({}, {})


def test_deadlock_freedom_of_buffer(buffer):
    tp, c = buffer
    v = check_deadlock_free(c, tp.symtab, CFG)
    assert v.verified
    assert v.bounds["trace"] == 4


def test_deadlock_witnesses_minimal():
    tp = dsl.load_program("channel a\na -> stop")
    v = check_deadlock_free(calculate(tp), tp.symtab, CFG)
    assert v.kind == "refuted"
    assert v.witness["trace"] == "<a>"
    tp0 = dsl.load_program("stop")
    v0 = check_deadlock_free(calculate(tp0), tp0.symtab, CFG)
    assert v0.witness["trace"] == "<>"


def test_invariant_loop_on_buffer(buffer):
    tp, _ = buffer
    inv = dsl.parse_invariant("outps(tt) <= bf ++ inps(tt)", tp.symtab)
    verdict, reduced = inv_check_program(tp, inv, CFG)
    assert verdict.verified
    assert reduced.peri.body == BinOp("<=", Proj("out"), Proj("inp"))


def test_invariant_loop_top_invariants(buffer):
    tp, _ = buffer
    loop = tp.body.second
    body_c = calculate(dsl.TypedProgram(tp.symtab, loop.body))
    v = check_invariant_loop(
        loop.cond,
        body_c,
        (TRUE_PRE, InvariantRel("peri", TRUE), TRUE_R),
        tp.symtab,
        CFG,
    )
    assert v.verified


def test_wrong_invariant_refuted_with_input_witness(buffer):
    tp, _ = buffer
    wrong = dsl.parse_invariant("inps(tt) <= outps(tt)", tp.symtab)
    verdict, _ = inv_check_program(tp, wrong, CFG)
    assert verdict.kind == "refuted"
    assert "inp" in verdict.witness["trace"]


def test_invariant_rule_agrees_with_direct_refinement(buffer):
    # soundness shadow: when the single-step conditions verify, so does the
    # direct bounded refinement against the calculated loop
    tp, _ = buffer
    loop = tp.body.second
    body_c = calculate(dsl.TypedProgram(tp.symtab, loop.body))
    i2 = InvariantRel(
        "peri", dsl.parse_invariant("outps(tt) <= bf ++ inps(tt)", tp.symtab)
    )
    stepwise = check_invariant_loop(
        loop.cond, body_c, (TRUE_PRE, i2, TRUE_R), tp.symtab, CFG
    )
    assert stepwise.verified
    whole = while_contract(loop.cond, body_c, tp.symtab)
    direct = refine_check(
        SpecTriple(TRUE_PRE, i2, TRUE_R), whole, tp.symtab, CFG
    )
    assert direct.verified


def test_verified_is_monotonic_in_bounds(buffer):
    tp, c = buffer
    for tb in (1, 2, 3):
        v = check_deadlock_free(c, tp.symtab, Config(trace_bound=tb))
        assert v.verified


def test_assign_reduction_examples(buffer):
    tp, _ = buffer
    from rdes.state import assignment_subst

    s = assignment_subst({"bf": Lit(())}, tp.symtab)
    spec = SpecTriple(
        TRUE_PRE,
        InvariantRel(
            "peri",
            dsl.parse_invariant("outps(tt) <= bf ++ inps(tt)", tp.symtab),
        ),
        TRUE_R,
    )
    reduced = assign_then_contract_reduction(s, spec, tp.symtab)
    assert reduced.peri.body == BinOp("<=", Proj("out"), Proj("inp"))
    # identity leaves the spec alone
    from rdes.state import IDENTITY

    same = assign_then_contract_reduction(IDENTITY, spec, tp.symtab)
    assert same.peri.body == spec.peri.body


def test_assign_reduction_on_atoms():
    from rdes.state import IntType, SymbolTable, assignment_subst

    tab = SymbolTable({"x": IntType(0, 3)}, {"a": IntType(0, 3)})
    s = assignment_subst({"x": Lit(1)}, tab)
    spec = SpecTriple(
        TRUE_PRE,
        RAtom(
            quiescent(
                BinOp("=", Var("x"), Lit(1)),
                (),
                event_set(EventTerm("a", Var("x"))),
            )
        ),
        TRUE_R,
    )
    reduced = assign_then_contract_reduction(s, spec, tab)
    from rdes.relalg import EventTerm as ET

    assert reduced.peri == RAtom(
        quiescent(TRUE, (), event_set(ET("a", Lit(1))))
    )


def test_inconclusive_on_wrong_shape():
    tp = dsl.load_program("channel a\na -> skip")
    v, reduced = inv_check_program(tp, TRUE, CFG)
    assert v.kind == "inconclusive"
    assert reduced is None


def test_pre_obligation_refuted():
    # an implementation that diverges after `a` does not weaken a true
    # precondition
    tp = dsl.load_program("channel a\na -> chaos")
    impl = calculate(tp)
    spec = calculate(dsl.load_program("channel a\na -> skip"))
    v = refine_check(spec, impl, tp.symtab, CFG)
    assert v.kind == "refuted"
    assert v.witness["trace"] == "<a>"
