"""Contract constructors, combinators, classification, and calculation."""

import pytest

from rdes import dsl
from rdes.contracts import (
    Contract,
    EmptyIndexError,
    NotProductiveError,
    assign_c,
    calculate,
    chaos_c,
    classify,
    cond_contract,
    contracts_equal,
    do_c,
    extchoice_contract,
    intchoice_contract,
    miracle_c,
    seq_contract,
    skip_c,
    star_contract,
    stop_c,
    while_contract,
)
from rdes.relalg import (
    EventTerm,
    FALSE_R,
    ImagePart,
    NegClause,
    RAtom,
    ROr,
    RSeq,
    RStar,
    SingletonPart,
    TRUE_PRE,
    channel_image,
    event_set,
    final,
    guarded_set,
    normalize,
    quiescent,
    union_sets,
)
from rdes.state import (
    BinOp,
    Head,
    IDENTITY,
    IntType,
    Len,
    Lit,
    SeqType,
    SymbolTable,
    TRUE,
    Tail,
    Var,
    assignment_subst,
    subst_of,
)

XTAB = SymbolTable({"x": IntType(0, 3)}, {"a": IntType(0, 3)})
ABC = SymbolTable({}, {"a": None, "b": None, "c": None})
BFTAB = SymbolTable(
    {"bf": SeqType(IntType(0, 1), 2)},
    {"inp": IntType(0, 1), "out": IntType(0, 1)},
)
NONEMPTY = BinOp("<", Lit(0), Len(Var("bf")))


def ev(chan, data=None):
    return EventTerm(chan, Lit(data) if data is not None else None)


def calc_src(src):
    tp = dsl.load_program(src)
    return calculate(tp), tp.symtab


def test_example_assign_prefix_assign():
    lhs, tab = calc_src(
        "channel a : int[0..3]\nvar x : int[0..3]\nx := 1 ; a!x -> x := x + 2"
    )
    rhs, _ = calc_src(
        "channel a : int[0..3]\nvar x : int[0..3]\na!1 -> x := 3"
    )
    expected = Contract(
        TRUE_PRE,
        RAtom(quiescent(TRUE, (), event_set(ev("a", 1)))),
        RAtom(final(TRUE, subst_of({"x": Lit(3)}), (ev("a", 1),))),
    )
    assert contracts_equal(lhs, rhs)
    assert contracts_equal(lhs, expected)


def test_skip_is_seq_unit():
    c = do_c(ev("a", 2))
    assert contracts_equal(seq_contract(skip_c(), c, XTAB), c)
    assert contracts_equal(seq_contract(c, skip_c(), XTAB), c)


def test_stop_left_annihilates():
    c = do_c(ev("a", 1))
    assert contracts_equal(seq_contract(stop_c(), c, XTAB), stop_c())


def test_chaos_left_annihilates():
    c = seq_contract(chaos_c(), do_c(ev("a", 1)), XTAB)
    assert contracts_equal(c, chaos_c())


def test_miracle_left_annihilates():
    c = seq_contract(miracle_c(), do_c(ev("a", 1)), XTAB)
    assert contracts_equal(c, miracle_c())


def test_assign_composition():
    s1 = assignment_subst({"x": Lit(1)}, XTAB)
    s2 = assignment_subst({"x": BinOp("+", Var("x"), Lit(1))}, XTAB)
    lhs = seq_contract(assign_c(s1), assign_c(s2), XTAB)
    assert contracts_equal(lhs, assign_c(subst_of({"x": Lit(2)})))


def test_assign_identity_is_skip():
    assert contracts_equal(assign_c(IDENTITY), skip_c())


def test_assign_commutes_with_event():
    s = assignment_subst({"x": Lit(1)}, XTAB)
    lhs = seq_contract(assign_c(s), do_c(EventTerm("a", Var("x"))), XTAB)
    rhs = seq_contract(do_c(ev("a", 1)), assign_c(s), XTAB)
    assert contracts_equal(lhs, rhs)


def test_do_then_chaos_precondition():
    c = seq_contract(do_c(ev("a", 1)), chaos_c(), XTAB)
    assert c.pre.clauses == (NegClause(TRUE, (ev("a", 1),)),)
    assert c.peri == RAtom(quiescent(TRUE, (), event_set(ev("a", 1))))
    assert c.post == FALSE_R


def test_intchoice_units():
    c = do_c(ev("a", 1))
    assert contracts_equal(intchoice_contract([c], XTAB), c)
    assert contracts_equal(intchoice_contract([c, c], XTAB), c)
    with pytest.raises(EmptyIndexError):
        intchoice_contract([], XTAB)


def test_prefix_distributes_over_intchoice():
    p = do_c(EventTerm("b"))
    q = stop_c()
    lhs = seq_contract(
        do_c(EventTerm("a")), intchoice_contract([p, q], ABC), ABC
    )
    rhs = intchoice_contract(
        [
            seq_contract(do_c(EventTerm("a")), p, ABC),
            seq_contract(do_c(EventTerm("a")), q, ABC),
        ],
        ABC,
    )
    assert contracts_equal(lhs, rhs)


def test_extchoice_example_pericondition():
    c, tab = calc_src(
        "channel a\nchannel b\nchannel c\na -> b -> skip [] c -> skip"
    )
    expected_peri = normalize(
        ROr(
            (
                RAtom(
                    quiescent(
                        TRUE, (), event_set(EventTerm("a"), EventTerm("c"))
                    )
                ),
                RAtom(
                    quiescent(
                        TRUE,
                        (EventTerm("a"),),
                        event_set(EventTerm("b")),
                    )
                ),
            )
        ),
        tab,
    )
    assert c.peri == expected_peri
    assert c.pre == TRUE_PRE


def test_extchoice_stop_is_unit():
    p = seq_contract(do_c(EventTerm("a")), skip_c(), ABC)
    assert contracts_equal(extchoice_contract([p, stop_c()], ABC), p)


def test_extchoice_commutative_idempotent():
    p = seq_contract(do_c(EventTerm("a")), skip_c(), ABC)
    q = seq_contract(do_c(EventTerm("b")), stop_c(), ABC)
    assert contracts_equal(
        extchoice_contract([p, q], ABC), extchoice_contract([q, p], ABC)
    )
    assert contracts_equal(extchoice_contract([p, p], ABC), p)


def test_extchoice_associative_on_examples():
    p = do_c(EventTerm("a"))
    q = do_c(EventTerm("b"))
    r = do_c(EventTerm("c"))
    lhs = extchoice_contract([extchoice_contract([p, q], ABC), r], ABC)
    rhs = extchoice_contract([p, extchoice_contract([q, r], ABC)], ABC)
    assert contracts_equal(lhs, rhs)


def test_guard_false_is_stop_and_true_is_identity():
    p = do_c(EventTerm("a"))
    assert contracts_equal(cond_contract(Lit(False), p, stop_c(), ABC), stop_c())
    assert contracts_equal(cond_contract(Lit(True), p, stop_c(), ABC), p)


def test_buffer_body_contract():
    body_src = """\
channel inp : int[0..1]
channel out : int[0..1]
var bf : seq int[0..1] maxlen 2
inp?v -> bf := bf ++ <v>
[] #bf > 0 & out!head(bf) -> bf := tail(bf)
"""
    c, tab = calc_src(body_src)
    assert c.pre == TRUE_PRE
    # quiescent offers: every input event plus the head output if non-empty
    expected_accept = union_sets(
        channel_image("inp"),
        guarded_set(NONEMPTY, event_set(EventTerm("out", Head(Var("bf"))))),
    )
    expected_peri = normalize(
        RAtom(quiescent(TRUE, (), expected_accept)), tab
    )
    assert c.peri == expected_peri
    # terminated: one disjunct per input value plus the guarded output
    expected_post = normalize(
        ROr(
            (
                RAtom(
                    final(
                        TRUE,
                        assignment_subst(
                            {"bf": BinOp("++", Var("bf"), Lit((0,)))}, tab
                        ),
                        (ev("inp", 0),),
                    )
                ),
                RAtom(
                    final(
                        TRUE,
                        assignment_subst(
                            {"bf": BinOp("++", Var("bf"), Lit((1,)))}, tab
                        ),
                        (ev("inp", 1),),
                    )
                ),
                RAtom(
                    final(
                        NONEMPTY,
                        assignment_subst({"bf": Tail(Var("bf"))}, tab),
                        (EventTerm("out", Head(Var("bf"))),),
                    )
                ),
            )
        ),
        tab,
    )
    assert c.post == expected_post
    assert c.productive is True


def test_buffer_overall_contract():
    src = """\
channel inp : int[0..1]
channel out : int[0..1]
var bf : seq int[0..1] maxlen 2
bf := <> ;
while true do (
  inp?v -> bf := bf ++ <v>
  [] #bf > 0 & out!head(bf) -> bf := tail(bf)
)
"""
    c, tab = calc_src(src)
    assert c.pre == TRUE_PRE
    assert c.post == FALSE_R
    # peri: set the buffer empty, iterate the body, then pause in its offers
    assert isinstance(c.peri, RSeq)
    first, rest = c.peri.first, c.peri.second
    assert isinstance(first, RAtom)
    assert first.atom.subst == assignment_subst({"bf": Lit(())}, tab)
    assert first.atom.trace == ()
    assert isinstance(rest, RSeq)
    assert isinstance(rest.first, RStar)


def test_while_false_is_skip():
    body = do_c(ev("a", 1))
    assert contracts_equal(while_contract(Lit(False), body, XTAB), skip_c())


def test_while_true_instantaneous_is_chaos():
    body = assign_c(
        assignment_subst({"x": BinOp("+", Var("x"), Lit(1))}, XTAB)
    )
    c = while_contract(Lit(True), body, XTAB)
    assert contracts_equal(c, chaos_c())


def test_while_nonproductive_rejected():
    body = assign_c(
        assignment_subst({"x": BinOp("+", Var("x"), Lit(1))}, XTAB)
    )
    with pytest.raises(NotProductiveError):
        while_contract(BinOp("<", Var("x"), Lit(2)), body, XTAB)


def test_while_true_of_prefix_shape():
    c, tab = calc_src("channel a\nwhile true do a -> skip")
    assert c.pre == TRUE_PRE
    assert c.post == FALSE_R
    assert isinstance(c.peri, RSeq)
    assert isinstance(c.peri.first, RStar)


def test_star_of_skip_is_skip():
    assert contracts_equal(star_contract(skip_c(), XTAB), skip_c())


def test_star_contract_trivial_pre():
    c = star_contract(do_c(ev("a", 1)), XTAB)
    assert c.pre == TRUE_PRE
    assert c.post == RStar(RAtom(final(TRUE, IDENTITY, (ev("a", 1),))))


def test_classification_base_cases():
    assert do_c(ev("a", 1)).productive is True
    s = classify(skip_c(), XTAB)
    assert s.productive is False and s.instantaneous is True
    c = classify(chaos_c(), XTAB)
    assert c.productive is True and c.instantaneous is True


def test_classification_seq_rule():
    c = seq_contract(
        do_c(ev("a", 1)),
        assign_c(assignment_subst({"x": Lit(2)}, XTAB)),
        XTAB,
    )
    assert c.productive is True
    assert c.instantaneous is False


def test_calculate_skip_and_echo_choice():
    c, _ = calc_src("skip")
    assert contracts_equal(c, skip_c())
    c1, tab = calc_src("channel a\na -> skip [] a -> skip")
    c2, _ = calc_src("channel a\na -> skip")
    assert contracts_equal(c1, c2)


def test_extchoice_distributes_into_seq_for_productive_branches():
    src_lhs = "channel a\nchannel b\nchannel c\n(a -> skip [] b -> skip) ; c -> skip"
    src_rhs = "channel a\nchannel b\nchannel c\n(a -> skip ; c -> skip) [] (b -> skip ; c -> skip)"
    lhs, _ = calc_src(src_lhs)
    rhs, _ = calc_src(src_rhs)
    assert contracts_equal(lhs, rhs)


def test_instantaneous_distributes_from_left():
    src_lhs = "channel a\nchannel b\nvar x : int[0..1]\nx := 1 ; (a -> skip [] b -> skip)"
    src_rhs = "channel a\nchannel b\nvar x : int[0..1]\n(x := 1 ; a -> skip) [] (x := 1 ; b -> skip)"
    lhs, _ = calc_src(src_lhs)
    rhs, _ = calc_src(src_rhs)
    assert contracts_equal(lhs, rhs)
