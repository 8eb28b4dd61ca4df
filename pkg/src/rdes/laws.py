"""Randomised law suites: every rewrite rule of the calculus is replayed
against an independent ground reading on freshly generated atom instances.

The ground reading composes relations by stepping through intermediate
states (see `ground`), so each comparison is evidence for a rewrite rule,
not a restatement of it.
"""

from __future__ import annotations

import itertools

from . import ground, randgen
from .contracts import (
    assign_c,
    contracts_equal,
    do_c,
    seq_contract,
    skip_c,
    stop_c,
)
from .kleene import ka_laws_check
from .relalg import (
    FALSE_R,
    NegClause,
    RAtom,
    ROr,
    RSeq,
    RTest,
    filter_r4,
    filter_r5,
    ground_trace,
    merge_cond,
    normalize,
    or_of,
    pre_of,
    seq_final_final,
    seq_final_quiescent,
    subst_event,
    subst_pre,
    subst_rrel,
    wp_final,
)
from .state import eval_expr
from .verify import Config


def _final_obs(r, symtab, bound=4):
    out = set()
    for s in symtab.valuations():
        for t, s2 in ground.final_instances(r, s, symtab, bound):
            out.add((s, t, s2))
    return frozenset(out)


def _quiet_obs(r, symtab, bound=4):
    out = set()
    for s in symtab.valuations():
        for t, acc in ground.quiet_instances(r, s, symtab, bound):
            out.add((s, t, acc))
    return frozenset(out)


def _fail(law, detail):
    return {"law": law, "detail": detail}


# ---------------------------------------------------------------------------
# Composition rules


def check_test_precompose(rng) -> list:
    """[b];P expressed through a unit-trace update."""
    symtab = randgen.random_symtab(rng)
    b = randgen.random_cond(rng, symtab)
    atom = RAtom(randgen.random_final_atom(rng, symtab))
    raw = RSeq(RTest(b), atom)
    rewritten = normalize(raw, symtab)
    if _final_obs(raw, symtab) != _final_obs(rewritten, symtab):
        return [_fail("test_precompose", f"[{b}];{atom}")]
    return []


def check_final_final(rng) -> list:
    symtab = randgen.random_symtab(rng)
    f1 = randgen.random_final_atom(rng, symtab)
    f2 = randgen.random_final_atom(rng, symtab)
    merged = seq_final_final(f1, f2, symtab)
    lhs = _final_obs(RSeq(RAtom(f1), RAtom(f2)), symtab)
    rhs = (
        frozenset() if merged is None else _final_obs(RAtom(merged), symtab)
    )
    if lhs != rhs:
        return [_fail("final_final", f"{f1} ; {f2}")]
    return []


def check_final_quiescent(rng) -> list:
    symtab = randgen.random_symtab(rng)
    f = randgen.random_final_atom(rng, symtab)
    q = randgen.random_quiescent_atom(rng, symtab)
    merged = seq_final_quiescent(f, q, symtab)
    lhs = _quiet_obs(RSeq(RAtom(f), RAtom(q)), symtab)
    rhs = (
        frozenset() if merged is None else _quiet_obs(RAtom(merged), symtab)
    )
    if lhs != rhs:
        return [_fail("final_quiescent", f"{f} ; {q}")]
    return []


def _conditional_obs(c, r1, r2, symtab, kind):
    """Ground reading of (c & r1) \\/ (not c & r2), branch chosen per state."""
    get = _final_obs if kind == "final" else _quiet_obs
    out = set()
    for s, t, x in get(r1, symtab):
        if eval_expr(c, s):
            out.add((s, t, x))
    for s, t, x in get(r2, symtab):
        if not eval_expr(c, s):
            out.add((s, t, x))
    return frozenset(out)


def check_cond_final(rng) -> list:
    symtab = randgen.random_symtab(rng)
    c = randgen.random_cond(rng, symtab)
    f1, f2 = (randgen.random_final_atom(rng, symtab) for _ in range(2))
    merged = merge_cond(RAtom(f1), c, RAtom(f2), symtab)
    lhs = _conditional_obs(c, RAtom(f1), RAtom(f2), symtab, "final")
    if lhs != _final_obs(merged, symtab):
        return [_fail("cond_final", f"{f1} <|{c}|> {f2}")]
    return []


def check_cond_quiescent(rng) -> list:
    symtab = randgen.random_symtab(rng)
    c = randgen.random_cond(rng, symtab)
    q1, q2 = (randgen.random_quiescent_atom(rng, symtab) for _ in range(2))
    merged = merge_cond(RAtom(q1), c, RAtom(q2), symtab)
    lhs = _conditional_obs(c, RAtom(q1), RAtom(q2), symtab, "quiet")
    if lhs != _quiet_obs(merged, symtab):
        return [_fail("cond_quiescent", f"{q1} <|{c}|> {q2}")]
    return []


def check_conj_quiescent_union(rng) -> list:
    """A conjunction of same-trace offers accepts the union, as predicates
    over (state, trace, acceptance)."""
    from .relalg import conj_quiescent

    symtab = randgen.random_symtab(rng)
    shared = randgen.random_trace(rng, symtab)
    atoms = [
        randgen.quiescent(
            randgen.random_cond(rng, symtab),
            shared,
            randgen.random_event_set(rng, symtab),
        )
        for _ in range(rng.randint(2, 3))
    ]
    merged = conj_quiescent(atoms, symtab)
    alphabet = list(symtab.alphabet())
    if len(alphabet) > 5:
        alphabet = alphabet[:5]
    for s in symtab.valuations():
        tt = ground_trace(shared, symtab, s)
        for k in range(len(alphabet) + 1):
            for combo in itertools.combinations(alphabet, k):
                acc = frozenset(combo)
                lhs = all(
                    ground.holds_quiet(RAtom(a), s, tt, acc, symtab)
                    for a in atoms
                )
                rhs = ground.holds_quiet(RAtom(merged), s, tt, acc, symtab)
                if lhs != rhs:
                    return [
                        _fail(
                            "conj_quiescent",
                            f"{merged} at {s}, acc={sorted(map(str, acc))}",
                        )
                    ]
    return []


# ---------------------------------------------------------------------------
# Weakest precondition


def check_wp_final(rng) -> list:
    """wp of one terminated observation against one clause, replayed as
    'no split of the trace reaches a violation'."""
    symtab = randgen.random_symtab(rng)
    f = randgen.random_final_atom(rng, symtab)
    clause = NegClause(
        randgen.random_cond(rng, symtab), randgen.random_trace(rng, symtab)
    )
    result = wp_final(f, pre_of([clause], symtab), symtab)
    alphabet = symtab.alphabet()
    for s in symtab.valuations():
        for n in range(0, 3):
            for tt in itertools.product(alphabet, repeat=n):
                got = all(
                    ground.holds_pre_clause(c.cond, c.trace, s, tt, symtab)
                    for c in result.clauses
                )
                expect = True
                for t1, s1 in ground.final_instances(
                    RAtom(f), s, symtab, len(tt)
                ):
                    if tt[: len(t1)] != t1:
                        continue
                    if not ground.holds_pre_clause(
                        clause.cond, clause.trace, s1, tt[len(t1):], symtab
                    ):
                        expect = False
                if got != expect:
                    return [_fail("wp_final", f"{f} wp {clause} at {s} {tt}")]
    return []


# ---------------------------------------------------------------------------
# Assignment laws


def check_assign_distribution(rng) -> list:
    """Prefixing an update applies it as a substitution componentwise."""
    symtab = randgen.random_symtab(rng)
    s = randgen.random_subst(rng, symtab)
    from .contracts import Contract, classify
    from .relalg import TRUE_PRE

    c = Contract(
        pre_of([NegClause(randgen.random_cond(rng, symtab),
                          randgen.random_trace(rng, symtab))], symtab),
        or_of([RAtom(randgen.random_quiescent_atom(rng, symtab))]),
        or_of([RAtom(randgen.random_final_atom(rng, symtab))]),
    )
    c = classify(
        Contract(c.pre, normalize(c.peri, symtab), normalize(c.post, symtab)),
        symtab,
    )
    lhs = seq_contract(assign_c(s), c, symtab)
    rhs_pre = subst_pre(s, c.pre, symtab)
    rhs_peri = subst_rrel(s, c.peri, symtab)
    rhs_post = subst_rrel(s, c.post, symtab)
    if (
        lhs.pre != rhs_pre
        or lhs.peri != rhs_peri
        or lhs.post != rhs_post
    ):
        return [_fail("assign_distribution", f"<{s}> ; {c}")]
    return []


def check_assign_event_swap(rng) -> list:
    symtab = randgen.random_symtab(rng)
    s = randgen.random_subst(rng, symtab)
    e = randgen.random_event(rng, symtab)
    lhs = seq_contract(assign_c(s), do_c(e), symtab)
    rhs = seq_contract(do_c(subst_event(s, e)), assign_c(s), symtab)
    if not contracts_equal(lhs, rhs):
        return [_fail("assign_event_swap", f"<{s}> ; Do({e})")]
    return []


def check_assign_composition(rng) -> list:
    from .state import compose_subst

    symtab = randgen.random_symtab(rng)
    s1 = randgen.random_subst(rng, symtab)
    s2 = randgen.random_subst(rng, symtab)
    lhs = seq_contract(assign_c(s1), assign_c(s2), symtab)
    rhs = assign_c(compose_subst(s1, s2))
    if not contracts_equal(lhs, rhs):
        return [_fail("assign_composition", f"<{s1}> ; <{s2}>")]
    # semantic shadow on the ground
    if _final_obs(lhs.post, symtab) != _final_obs(rhs.post, symtab):
        return [_fail("assign_composition_ground", f"<{s1}> ; <{s2}>")]
    return []


def check_stop_annihilates(rng) -> list:
    symtab = randgen.random_symtab(rng)
    c = seq_contract(
        do_c(randgen.random_event(rng, symtab)), skip_c(), symtab
    )
    lhs = seq_contract(stop_c(), c, symtab)
    if not contracts_equal(lhs, stop_c()):
        return [_fail("stop_annihilates", str(c))]
    return []


# ---------------------------------------------------------------------------
# Trace filtering


def check_filter_partition(rng) -> list:
    symtab = randgen.random_symtab(rng)
    kind = rng.choice(["final", "quiet"])
    if kind == "final":
        atoms = [
            RAtom(randgen.random_final_atom(rng, symtab))
            for _ in range(rng.randint(1, 3))
        ]
        get = _final_obs
    else:
        atoms = [
            RAtom(randgen.random_quiescent_atom(rng, symtab))
            for _ in range(rng.randint(1, 3))
        ]
        get = _quiet_obs
    r = or_of(atoms)
    grew = filter_r4(r, symtab)
    same = filter_r5(r, symtab)
    whole = get(r, symtab)
    got_grew = get(grew, symtab)
    got_same = get(same, symtab)
    expect_grew = frozenset(o for o in whole if o[1])
    expect_same = frozenset(o for o in whole if not o[1])
    if got_grew != expect_grew or got_same != expect_same:
        return [_fail("filter_partition", str(r))]
    if (got_grew | got_same) != whole or (got_grew & got_same):
        return [_fail("filter_partition_disjoint", str(r))]
    return []


# ---------------------------------------------------------------------------
# Suites


COMPOSITION_LAWS = [
    check_test_precompose,
    check_final_final,
    check_final_quiescent,
    check_cond_final,
    check_cond_quiescent,
    check_conj_quiescent_union,
]

WP_LAWS = [check_wp_final]

ASSIGN_LAWS = [
    check_assign_distribution,
    check_assign_event_swap,
    check_assign_composition,
    check_stop_annihilates,
]

FILTER_LAWS = [check_filter_partition]

ALL_LAWS = COMPOSITION_LAWS + WP_LAWS + ASSIGN_LAWS + FILTER_LAWS


def run_law_suite(seed: int = 0, per_law: int = 50) -> dict:
    """Run every relational law on `per_law` random instances each."""
    rng = randgen.rng_for(seed)
    failures = []
    instances = 0
    for law in ALL_LAWS:
        for _ in range(per_law):
            instances += 1
            failures.extend(law(rng))
    return {
        "instances": instances,
        "failures": failures,
        "ok": not failures,
    }


def run_ka_suite(seed: int = 0, terms: int = 200, depth: int = 3) -> dict:
    """Bounded-unfold checks of the iteration identities on random star-free
    relation terms."""
    rng = randgen.rng_for(seed)
    failures = []
    checked = 0
    for _ in range(terms):
        symtab = randgen.random_symtab(rng)
        x = or_of(
            [
                RAtom(randgen.random_final_atom(rng, symtab, min_trace=1))
                for _ in range(rng.randint(1, 2))
            ]
        )
        y = or_of(
            [
                RAtom(randgen.random_final_atom(rng, symtab))
                for _ in range(rng.randint(1, 2))
            ]
        )
        checked += 1
        for res in ka_laws_check(x, y, symtab, depth):
            if not res["ok"]:
                failures.append(res)
    return {"terms": checked, "failures": failures, "ok": not failures}
