"""Ground semantics of reactive relations over finite domains.

Relations denote sets of observations from an initial valuation:

* terminated instances ``(trace, final valuation)``
* quiescent instances ``(trace, accepted event set)``

Sequencing steps through intermediate states, so evaluating an *unnormalised*
term here is an independent reading of relational composition; comparing it
with the normalised term exercises the rewrite rules.  Iteration is evaluated
as a reached-set fixpoint pruned at the trace bound, which is exhaustive for
all observations within the bound.
"""

from __future__ import annotations

from .relalg import (
    FinalAtom,
    InitAtom,
    QuiescentAtom,
    R4Residual,
    R5Residual,
    RAnd,
    RAtom,
    RFalse,
    RNegInit,
    ROr,
    RRel,
    RSeq,
    RStar,
    RTest,
    RTrue,
    ground_set,
    ground_trace,
)
from .state import (
    SymbolTable,
    Valuation,
    apply_to_valuation,
    eval_expr,
)


class NotGroundEvaluable(Exception):
    """The relation has no instance-level reading (e.g. the universal one)."""


def final_instances(
    r: RRel, s: Valuation, symtab: SymbolTable, bound: int
) -> frozenset:
    """All terminated observations (trace, state') with trace length <= bound."""
    if isinstance(r, RFalse):
        return frozenset()
    if isinstance(r, RTrue):
        raise NotGroundEvaluable("the universal relation has no instance set")
    if isinstance(r, RNegInit):
        raise NotGroundEvaluable("precondition clauses have no instance set")
    if isinstance(r, RTest):
        if eval_expr(r.cond, s):
            return frozenset({((), s)})
        return frozenset()
    if isinstance(r, RAtom):
        a = r.atom
        if isinstance(a, FinalAtom):
            if not eval_expr(a.cond, s):
                return frozenset()
            tt = ground_trace(a.trace, symtab, s)
            if len(tt) > bound:
                return frozenset()
            return frozenset({(tt, apply_to_valuation(a.subst, s, symtab))})
        return frozenset()
    if isinstance(r, ROr):
        out = set()
        for x in r.args:
            out |= final_instances(x, s, symtab, bound)
        return frozenset(out)
    if isinstance(r, RAnd):
        sets = [final_instances(x, s, symtab, bound) for x in r.args]
        out = sets[0]
        for x in sets[1:]:
            out &= x
        return frozenset(out)
    if isinstance(r, RSeq):
        out = set()
        for t1, s1 in final_instances(r.first, s, symtab, bound):
            for t2, s2 in final_instances(
                r.second, s1, symtab, bound - len(t1)
            ):
                out.add((t1 + t2, s2))
        return frozenset(out)
    if isinstance(r, RStar):
        out = set()
        for t1, s1 in _star_states(r.body, s, symtab, bound):
            out.add((t1, s1))
        return frozenset(out)
    if isinstance(r, R4Residual):
        return frozenset(
            i for i in final_instances(r.arg, s, symtab, bound) if i[0]
        )
    if isinstance(r, R5Residual):
        return frozenset(
            i for i in final_instances(r.arg, s, symtab, bound) if not i[0]
        )
    raise TypeError(f"not a reactive relation: {r!r}")


def _star_states(
    body: RRel, s: Valuation, symtab: SymbolTable, bound: int
) -> frozenset:
    """Reached (trace, state) pairs of an iteration, pruned at the bound."""
    seen = {((), s)}
    frontier = [((), s)]
    while frontier:
        t1, s1 = frontier.pop()
        for t2, s2 in final_instances(body, s1, symtab, bound - len(t1)):
            nxt = (t1 + t2, s2)
            if len(nxt[0]) <= bound and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return frozenset(seen)


def quiet_instances(
    r: RRel, s: Valuation, symtab: SymbolTable, bound: int
) -> frozenset:
    """All quiescent observations (trace, accepted set), trace <= bound.

    The accepted set is the atom's evaluated acceptance: the observation
    admits any refusal disjoint from it.
    """
    if isinstance(r, (RFalse, RTest, RNegInit)):
        return frozenset()
    if isinstance(r, RTrue):
        raise NotGroundEvaluable("the universal relation has no instance set")
    if isinstance(r, RAtom):
        a = r.atom
        if isinstance(a, QuiescentAtom):
            if not eval_expr(a.cond, s):
                return frozenset()
            tt = ground_trace(a.trace, symtab, s)
            if len(tt) > bound:
                return frozenset()
            return frozenset({(tt, ground_set(a.accept, symtab, s))})
        return frozenset()
    if isinstance(r, ROr):
        out = set()
        for x in r.args:
            out |= quiet_instances(x, s, symtab, bound)
        return frozenset(out)
    if isinstance(r, RAnd):
        sets = [quiet_instances(x, s, symtab, bound) for x in r.args]
        out = sets[0]
        for x in sets[1:]:
            out &= x
        return frozenset(out)
    if isinstance(r, RSeq):
        out = set(quiet_instances(r.first, s, symtab, bound))
        for t1, s1 in final_instances(r.first, s, symtab, bound):
            for t2, acc in quiet_instances(
                r.second, s1, symtab, bound - len(t1)
            ):
                out.add((t1 + t2, acc))
        return frozenset(out)
    if isinstance(r, RStar):
        out = set()
        for t1, s1 in _star_states(r.body, s, symtab, bound):
            for t2, acc in quiet_instances(
                r.body, s1, symtab, bound - len(t1)
            ):
                out.add((t1 + t2, acc))
        return frozenset(out)
    if isinstance(r, R4Residual):
        return frozenset(
            i for i in quiet_instances(r.arg, s, symtab, bound) if i[0]
        )
    if isinstance(r, R5Residual):
        return frozenset(
            i for i in quiet_instances(r.arg, s, symtab, bound) if not i[0]
        )
    raise TypeError(f"not a reactive relation: {r!r}")


def holds_term(
    r: RRel, s: Valuation, tt: tuple, s2: Valuation, symtab: SymbolTable
) -> bool:
    """Does the terminated observation (s, tt, s2) satisfy the relation?"""
    if isinstance(r, RTrue):
        return True
    return (tt, s2) in final_instances(r, s, symtab, len(tt))


def holds_quiet(
    r: RRel, s: Valuation, tt: tuple, acc: frozenset, symtab: SymbolTable
) -> bool:
    """Does the quiescent observation (s, tt, acc) satisfy the relation?

    An instance with accepted set E admits every acceptance superset of E.
    """
    if isinstance(r, RTrue):
        return True
    return any(
        t == tt and e <= acc
        for t, e in quiet_instances(r, s, symtab, len(tt))
    )


def holds_pre_clause(cond, trace, s: Valuation, tt: tuple, symtab) -> bool:
    """Does the negated-init clause hold at (s, tt)?"""
    if not eval_expr(cond, s):
        return True
    t = ground_trace(trace, symtab, s)
    return t != tt[: len(t)]
