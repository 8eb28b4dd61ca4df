"""Reactive-relation term algebra and its normaliser.

Three atom kinds describe the building blocks of reactive behaviour:

* ``InitAtom(b, t)`` -- an initial condition: the state satisfies ``b`` and
  ``t`` is a prefix of the trace contribution.  Used negated in
  preconditions.
* ``QuiescentAtom(b, t, E)`` -- a quiescent observation: under ``b`` the
  trace contribution is exactly ``t`` and every event in ``E`` is accepted.
* ``FinalAtom(b, s, t)`` -- a terminated observation: under ``b`` the state
  is updated by substitution ``s`` and the trace contribution is ``t``.

Relations are disjunctions/conjunctions/sequences/iterations of atoms; the
normaliser pushes sequencing into atoms, yielding disjunctive atom form
(possibly interrupted by symbolic iteration nodes).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .state import (
    Expr,
    IDENTITY,
    IfE,
    Lit,
    Subst,
    SymbolTable,
    TRUE,
    Valuation,
    apply_subst,
    compose_subst,
    cond_is_false,
    cond_is_true,
    conj,
    disj,
    eval_expr,
    exprs_equiv,
    fold,
    negate,
    pp_expr,
    substs_equiv,
)
from .state import Event  # re-exported for ground consumers


class NormalizationIncomplete(Exception):
    """A relation would not reduce to the atom form the caller required."""


class KindMismatchError(Exception):
    pass


class TraceMismatchError(Exception):
    pass


# ---------------------------------------------------------------------------
# Event terms, trace expressions, acceptance-set expressions


@dataclass(frozen=True)
class EventTerm:
    chan: str
    data: Optional[Expr] = None

    def ground(self, symtab: SymbolTable, val: Valuation) -> Event:
        if self.data is None:
            return Event(self.chan)
        return symtab.ground_event(self.chan, eval_expr(self.data, val))

    def __str__(self) -> str:
        if self.data is None:
            return self.chan
        return f"{self.chan}.{pp_expr(self.data, 8)}"


TraceExpr = tuple  # of EventTerm; literal form only


def subst_event(s: Subst, e: EventTerm) -> EventTerm:
    if e.data is None:
        return e
    return EventTerm(e.chan, apply_subst(s, e.data))


def subst_trace(s: Subst, t: TraceExpr) -> TraceExpr:
    return tuple(subst_event(s, e) for e in t)


def fold_trace(t: TraceExpr) -> TraceExpr:
    return tuple(
        EventTerm(e.chan, fold(e.data) if e.data is not None else None)
        for e in t
    )


def ground_trace(t: TraceExpr, symtab: SymbolTable, val: Valuation) -> tuple:
    return tuple(e.ground(symtab, val) for e in t)


def traces_equiv(t1: TraceExpr, t2: TraceExpr, symtab: SymbolTable) -> bool:
    if len(t1) != len(t2):
        return False
    for a, b in zip(t1, t2):
        if a.chan != b.chan:
            return False
        if (a.data is None) != (b.data is None):
            return False
        if a.data is not None and not exprs_equiv(a.data, b.data, symtab):
            return False
    return True


def pp_trace(t: TraceExpr) -> str:
    return "<" + ", ".join(str(e) for e in t) + ">"


@dataclass(frozen=True)
class SingletonPart:
    """One event, offered when the guard holds (guard None = always)."""

    guard: Optional[Expr]
    term: EventTerm

    def __str__(self) -> str:
        if self.guard is None:
            return str(self.term)
        return f"{self.term} if {pp_expr(self.guard)}"


@dataclass(frozen=True)
class ImagePart:
    """Every event of one channel, offered when the guard holds."""

    guard: Optional[Expr]
    chan: str

    def __str__(self) -> str:
        if self.guard is None:
            return f"{self.chan}.*"
        return f"{self.chan}.* if {pp_expr(self.guard)}"


Part = Union[SingletonPart, ImagePart]


@dataclass(frozen=True)
class EventSetExpr:
    """Finite union of guarded singletons and channel images."""

    parts: tuple

    def __str__(self) -> str:
        return "{" + ", ".join(str(p) for p in self.parts) + "}"


EMPTY_SET = EventSetExpr(())


def event_set(*terms: EventTerm) -> EventSetExpr:
    return EventSetExpr(tuple(SingletonPart(None, t) for t in terms))


def channel_image(chan: str) -> EventSetExpr:
    return EventSetExpr((ImagePart(None, chan),))


def guarded_set(guard: Expr, inner: EventSetExpr) -> EventSetExpr:
    guard = fold(guard)
    if guard == TRUE:
        return inner
    if isinstance(guard, Lit) and not guard.value:
        return EMPTY_SET
    parts = []
    for p in inner.parts:
        g = guard if p.guard is None else conj(guard, p.guard)
        if isinstance(p, SingletonPart):
            parts.append(SingletonPart(g, p.term))
        else:
            parts.append(ImagePart(g, p.chan))
    return EventSetExpr(tuple(parts))


def union_sets(*sets: EventSetExpr) -> EventSetExpr:
    parts = []
    for s in sets:
        parts.extend(s.parts)
    return EventSetExpr(tuple(parts))


def conditional_set(c: Expr, s1: EventSetExpr, s2: EventSetExpr) -> EventSetExpr:
    return union_sets(guarded_set(c, s1), guarded_set(negate(c), s2))


def subst_set(s: Subst, es: EventSetExpr) -> EventSetExpr:
    parts = []
    for p in es.parts:
        g = apply_subst(s, p.guard) if p.guard is not None else None
        if isinstance(p, SingletonPart):
            parts.append(SingletonPart(g, subst_event(s, p.term)))
        else:
            parts.append(ImagePart(g, p.chan))
    return EventSetExpr(tuple(parts))


def canon_set(es: EventSetExpr, symtab: SymbolTable) -> EventSetExpr:
    """Canonical form: dead parts dropped, duplicates merged, literal
    singletons covering a whole channel collapsed to its image, sorted."""
    parts = []
    for p in es.parts:
        g = fold(p.guard) if p.guard is not None else None
        if g is not None:
            if cond_is_false(g, symtab):
                continue
            if cond_is_true(g, symtab):
                g = None
        if isinstance(p, SingletonPart):
            term = EventTerm(
                p.term.chan,
                fold(p.term.data) if p.term.data is not None else None,
            )
            parts.append(SingletonPart(g, term))
        else:
            parts.append(ImagePart(g, p.chan))
    # collapse literal unguarded singletons over a full channel domain
    by_chan: dict = {}
    for p in parts:
        if (
            isinstance(p, SingletonPart)
            and p.guard is None
            and p.term.data is not None
            and isinstance(p.term.data, Lit)
        ):
            by_chan.setdefault(p.term.chan, set()).add(p.term.data.value)
    collapsed = set()
    for chan, seen in by_chan.items():
        t = symtab.channels.get(chan)
        if t is not None and seen >= set(t.values()):
            collapsed.add(chan)
    out = []
    for p in parts:
        if (
            isinstance(p, SingletonPart)
            and p.guard is None
            and p.term.chan in collapsed
            and isinstance(p.term.data, Lit)
        ):
            continue
        out.append(p)
    out.extend(ImagePart(None, c) for c in sorted(collapsed))
    # drop duplicates and parts shadowed by an unguarded image
    images = {p.chan for p in out if isinstance(p, ImagePart) and p.guard is None}
    dedup = []
    for p in sorted(out, key=str):
        if dedup and str(dedup[-1]) == str(p):
            continue
        if (
            isinstance(p, SingletonPart)
            and p.term.chan in images
        ):
            continue
        if isinstance(p, ImagePart) and p.guard is not None and p.chan in images:
            continue
        dedup.append(p)
    return EventSetExpr(tuple(dedup))


def ground_set(
    es: EventSetExpr, symtab: SymbolTable, val: Valuation
) -> frozenset:
    events = set()
    for p in es.parts:
        if p.guard is not None and not eval_expr(p.guard, val):
            continue
        if isinstance(p, SingletonPart):
            events.add(p.term.ground(symtab, val))
        else:
            t = symtab.channels[p.chan]
            if t is None:
                events.add(Event(p.chan))
            else:
                events.update(Event(p.chan, v) for v in t.values())
    return frozenset(events)


def sets_equiv(a: EventSetExpr, b: EventSetExpr, symtab: SymbolTable) -> bool:
    if a == b:
        return True
    return all(
        ground_set(a, symtab, v) == ground_set(b, symtab, v)
        for v in symtab.valuations()
    )


# ---------------------------------------------------------------------------
# Atoms


@dataclass(frozen=True)
class InitAtom:
    cond: Expr
    trace: TraceExpr

    def __str__(self) -> str:
        return f"I({pp_expr(self.cond)} | {pp_trace(self.trace)})"


@dataclass(frozen=True)
class QuiescentAtom:
    cond: Expr
    trace: TraceExpr
    accept: EventSetExpr

    def __str__(self) -> str:
        return (
            f"E({pp_expr(self.cond)} | {pp_trace(self.trace)} | {self.accept})"
        )


@dataclass(frozen=True)
class FinalAtom:
    cond: Expr
    subst: Subst
    trace: TraceExpr

    def __str__(self) -> str:
        return f"Phi({pp_expr(self.cond)} | {self.subst} | {pp_trace(self.trace)})"


Atom = Union[InitAtom, QuiescentAtom, FinalAtom]


def quiescent(cond: Expr, trace: TraceExpr, accept: EventSetExpr) -> QuiescentAtom:
    return QuiescentAtom(fold(cond), fold_trace(trace), accept)


def final(cond: Expr, subst: Subst, trace: TraceExpr) -> FinalAtom:
    return FinalAtom(fold(cond), subst, fold_trace(trace))


UNIT_FINAL = FinalAtom(TRUE, IDENTITY, ())


def is_unit_final(a: Atom) -> bool:
    return (
        isinstance(a, FinalAtom)
        and a.cond == TRUE
        and a.subst.is_identity()
        and not a.trace
    )


def atoms_equiv(a: Atom, b: Atom, symtab: SymbolTable) -> bool:
    if a == b:
        return True
    if type(a) is not type(b):
        return False
    if not exprs_equiv(a.cond, b.cond, symtab):
        return False
    if not traces_equiv(a.trace, b.trace, symtab):
        return False
    if isinstance(a, FinalAtom):
        return substs_equiv(a.subst, b.subst, symtab)
    if isinstance(a, QuiescentAtom):
        return sets_equiv(a.accept, b.accept, symtab)
    return True


# ---------------------------------------------------------------------------
# Relation nodes


@dataclass(frozen=True)
class RFalse:
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True)
class RTrue:
    def __str__(self) -> str:
        return "true_r"


@dataclass(frozen=True)
class RAtom:
    atom: Atom

    def __str__(self) -> str:
        return str(self.atom)


@dataclass(frozen=True)
class ROr:
    args: tuple

    def __str__(self) -> str:
        return " \\/ ".join(
            f"({a})" if isinstance(a, (RAnd, RSeq)) else str(a)
            for a in self.args
        )


@dataclass(frozen=True)
class RAnd:
    args: tuple

    def __str__(self) -> str:
        return " /\\ ".join(
            f"({a})" if isinstance(a, (ROr, RSeq)) else str(a)
            for a in self.args
        )


@dataclass(frozen=True)
class RSeq:
    first: "RRel"
    second: "RRel"

    def __str__(self) -> str:
        parts = [
            f"({p})" if isinstance(p, (ROr, RAnd)) else str(p)
            for p in seq_items(self)
        ]
        return " ; ".join(parts)


@dataclass(frozen=True)
class RStar:
    body: "RRel"

    def __str__(self) -> str:
        return f"({self.body})star"


@dataclass(frozen=True)
class RTest:
    cond: Expr

    def __str__(self) -> str:
        return f"[{pp_expr(self.cond)}]"


@dataclass(frozen=True)
class RNegInit:
    cond: Expr
    trace: TraceExpr

    def __str__(self) -> str:
        return f"not I({pp_expr(self.cond)} | {pp_trace(self.trace)})"


@dataclass(frozen=True)
class R4Residual:
    arg: "RRel"

    def __str__(self) -> str:
        return f"R4({self.arg})"


@dataclass(frozen=True)
class R5Residual:
    arg: "RRel"

    def __str__(self) -> str:
        return f"R5({self.arg})"


RRel = Union[
    RFalse, RTrue, RAtom, ROr, RAnd, RSeq, RStar, RTest, RNegInit,
    R4Residual, R5Residual,
]

FALSE_R = RFalse()
TRUE_R = RTrue()
UNIT_R = RAtom(UNIT_FINAL)


def seq_items(r: RRel) -> list:
    if isinstance(r, RSeq):
        return seq_items(r.first) + seq_items(r.second)
    return [r]


def seq_of(items: list) -> RRel:
    if not items:
        return UNIT_R
    out = items[-1]
    for x in reversed(items[:-1]):
        out = RSeq(x, out)
    return out


def or_of(args: list) -> RRel:
    if not args:
        return FALSE_R
    if len(args) == 1:
        return args[0]
    return ROr(tuple(args))


def disjuncts(r: RRel) -> list:
    if isinstance(r, ROr):
        return list(r.args)
    if isinstance(r, RFalse):
        return []
    return [r]


# ---------------------------------------------------------------------------
# Composition rules


def seq_final_final(
    f1: FinalAtom, f2: FinalAtom, symtab: SymbolTable
) -> Optional[FinalAtom]:
    """Compose two terminated observations; None when the result is empty."""
    cond = conj(f1.cond, apply_subst(f1.subst, f2.cond))
    if cond_is_false(cond, symtab):
        return None
    return final(
        cond,
        compose_subst(f1.subst, f2.subst),
        f1.trace + subst_trace(f1.subst, f2.trace),
    )


def seq_final_quiescent(
    f: FinalAtom, q: QuiescentAtom, symtab: SymbolTable
) -> Optional[QuiescentAtom]:
    """Compose a terminated observation with a following quiescent one."""
    cond = conj(f.cond, apply_subst(f.subst, q.cond))
    if cond_is_false(cond, symtab):
        return None
    return quiescent(
        cond,
        f.trace + subst_trace(f.subst, q.trace),
        canon_set(subst_set(f.subst, q.accept), symtab),
    )


def seq_test(cond: Expr, r: RRel, symtab: SymbolTable) -> RRel:
    """Precompose a state test: [b];P runs P when b holds initially."""
    return normalize(RSeq(RTest(cond), r), symtab)


def merge_cond(r1: RRel, c: Expr, r2: RRel, symtab: SymbolTable) -> RRel:
    """Pointwise conditional of two same-kind atoms.

    Falls back to the guarded disjunction when the traces cannot be aligned
    pointwise.
    """
    c = fold(c)
    if cond_is_true(c, symtab):
        return normalize(r1, symtab)
    if cond_is_false(c, symtab):
        return normalize(r2, symtab)
    a1 = r1.atom if isinstance(r1, RAtom) else None
    a2 = r2.atom if isinstance(r2, RAtom) else None
    if a1 is not None and a2 is not None and type(a1) is not type(a2):
        raise KindMismatchError(f"cannot merge {a1} with {a2}")
    if (
        a1 is not None
        and a2 is not None
        and len(a1.trace) == len(a2.trace)
        and all(x.chan == y.chan for x, y in zip(a1.trace, a2.trace))
    ):
        cond = fold(IfE(c, a1.cond, a2.cond))
        trace = tuple(
            EventTerm(x.chan, _cond_data(c, x.data, y.data))
            for x, y in zip(a1.trace, a2.trace)
        )
        if isinstance(a1, FinalAtom):
            mapping = {}
            for n in a1.subst.domain() | a2.subst.domain():
                mapping[n] = fold(IfE(c, a1.subst.get(n), a2.subst.get(n)))
            from .state import subst_of

            return normalize(
                RAtom(final(cond, subst_of(mapping), trace)), symtab
            )
        if isinstance(a1, QuiescentAtom):
            accept = canon_set(
                conditional_set(c, a1.accept, a2.accept), symtab
            )
            return normalize(RAtom(quiescent(cond, trace, accept)), symtab)
    return normalize(
        ROr((guard_rrel(c, r1, symtab), guard_rrel(negate(c), r2, symtab))),
        symtab,
    )


def _cond_data(c: Expr, d1: Optional[Expr], d2: Optional[Expr]) -> Optional[Expr]:
    if d1 is None and d2 is None:
        return None
    return fold(IfE(c, d1, d2))


def guard_rrel(cond: Expr, r: RRel, symtab: SymbolTable) -> RRel:
    """Conjoin an initial-state condition: b /\\ P as a reactive relation."""
    return normalize(RSeq(RTest(cond), r), symtab)


def conj_quiescent(atoms: list, symtab: SymbolTable) -> QuiescentAtom:
    """Conjunction of quiescent observations sharing one trace expression."""
    if not atoms:
        raise TraceMismatchError("empty conjunction of quiescent observations")
    base = atoms[0]
    for a in atoms[1:]:
        if not traces_equiv(base.trace, a.trace, symtab):
            raise TraceMismatchError(
                f"traces differ: {pp_trace(base.trace)} vs {pp_trace(a.trace)}"
            )
    cond = conj(*(a.cond for a in atoms))
    accept = canon_set(union_sets(*(a.accept for a in atoms)), symtab)
    return quiescent(cond, base.trace, accept)


# ---------------------------------------------------------------------------
# Trace filters (strictly-increasing / unchanged trace)


def filter_r4(r: RRel, symtab: SymbolTable) -> RRel:
    """Keep only the observations that strictly extend the trace."""
    r = normalize(r, symtab)
    return _filter(r, keep_empty=False)


def filter_r5(r: RRel, symtab: SymbolTable) -> RRel:
    """Keep only the observations that leave the trace unchanged."""
    r = normalize(r, symtab)
    return _filter(r, keep_empty=True)


def _filter(r: RRel, keep_empty: bool) -> RRel:
    if isinstance(r, RFalse):
        return FALSE_R
    if isinstance(r, ROr):
        out = [_filter(a, keep_empty) for a in r.args]
        return or_of([a for a in out if not isinstance(a, RFalse)])
    if isinstance(r, RAtom):
        empty = len(r.atom.trace) == 0
        if empty == keep_empty:
            return r
        return FALSE_R
    if keep_empty:
        return R5Residual(r)
    return R4Residual(r)


# ---------------------------------------------------------------------------
# Preconditions: conjunctions of negated initial conditions


@dataclass(frozen=True)
class NegClause:
    cond: Expr
    trace: TraceExpr

    def __str__(self) -> str:
        return f"not I({pp_expr(self.cond)} | {pp_trace(self.trace)})"


@dataclass(frozen=True)
class PreNF:
    """Precondition normal form: a conjunction of negated-init clauses.

    The empty conjunction is the true (divergence-free) precondition; the
    false precondition is the single clause over the empty trace.
    """

    clauses: tuple

    def is_true(self) -> bool:
        return not self.clauses

    def to_rrel(self) -> RRel:
        if not self.clauses:
            return TRUE_R
        nodes = [RNegInit(c.cond, c.trace) for c in self.clauses]
        if len(nodes) == 1:
            return nodes[0]
        return RAnd(tuple(nodes))

    def __str__(self) -> str:
        if not self.clauses:
            return "true_r"
        return " /\\ ".join(str(c) for c in self.clauses)


TRUE_PRE = PreNF(())
FALSE_PRE = PreNF((NegClause(TRUE, ()),))


def pre_of(clauses: list, symtab: SymbolTable) -> PreNF:
    out = []
    for c in clauses:
        cond = fold(c.cond)
        if cond_is_false(cond, symtab):
            continue
        clause = NegClause(cond, fold_trace(c.trace))
        if not any(
            _clauses_equiv(clause, seen, symtab) for seen in out
        ):
            out.append(clause)
    return PreNF(tuple(sorted(out, key=str)))


def _clauses_equiv(a: NegClause, b: NegClause, symtab: SymbolTable) -> bool:
    return exprs_equiv(a.cond, b.cond, symtab) and traces_equiv(
        a.trace, b.trace, symtab
    )


def and_pre(p1: PreNF, p2: PreNF, symtab: SymbolTable) -> PreNF:
    return pre_of(list(p1.clauses) + list(p2.clauses), symtab)


def guard_pre(cond: Expr, p: PreNF, symtab: SymbolTable) -> PreNF:
    """The precondition b => P: the guard joins every clause's condition."""
    return pre_of(
        [NegClause(conj(cond, c.cond), c.trace) for c in p.clauses], symtab
    )


def wp_final(f: FinalAtom, p: PreNF, symtab: SymbolTable) -> PreNF:
    """Weakest precondition of one terminated observation against a
    precondition in clause form; closed under the clause representation."""
    clauses = []
    for c in p.clauses:
        cond = conj(f.cond, apply_subst(f.subst, c.cond))
        trace = f.trace + subst_trace(f.subst, c.trace)
        clauses.append(NegClause(cond, trace))
    return pre_of(clauses, symtab)


def wp_or_final(r: RRel, p: PreNF, symtab: SymbolTable) -> PreNF:
    """wp of a disjunction of terminated observations: the conjunction of
    the member weakest preconditions."""
    if p.is_true():
        return TRUE_PRE
    out = TRUE_PRE
    for d in disjuncts(r):
        if isinstance(d, RAtom) and isinstance(d.atom, FinalAtom):
            out = and_pre(out, wp_final(d.atom, p, symtab), symtab)
        else:
            raise NormalizationIncomplete(
                f"weakest precondition over a non-terminated disjunct: {d}"
            )
    return out


# ---------------------------------------------------------------------------
# Normaliser


def normalize(r: RRel, symtab: SymbolTable) -> RRel:
    """Reduce to disjunctive atom form where possible.

    Idempotent; iteration nodes and residuals are preserved as explicit
    barriers rather than guessed at.
    """
    if isinstance(r, (RFalse, RTrue)):
        return r
    if isinstance(r, RNegInit):
        cond = fold(r.cond)
        if cond_is_false(cond, symtab):
            return TRUE_R
        return RNegInit(cond, fold_trace(r.trace))
    if isinstance(r, RTest):
        cond = fold(r.cond)
        if cond_is_false(cond, symtab):
            return FALSE_R
        return RAtom(final(cond, IDENTITY, ()))
    if isinstance(r, RAtom):
        a = r.atom
        cond = fold(a.cond)
        if cond_is_false(cond, symtab):
            return FALSE_R
        if cond_is_true(cond, symtab) and cond != TRUE:
            cond = TRUE
        if isinstance(a, QuiescentAtom):
            return RAtom(
                quiescent(cond, a.trace, canon_set(a.accept, symtab))
            )
        if isinstance(a, FinalAtom):
            return RAtom(final(cond, a.subst, a.trace))
        return RAtom(InitAtom(cond, fold_trace(a.trace)))
    if isinstance(r, ROr):
        return _norm_or(r, symtab)
    if isinstance(r, RAnd):
        return _norm_and(r, symtab)
    if isinstance(r, RSeq):
        return _norm_seq(r, symtab)
    if isinstance(r, RStar):
        return _norm_star(r, symtab)
    if isinstance(r, R4Residual):
        return _filter(normalize(r.arg, symtab), keep_empty=False)
    if isinstance(r, R5Residual):
        return _filter(normalize(r.arg, symtab), keep_empty=True)
    raise TypeError(f"not a reactive relation: {r!r}")


def _norm_or(r: ROr, symtab: SymbolTable) -> RRel:
    flat = []
    for a in r.args:
        n = normalize(a, symtab)
        if isinstance(n, RFalse):
            continue
        if isinstance(n, RTrue):
            return TRUE_R
        flat.extend(disjuncts(n))
    merged: list = []
    for d in flat:
        if isinstance(d, RAtom):
            placed = False
            for i, seen in enumerate(merged):
                if not isinstance(seen, RAtom):
                    continue
                if atoms_equiv(d.atom, seen.atom, symtab):
                    placed = True
                    break
                compact = _merge_same_shape(seen.atom, d.atom, symtab)
                if compact is not None:
                    merged[i] = RAtom(compact)
                    placed = True
                    break
            if placed:
                continue
        elif any(d == seen for seen in merged):
            continue
        merged.append(d)
    return or_of(sorted(merged, key=str))


def _merge_same_shape(a: Atom, b: Atom, symtab: SymbolTable) -> Optional[Atom]:
    """Disjoin conditions when everything but the condition coincides."""
    if type(a) is not type(b) or not traces_equiv(a.trace, b.trace, symtab):
        return None
    if isinstance(a, FinalAtom):
        if not substs_equiv(a.subst, b.subst, symtab):
            return None
        return final(disj(a.cond, b.cond), a.subst, a.trace)
    if isinstance(a, QuiescentAtom):
        if not sets_equiv(a.accept, b.accept, symtab):
            return None
        return quiescent(disj(a.cond, b.cond), a.trace, a.accept)
    return InitAtom(disj(a.cond, b.cond), a.trace)


def _norm_and(r: RAnd, symtab: SymbolTable) -> RRel:
    flat = []
    for a in r.args:
        n = normalize(a, symtab)
        if isinstance(n, RFalse):
            return FALSE_R
        if isinstance(n, RTrue):
            continue
        if isinstance(n, RAnd):
            flat.extend(n.args)
        else:
            flat.append(n)
    if not flat:
        return TRUE_R
    if len(flat) == 1:
        return flat[0]
    if all(
        all(
            isinstance(d, RAtom) and isinstance(d.atom, QuiescentAtom)
            for d in disjuncts(arg)
        )
        for arg in flat
    ):
        # distribute the conjunction over the disjuncts and merge each
        # combination of quiescent observations
        import itertools as _it

        combos = _it.product(*[disjuncts(arg) for arg in flat])
        out = []
        for combo in combos:
            atoms = [d.atom for d in combo]
            lens = {len(a.trace) for a in atoms}
            if len(lens) > 1:
                continue  # a trace cannot have two lengths
            try:
                out.append(RAtom(conj_quiescent(atoms, symtab)))
            except TraceMismatchError:
                return RAnd(tuple(sorted(flat, key=str)))
        return normalize(or_of(out), symtab)
    return RAnd(tuple(sorted(flat, key=str)))


def _norm_seq(r: RSeq, symtab: SymbolTable) -> RRel:
    items = []
    for x in seq_items(r):
        n = normalize(x, symtab)
        if isinstance(n, RFalse):
            return FALSE_R
        items.extend(seq_items(n))

    out: list = []
    acc: Optional[list] = None  # pending disjunction of FinalAtoms

    def flush():
        nonlocal acc
        if acc is not None:
            out.append(or_of(sorted([RAtom(a) for a in acc], key=str)))
            acc = None

    for item in items:
        if _ends_quiescent(out) and acc is None:
            raise NormalizationIncomplete(
                "quiescent observation on the left of a composition"
            )
        kinds = _disjunct_kinds(item)
        if kinds == "final":
            finals = [d.atom for d in disjuncts(item)]
            if acc is None:
                acc = finals
            else:
                acc = [
                    c
                    for f1 in acc
                    for f2 in finals
                    if (c := seq_final_final(f1, f2, symtab)) is not None
                ]
                if not acc:
                    return FALSE_R
        elif kinds == "quiescent":
            if acc is None:
                out.append(item)
            else:
                composed = [
                    c
                    for f in acc
                    for d in disjuncts(item)
                    if (c := seq_final_quiescent(f, d.atom, symtab))
                    is not None
                ]
                acc = None
                if not composed:
                    return FALSE_R
                out.append(
                    or_of(sorted([RAtom(a) for a in composed], key=str))
                )
        else:
            flush()
            out.append(item)

    flush()
    if not out:
        return UNIT_R
    # a unit relation composed around barriers disappears
    out = [
        x
        for x in out
        if not (isinstance(x, RAtom) and is_unit_final(x.atom))
        or len(out) == 1
    ]
    if len(out) == 1:
        return out[0]
    return seq_of(out)


def _ends_quiescent(out: list) -> bool:
    if not out:
        return False
    last = out[-1]
    return _disjunct_kinds(last) == "quiescent"


def _disjunct_kinds(r: RRel) -> str:
    ds = disjuncts(r)
    if ds and all(
        isinstance(d, RAtom) and isinstance(d.atom, FinalAtom) for d in ds
    ):
        return "final"
    if ds and all(
        isinstance(d, RAtom) and isinstance(d.atom, QuiescentAtom) for d in ds
    ):
        return "quiescent"
    return "other"


def _norm_star(r: RStar, symtab: SymbolTable) -> RRel:
    body = normalize(r.body, symtab)
    if isinstance(body, RFalse):
        return UNIT_R
    if isinstance(body, RStar):
        return body
    # state tests and the unit are absorbed by the implicit unit of iteration
    ds = [
        d
        for d in disjuncts(body)
        if not (
            isinstance(d, RAtom)
            and isinstance(d.atom, FinalAtom)
            and d.atom.subst.is_identity()
            and not d.atom.trace
        )
    ]
    if not ds:
        return UNIT_R
    if len(ds) != len(disjuncts(body)):
        body = or_of(ds)
    return RStar(body)


# ---------------------------------------------------------------------------
# Substitution over relations (assignment distribution)


def subst_rrel(s: Subst, r: RRel, symtab: SymbolTable) -> RRel:
    """Distribute a state update into a relation's initial state."""
    if s.is_identity():
        return normalize(r, symtab)
    return normalize(RSeq(RAtom(final(TRUE, s, ())), r), symtab)


def subst_pre(s: Subst, p: PreNF, symtab: SymbolTable) -> PreNF:
    return pre_of(
        [
            NegClause(apply_subst(s, c.cond), subst_trace(s, c.trace))
            for c in p.clauses
        ],
        symtab,
    )


# ---------------------------------------------------------------------------
# JSON views


def rrel_to_json(r: RRel):
    if isinstance(r, RFalse):
        return {"kind": "false"}
    if isinstance(r, RTrue):
        return {"kind": "true"}
    if isinstance(r, RAtom):
        return atom_to_json(r.atom)
    if isinstance(r, ROr):
        return {"kind": "or", "args": [rrel_to_json(a) for a in r.args]}
    if isinstance(r, RAnd):
        return {"kind": "and", "args": [rrel_to_json(a) for a in r.args]}
    if isinstance(r, RSeq):
        return {"kind": "seq", "items": [rrel_to_json(x) for x in seq_items(r)]}
    if isinstance(r, RStar):
        return {"kind": "star", "body": rrel_to_json(r.body)}
    if isinstance(r, RTest):
        return {"kind": "test", "cond": pp_expr(r.cond)}
    if isinstance(r, RNegInit):
        return {
            "kind": "neg_init",
            "cond": pp_expr(r.cond),
            "trace": pp_trace(r.trace),
        }
    if isinstance(r, R4Residual):
        return {"kind": "r4", "arg": rrel_to_json(r.arg)}
    if isinstance(r, R5Residual):
        return {"kind": "r5", "arg": rrel_to_json(r.arg)}
    raise TypeError(f"not a reactive relation: {r!r}")


def atom_to_json(a: Atom):
    if isinstance(a, InitAtom):
        return {"kind": "init", "cond": pp_expr(a.cond), "trace": pp_trace(a.trace)}
    if isinstance(a, QuiescentAtom):
        return {
            "kind": "quiescent",
            "cond": pp_expr(a.cond),
            "trace": pp_trace(a.trace),
            "accept": str(a.accept),
        }
    return {
        "kind": "final",
        "cond": pp_expr(a.cond),
        "subst": str(a.subst),
        "trace": pp_trace(a.trace),
    }


def pre_to_json(p: PreNF):
    return [
        {"cond": pp_expr(c.cond), "trace": pp_trace(c.trace)}
        for c in p.clauses
    ]
