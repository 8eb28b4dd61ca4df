"""Refinement obligations and their discharge by finite enumeration.

A specification refines into an implementation when the implementation
weakens the precondition and strengthens the peri- and postconditions under
the specification's precondition.  Obligations are discharged by enumerating
ground observations within explicit bounds; every verdict carries its
bounds, a refutation carries a replayable witness, and anything the bounds
cannot settle is reported inconclusive rather than guessed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from . import dsl, ground
from .contracts import Contract, calculate
from .kleene import star_wp
from .relalg import (
    FinalAtom,
    NegClause,
    PreNF,
    RAtom,
    RRel,
    RSeq,
    RTest,
    RTrue,
    TRUE_PRE,
    TRUE_R,
    disjuncts,
    normalize,
    pre_of,
    subst_pre,
    subst_rrel,
)
from .state import (
    Acc,
    Expr,
    Subst,
    SymbolTable,
    Valuation,
    apply_subst,
    eval_expr,
    negate,
    pp_expr,
)


def _mentions_acc(e: Expr) -> bool:
    from .state import BinOp, Head, IfE, Len, Not, SeqDisplay, Tail, Clamp

    if isinstance(e, Acc):
        return True
    if isinstance(e, BinOp):
        return _mentions_acc(e.left) or _mentions_acc(e.right)
    if isinstance(e, (Not, Head, Tail, Len, Clamp)):
        return _mentions_acc(e.arg)
    if isinstance(e, IfE):
        return any(_mentions_acc(x) for x in (e.cond, e.then, e.other))
    if isinstance(e, SeqDisplay):
        return any(_mentions_acc(x) for x in e.elems)
    return False


@dataclass(frozen=True)
class Config:
    trace_bound: int = 4
    star_bound: int = 3
    wp_bound: int = 16
    jobs: int = 1
    seed: int = 0
    fmt: str = "text"

    def bounds(self) -> dict:
        return {
            "trace": self.trace_bound,
            "star": self.star_bound,
            "wp": self.wp_bound,
        }


@dataclass(frozen=True)
class InvariantRel:
    """A reactive invariant: a condition over the initial state, the trace
    contribution (via projections), the acceptance set (quiescent kind), and
    the final state (terminated kind)."""

    kind: str  # "peri" | "post"
    body: Expr

    def __str__(self) -> str:
        return pp_expr(self.body)


@dataclass(frozen=True)
class SeqInv:
    """A relation followed by an invariant: the step shape of the loop rule."""

    prefix: RRel
    inv: InvariantRel


Side = Union[PreNF, RRel, InvariantRel, SeqInv]


@dataclass(frozen=True)
class Obligation:
    lhs: Side
    rhs: Side
    kind: str  # "pre" | "peri" | "post"
    origin: str
    assume: PreNF = TRUE_PRE


@dataclass(frozen=True)
class Verdict:
    kind: str  # "verified" | "refuted" | "inconclusive"
    bounds: dict
    witness: Optional[dict] = None
    reason: Optional[str] = None
    obligations: tuple = ()

    @property
    def verified(self) -> bool:
        return self.kind == "verified"

    def exit_code(self) -> int:
        return {"verified": 0, "refuted": 1, "inconclusive": 2}[self.kind]

    def to_json(self):
        out = {"verdict": self.kind, "bounds": dict(self.bounds)}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.reason is not None:
            out["reason"] = self.reason
        if self.obligations:
            out["obligations"] = [
                {"origin": o.origin, "kind": o.kind} for o in self.obligations
            ]
        return out


@dataclass(frozen=True)
class SpecTriple:
    """An invariant-style specification contract."""

    pre: PreNF
    peri: Union[RRel, InvariantRel]
    post: Union[RRel, InvariantRel]


def deadlock_free_spec() -> SpecTriple:
    """Quiescent observations must accept at least one event."""
    from .state import BinOp, Lit

    return SpecTriple(
        TRUE_PRE,
        InvariantRel("peri", BinOp("!=", Acc(), Lit(frozenset()))),
        TRUE_R,
    )


# ---------------------------------------------------------------------------
# Obligation generation


def refine_obligations(spec, impl: Contract) -> list:
    """The three refinement obligations: weaken the precondition, strengthen
    peri- and postcondition under the specification's precondition."""
    return [
        Obligation(impl.pre, spec.pre, "pre", "precondition weakening"),
        Obligation(
            spec.peri, impl.peri, "peri", "pericondition strengthening",
            assume=spec.pre,
        ),
        Obligation(
            spec.post, impl.post, "post", "postcondition strengthening",
            assume=spec.pre,
        ),
    ]


# ---------------------------------------------------------------------------
# Ground satisfaction of obligation sides


def _traces(symtab: SymbolTable, bound: int):
    alphabet = symtab.alphabet()
    for n in range(bound + 1):
        yield from itertools.product(alphabet, repeat=n)


def _pre_holds(p: PreNF, s: Valuation, tt: tuple, symtab) -> bool:
    return all(
        ground.holds_pre_clause(c.cond, c.trace, s, tt, symtab)
        for c in p.clauses
    )


def _lhs_quiet(lhs: Side, s, tt, acc, symtab: SymbolTable) -> bool:
    if isinstance(lhs, InvariantRel):
        return bool(eval_expr(lhs.body, s, tt=tt, acc=acc))
    if isinstance(lhs, SeqInv):
        for t1, s1 in ground.final_instances(lhs.prefix, s, symtab, len(tt)):
            if tt[: len(t1)] == t1 and _lhs_quiet(
                lhs.inv, s1, tt[len(t1):], acc, symtab
            ):
                return True
        return False
    return ground.holds_quiet(lhs, s, tt, acc, symtab)


def _lhs_term(lhs: Side, s, tt, s2, symtab: SymbolTable) -> bool:
    if isinstance(lhs, InvariantRel):
        return bool(eval_expr(lhs.body, s, tt=tt, primed=s2))
    if isinstance(lhs, SeqInv):
        for t1, s1 in ground.final_instances(lhs.prefix, s, symtab, len(tt)):
            if tt[: len(t1)] == t1 and _lhs_term(
                lhs.inv, s1, tt[len(t1):], s2, symtab
            ):
                return True
        return False
    return ground.holds_term(lhs, s, tt, s2, symtab)


def _k(items) -> tuple:
    """Canonical sort key for events and event sets."""
    if isinstance(items, frozenset):
        return tuple(sorted(str(e) for e in items))
    return tuple(str(e) for e in items)


def _fmt_witness(s: Valuation, tt: tuple, extra: dict) -> dict:
    out = {"state": str(s), "trace": "<" + ", ".join(str(e) for e in tt) + ">"}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# Obligation discharge


def check_rrel_refine(
    ob: Obligation, symtab: SymbolTable, cfg: Config
) -> Verdict:
    """Discharge one obligation by enumerating the right-hand side's ground
    observations within the bounds and testing them against the left."""
    try:
        if ob.kind == "pre":
            return _check_pre(ob, symtab, cfg)
        if ob.kind == "peri":
            return _check_quiet(ob, symtab, cfg)
        return _check_term(ob, symtab, cfg)
    except ground.NotGroundEvaluable as exc:
        return Verdict("inconclusive", cfg.bounds(), reason=str(exc))


def _check_pre(ob: Obligation, symtab, cfg: Config) -> Verdict:
    lhs, rhs = ob.lhs, ob.rhs
    assert isinstance(lhs, PreNF) and isinstance(rhs, PreNF)
    witnesses = []
    for s in symtab.valuations():
        for tt in _traces(symtab, cfg.trace_bound):
            if _pre_holds(rhs, s, tt, symtab) and not _pre_holds(
                lhs, s, tt, symtab
            ):
                witnesses.append(((len(tt), _k(tt), str(s)), (s, tt)))
    if witnesses:
        s, tt = min(witnesses)[1]
        return Verdict(
            "refuted",
            cfg.bounds(),
            witness=_fmt_witness(s, tt, {"violates": ob.origin}),
        )
    return Verdict("verified", cfg.bounds())


def _rhs_quiet_instances(rhs: Side, s, symtab, bound):
    if isinstance(rhs, (InvariantRel, SeqInv)):
        raise ground.NotGroundEvaluable(
            "invariant relations generate no observations"
        )
    return ground.quiet_instances(rhs, s, symtab, bound)


def _check_quiet(ob: Obligation, symtab, cfg: Config) -> Verdict:
    if isinstance(ob.rhs, (InvariantRel, SeqInv)) or isinstance(
        ob.lhs, PreNF
    ):
        return _check_quiet_sweep(ob, symtab, cfg)
    lhs_mentions_acc = isinstance(ob.lhs, InvariantRel) and _mentions_acc(
        ob.lhs.body
    ) or (
        isinstance(ob.lhs, SeqInv) and _mentions_acc(ob.lhs.inv.body)
    )
    alphabet = frozenset(symtab.alphabet())
    witnesses = []
    for s in symtab.valuations():
        for tt, acc in _rhs_quiet_instances(
            ob.rhs, s, symtab, cfg.trace_bound
        ):
            if not _pre_holds(ob.assume, s, tt, symtab):
                continue
            if lhs_mentions_acc:
                # the observation admits every acceptance superset
                free = sorted(alphabet - acc, key=str)
                for k in range(len(free) + 1):
                    for extra in itertools.combinations(free, k):
                        a = acc | frozenset(extra)
                        if not _lhs_quiet(ob.lhs, s, tt, a, symtab):
                            witnesses.append(
                                ((len(tt), _k(tt), str(s), _k(a)), (s, tt, a))
                            )
            else:
                if not _lhs_quiet(ob.lhs, s, tt, acc, symtab):
                    witnesses.append(
                        ((len(tt), _k(tt), str(s), _k(acc)), (s, tt, acc))
                    )
    if witnesses:
        s, tt, acc = min(witnesses)[1]
        return Verdict(
            "refuted",
            cfg.bounds(),
            witness=_fmt_witness(
                s, tt, {"accept": "{" + ", ".join(sorted(map(str, acc))) + "}"}
            ),
        )
    return Verdict("verified", cfg.bounds())


def _check_quiet_sweep(ob: Obligation, symtab, cfg: Config) -> Verdict:
    """Full tuple sweep for right-hand sides that are checked, not
    enumerated (invariant step obligations)."""
    needs_acc = _side_mentions_acc(ob.lhs) or _side_mentions_acc(ob.rhs)
    acc_sets = (
        [frozenset(c) for c in _subsets(symtab.alphabet())]
        if needs_acc
        else [frozenset()]
    )
    witnesses = []
    for s in symtab.valuations():
        for tt in _traces(symtab, cfg.trace_bound):
            if not _pre_holds(ob.assume, s, tt, symtab):
                continue
            for acc in acc_sets:
                if _lhs_quiet(ob.rhs, s, tt, acc, symtab) and not _lhs_quiet(
                    ob.lhs, s, tt, acc, symtab
                ):
                    witnesses.append(
                        ((len(tt), _k(tt), str(s), _k(acc)), (s, tt, acc))
                    )
    if witnesses:
        s, tt, acc = min(witnesses)[1]
        return Verdict(
            "refuted",
            cfg.bounds(),
            witness=_fmt_witness(
                s, tt, {"accept": "{" + ", ".join(sorted(map(str, acc))) + "}"}
            ),
        )
    return Verdict("verified", cfg.bounds())


def _side_mentions_acc(side: Side) -> bool:
    if isinstance(side, InvariantRel):
        return _mentions_acc(side.body)
    if isinstance(side, SeqInv):
        return _mentions_acc(side.inv.body)
    return False


def _subsets(items):
    items = list(items)
    for k in range(len(items) + 1):
        yield from itertools.combinations(items, k)


def _check_term(ob: Obligation, symtab, cfg: Config) -> Verdict:
    if isinstance(ob.rhs, (InvariantRel, SeqInv)):
        return _check_term_sweep(ob, symtab, cfg)
    witnesses = []
    for s in symtab.valuations():
        for tt, s2 in ground.final_instances(
            ob.rhs, s, symtab, cfg.trace_bound
        ):
            if not _pre_holds(ob.assume, s, tt, symtab):
                continue
            if not _lhs_term(ob.lhs, s, tt, s2, symtab):
                witnesses.append(
                    ((len(tt), _k(tt), str(s), str(s2)), (s, tt, s2))
                )
    if witnesses:
        s, tt, s2 = min(witnesses)[1]
        return Verdict(
            "refuted",
            cfg.bounds(),
            witness=_fmt_witness(s, tt, {"state_after": str(s2)}),
        )
    return Verdict("verified", cfg.bounds())


def _check_term_sweep(ob: Obligation, symtab, cfg: Config) -> Verdict:
    witnesses = []
    for s in symtab.valuations():
        for tt in _traces(symtab, cfg.trace_bound):
            if not _pre_holds(ob.assume, s, tt, symtab):
                continue
            for s2 in symtab.valuations():
                if _lhs_term(ob.rhs, s, tt, s2, symtab) and not _lhs_term(
                    ob.lhs, s, tt, s2, symtab
                ):
                    witnesses.append(
                        ((len(tt), _k(tt), str(s), str(s2)), (s, tt, s2))
                    )
    if witnesses:
        s, tt, s2 = min(witnesses)[1]
        return Verdict(
            "refuted",
            cfg.bounds(),
            witness=_fmt_witness(s, tt, {"state_after": str(s2)}),
        )
    return Verdict("verified", cfg.bounds())


def _combine(verdicts: list, cfg: Config, obligations=()) -> Verdict:
    for v in verdicts:
        if v.kind == "refuted":
            return Verdict(
                "refuted", cfg.bounds(), witness=v.witness,
                obligations=tuple(obligations),
            )
    for v in verdicts:
        if v.kind == "inconclusive":
            return Verdict(
                "inconclusive", cfg.bounds(), reason=v.reason,
                obligations=tuple(obligations),
            )
    return Verdict("verified", cfg.bounds(), obligations=tuple(obligations))


def refine_check(spec, impl: Contract, symtab, cfg: Config) -> Verdict:
    obs = refine_obligations(spec, impl)
    verdicts = [check_rrel_refine(ob, symtab, cfg) for ob in obs]
    return _combine(verdicts, cfg, obs)


# ---------------------------------------------------------------------------
# Deadlock freedom


def check_deadlock_free(c: Contract, symtab, cfg: Config) -> Verdict:
    """Every reachable quiescent observation accepts at least one event."""
    return refine_check(deadlock_free_spec(), c, symtab, cfg)


# ---------------------------------------------------------------------------
# The loop invariant rule


def check_invariant_loop(
    b: Expr,
    body: Contract,
    inv: tuple,
    symtab: SymbolTable,
    cfg: Config,
) -> Verdict:
    """Conditions under which ⦗I1|I2|I3⦘ is refined by the loop on `body`.

    1. the loop's calculated assumption is weaker than I1;
    2. one guarded body pause establishes I2, and a guarded body step
       preserves it;
    3. I3 holds on immediate exit, and a guarded body step preserves it.

    Conditions 2 and 3 are single-step (iteration-free) by design.
    """
    i1, i2, i3 = inv
    step = normalize(RSeq(RTest(b), body.post), symtab)
    res = star_wp(step, _guarded_pre(b, body.pre, symtab), symtab, cfg.wp_bound)
    obs = []
    verdicts = []
    if not res.converged:
        verdicts.append(
            Verdict(
                "inconclusive",
                cfg.bounds(),
                reason="loop assumption saturation did not converge",
            )
        )
    else:
        ob1 = Obligation(res.clauses, i1, "pre", "assumption weakening")
        obs.append(ob1)
        verdicts.append(check_rrel_refine(ob1, symtab, cfg))
    pause = normalize(RSeq(RTest(b), body.peri), symtab)
    ob2a = Obligation(i2, pause, "peri", "pause establishes invariant")
    ob2b = Obligation(
        i2, SeqInv(step, i2), "peri", "step preserves pause invariant"
    )
    ob3a = Obligation(
        i3,
        normalize(RTest(negate(b)), symtab),
        "post",
        "exit establishes invariant",
    )
    ob3b = Obligation(
        i3, SeqInv(step, i3), "post", "step preserves exit invariant"
    )
    for ob in (ob2a, ob2b, ob3a, ob3b):
        obs.append(ob)
        verdicts.append(check_rrel_refine(ob, symtab, cfg))
    return _combine(verdicts, cfg, obs)


def _guarded_pre(b: Expr, p: PreNF, symtab) -> PreNF:
    from .relalg import guard_pre

    return guard_pre(b, p, symtab)


# ---------------------------------------------------------------------------
# Assignment-prefix reduction


def assign_then_contract_reduction(
    s: Subst, spec, symtab: SymbolTable
) -> SpecTriple:
    """Distribute an initial assignment into a specification: composing the
    assignment before the contract applies its update as a substitution to
    all three components."""
    pre = spec.pre if isinstance(spec.pre, PreNF) else spec.pre
    pre = subst_pre(s, pre, symtab)
    return SpecTriple(
        pre,
        _subst_side(s, spec.peri, symtab),
        _subst_side(s, spec.post, symtab),
    )


def _subst_side(s: Subst, side, symtab):
    if isinstance(side, InvariantRel):
        return InvariantRel(side.kind, apply_subst(s, side.body))
    if isinstance(side, RTrue):
        return side
    return subst_rrel(s, side, symtab)


# ---------------------------------------------------------------------------
# Whole-program invariant checking (assign-prefix + loop shape)


def inv_check_program(
    tp: dsl.TypedProgram, i2_body: Expr, cfg: Config
) -> tuple:
    """Check a peri-invariant against `assignments ; while b do body`.

    Returns (verdict, reduced specification) where the reduced specification
    is the invariant contract with the leading assignments distributed in.
    """
    symtab = tp.symtab
    prefix, loop = _split_assign_while(tp.body)
    if loop is None:
        return (
            Verdict(
                "inconclusive",
                cfg.bounds(),
                reason="program is not of the shape assignments ; while",
            ),
            None,
        )
    body_contract = calculate(
        dsl.TypedProgram(symtab, loop.body), cfg.wp_bound
    )
    i2 = InvariantRel("peri", i2_body)
    i3 = TRUE_R
    verdict = check_invariant_loop(
        loop.cond, body_contract, (TRUE_PRE, i2, i3), symtab, cfg
    )
    spec = SpecTriple(TRUE_PRE, i2, TRUE_R)
    from .state import assignment_subst, compose_subst

    s = None
    for a in prefix:
        step = assignment_subst({a.var: a.expr}, symtab)
        s = step if s is None else compose_subst(s, step)
    reduced = (
        assign_then_contract_reduction(s, spec, symtab)
        if s is not None
        else spec
    )
    return verdict, reduced


def _split_assign_while(a: dsl.Action):
    """Split `x := e ; ... ; while b do body` into ([assigns], While)."""
    prefix = []
    node = a
    while isinstance(node, dsl.Seq):
        if not isinstance(node.first, dsl.Assign):
            return [], None
        prefix.append(node.first)
        node = node.second
    if isinstance(node, dsl.While):
        return prefix, node
    return [], None
