"""Finite-domain values, state valuations, expressions, and substitutions.

Every declared type has a finite carrier (bounded ints, bools, bounded-length
sequences), so conditions and relations can be decided by exhaustive
evaluation.  Evaluation is totalised: partial operations get defaults and
out-of-range writes saturate, so enumeration never faults.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Union

# Runtime value representation: bool must be tested before int (bool <: int).
Value = Union[int, bool, tuple, frozenset]

_clamp_events = 0


def note_clamp() -> None:
    global _clamp_events
    _clamp_events += 1


def clamp_count() -> int:
    return _clamp_events


def reset_clamp_count() -> None:
    global _clamp_events
    _clamp_events = 0


# ---------------------------------------------------------------------------
# Value types


@dataclass(frozen=True)
class IntType:
    lo: int
    hi: int

    def values(self) -> Iterator[int]:
        return iter(range(self.lo, self.hi + 1))

    def default(self) -> int:
        return self.clamp(0)

    def clamp(self, v: Value) -> int:
        if isinstance(v, bool):
            v = int(v)
        if not isinstance(v, int):
            note_clamp()
            return self.default()
        if v < self.lo:
            note_clamp()
            return self.lo
        if v > self.hi:
            note_clamp()
            return self.hi
        return v

    def __str__(self) -> str:
        return f"int[{self.lo}..{self.hi}]"


@dataclass(frozen=True)
class BoolType:
    def values(self) -> Iterator[bool]:
        return iter((False, True))

    def default(self) -> bool:
        return False

    def clamp(self, v: Value) -> bool:
        return bool(v)

    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class SeqType:
    elem: "ValueType"
    maxlen: int

    def values(self) -> Iterator[tuple]:
        for n in range(self.maxlen + 1):
            for combo in itertools.product(tuple(self.elem.values()), repeat=n):
                yield combo

    def default(self) -> tuple:
        return ()

    def clamp(self, v: Value) -> tuple:
        if not isinstance(v, tuple):
            note_clamp()
            return ()
        if len(v) > self.maxlen:
            note_clamp()
            v = v[: self.maxlen]
        return tuple(self.elem.clamp(x) for x in v)

    def __str__(self) -> str:
        return f"seq {self.elem} maxlen {self.maxlen}"


ValueType = Union[IntType, BoolType, SeqType]


def carrier_size(t: ValueType) -> int:
    if isinstance(t, IntType):
        return t.hi - t.lo + 1
    if isinstance(t, BoolType):
        return 2
    base = carrier_size(t.elem)
    return sum(base**n for n in range(t.maxlen + 1))


# ---------------------------------------------------------------------------
# Events and symbol tables


@dataclass(frozen=True)
class Event:
    chan: str
    data: Optional[Value] = None

    def __str__(self) -> str:
        if self.data is None:
            return self.chan
        return f"{self.chan}.{pp_value(self.data)}"


def event_key(e: Event) -> tuple:
    return (e.chan, str(e.data))


class SymbolTable:
    """Declared variables and channels with their finite carriers.

    Immutable by convention; valuation and alphabet enumerations are cached.
    """

    MAX_VALUATIONS = 500_000

    def __init__(self, variables: dict, channels: dict):
        self.variables = dict(variables)  # name -> ValueType
        self.channels = dict(channels)  # name -> ValueType | None (dataless)
        self._valuations: Optional[tuple] = None
        self._alphabet: Optional[tuple] = None

    def var_names(self) -> list:
        return sorted(self.variables)

    def valuations(self) -> tuple:
        if self._valuations is None:
            names = self.var_names()
            total = 1
            for n in names:
                total *= carrier_size(self.variables[n])
                if total > self.MAX_VALUATIONS:
                    raise RuntimeError("state space too large to enumerate")
            domains = [tuple(self.variables[n].values()) for n in names]
            self._valuations = tuple(
                Valuation(tuple(zip(names, combo)))
                for combo in itertools.product(*domains)
            )
        return self._valuations

    def alphabet(self) -> tuple:
        if self._alphabet is None:
            events = []
            for c in sorted(self.channels):
                t = self.channels[c]
                if t is None:
                    events.append(Event(c))
                else:
                    events.extend(Event(c, v) for v in t.values())
            self._alphabet = tuple(events)
        return self._alphabet

    def default_valuation(self) -> "Valuation":
        return Valuation(
            tuple((n, self.variables[n].default()) for n in self.var_names())
        )

    def ground_event(self, chan: str, data: Optional[Value]) -> Event:
        t = self.channels[chan]
        if t is None:
            return Event(chan)
        return Event(chan, t.clamp(data))


@dataclass(frozen=True)
class Valuation:
    """Total assignment of values to the declared variables (sorted by name)."""

    items: tuple

    def get(self, name: str) -> Value:
        for n, v in self.items:
            if n == name:
                return v
        raise KeyError(name)

    def set(self, name: str, value: Value, vtype: ValueType) -> "Valuation":
        clamped = vtype.clamp(value)
        return Valuation(
            tuple((n, clamped if n == name else v) for n, v in self.items)
        )

    def as_dict(self) -> dict:
        return dict(self.items)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{n}={pp_value(v)}" for n, v in self.items) + "}"


def valuation_of(mapping: dict) -> Valuation:
    return Valuation(tuple(sorted(mapping.items())))


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Primed:
    """Final-state variable x'; only meaningful in postcondition invariants."""

    name: str


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * ++ = != < <= and or
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    arg: "Expr"


@dataclass(frozen=True)
class Head:
    arg: "Expr"


@dataclass(frozen=True)
class Tail:
    arg: "Expr"


@dataclass(frozen=True)
class Len:
    arg: "Expr"


@dataclass(frozen=True)
class IfE:
    cond: "Expr"
    then: "Expr"
    other: "Expr"


@dataclass(frozen=True)
class SeqDisplay:
    """Sequence display <e1, ..., en> with non-literal elements."""

    elems: tuple


@dataclass(frozen=True)
class Clamp:
    """Saturation of a value into a declared carrier.

    Assignment right-hand sides are wrapped in a clamp to their target
    variable's type, so that composing substitutions symbolically agrees
    with stepwise state updates even at the carrier boundaries.
    """

    arg: "Expr"
    vtype: "ValueType"


@dataclass(frozen=True)
class Proj:
    """Data sequence of the events of one channel in the trace contribution."""

    chan: str


@dataclass(frozen=True)
class Acc:
    """The acceptance set at a quiescent observation (invariants only)."""


Expr = Union[
    Var, Primed, Lit, BinOp, Not, Head, Tail, Len, IfE, SeqDisplay, Clamp,
    Proj, Acc,
]

TRUE = Lit(True)
FALSE = Lit(False)


def eval_expr(
    e: Expr,
    val: Valuation,
    tt: Optional[tuple] = None,
    acc: Optional[frozenset] = None,
    primed: Optional[Valuation] = None,
) -> Value:
    """Totalised evaluation.

    head(<>) yields 0 (which doubles as false for bool elements), tail(<>)
    yields <>; arithmetic is unbounded here and saturates only when written
    back into a state or a ground event.
    """
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        return val.get(e.name)
    if isinstance(e, Primed):
        if primed is None:
            raise ValueError("primed variable outside a postcondition context")
        return primed.get(e.name)
    if isinstance(e, Proj):
        if tt is None:
            raise ValueError("trace projection without a ground trace")
        return tuple(ev.data for ev in tt if ev.chan == e.chan)
    if isinstance(e, Acc):
        if acc is None:
            raise ValueError("acceptance reference outside a quiescent context")
        return acc
    if isinstance(e, Not):
        return not eval_expr(e.arg, val, tt, acc, primed)
    if isinstance(e, Head):
        v = eval_expr(e.arg, val, tt, acc, primed)
        return v[0] if v else 0
    if isinstance(e, Tail):
        v = eval_expr(e.arg, val, tt, acc, primed)
        return v[1:] if v else ()
    if isinstance(e, Len):
        return len(eval_expr(e.arg, val, tt, acc, primed))
    if isinstance(e, IfE):
        if eval_expr(e.cond, val, tt, acc, primed):
            return eval_expr(e.then, val, tt, acc, primed)
        return eval_expr(e.other, val, tt, acc, primed)
    if isinstance(e, SeqDisplay):
        return tuple(eval_expr(x, val, tt, acc, primed) for x in e.elems)
    if isinstance(e, Clamp):
        return e.vtype.clamp(eval_expr(e.arg, val, tt, acc, primed))
    if isinstance(e, BinOp):
        op = e.op
        if op == "and":
            return bool(eval_expr(e.left, val, tt, acc, primed)) and bool(
                eval_expr(e.right, val, tt, acc, primed)
            )
        if op == "or":
            return bool(eval_expr(e.left, val, tt, acc, primed)) or bool(
                eval_expr(e.right, val, tt, acc, primed)
            )
        l = eval_expr(e.left, val, tt, acc, primed)
        r = eval_expr(e.right, val, tt, acc, primed)
        if op == "+":
            return l + r
        if op == "-":
            return l - r
        if op == "*":
            return l * r
        if op == "++":
            return tuple(l) + tuple(r)
        if op == "=":
            return l == r
        if op == "!=":
            return l != r
        if op == "<":
            return l < r
        if op == "<=":
            if isinstance(l, tuple) or isinstance(r, tuple):
                lt, rt = tuple(l), tuple(r)
                return lt == rt[: len(lt)]
            return l <= r
        raise ValueError(f"unknown operator {op!r}")
    raise TypeError(f"not an expression: {e!r}")


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, (Lit, Proj, Acc, Primed)):
        return frozenset()
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, (Not, Head, Tail, Len, Clamp)):
        return free_vars(e.arg)
    if isinstance(e, IfE):
        return free_vars(e.cond) | free_vars(e.then) | free_vars(e.other)
    if isinstance(e, SeqDisplay):
        out = frozenset()
        for x in e.elems:
            out |= free_vars(x)
        return out
    raise TypeError(f"not an expression: {e!r}")


def mentions_trace(e: Expr) -> bool:
    if isinstance(e, (Proj, Acc)):
        return True
    if isinstance(e, Primed):
        return True  # treated like trace data: blocks state-only enumeration
    if isinstance(e, BinOp):
        return mentions_trace(e.left) or mentions_trace(e.right)
    if isinstance(e, (Not, Head, Tail, Len, Clamp)):
        return mentions_trace(e.arg)
    if isinstance(e, IfE):
        return any(mentions_trace(x) for x in (e.cond, e.then, e.other))
    if isinstance(e, SeqDisplay):
        return any(mentions_trace(x) for x in e.elems)
    return False


def is_closed(e: Expr) -> bool:
    return not free_vars(e) and not mentions_trace(e)


_EMPTY_VAL = Valuation(())


def fold(e: Expr) -> Expr:
    """Constant folding; never changes evaluation results."""
    if isinstance(e, (Var, Lit, Proj, Acc, Primed)):
        return e
    if isinstance(e, Not):
        a = fold(e.arg)
        if isinstance(a, Lit):
            return Lit(not a.value)
        if isinstance(a, Not):
            return a.arg
        return Not(a)
    if isinstance(e, Head):
        a = fold(e.arg)
        if isinstance(a, Lit):
            return Lit(a.value[0] if a.value else 0)
        return Head(a)
    if isinstance(e, Tail):
        a = fold(e.arg)
        if isinstance(a, Lit):
            return Lit(a.value[1:] if a.value else ())
        return Tail(a)
    if isinstance(e, Len):
        a = fold(e.arg)
        if isinstance(a, Lit):
            return Lit(len(a.value))
        return Len(a)
    if isinstance(e, IfE):
        c = fold(e.cond)
        t = fold(e.then)
        o = fold(e.other)
        if isinstance(c, Lit):
            return t if c.value else o
        if t == o:
            return t
        return IfE(c, t, o)
    if isinstance(e, SeqDisplay):
        elems = tuple(fold(x) for x in e.elems)
        if all(isinstance(x, Lit) for x in elems):
            return Lit(tuple(x.value for x in elems))
        return SeqDisplay(elems)
    if isinstance(e, Clamp):
        a = fold(e.arg)
        if isinstance(a, Lit):
            return Lit(e.vtype.clamp(a.value))
        if isinstance(a, Clamp) and a.vtype == e.vtype:
            return a
        return Clamp(a, e.vtype)
    if isinstance(e, BinOp):
        l = fold(e.left)
        r = fold(e.right)
        if e.op == "and":
            if l == TRUE or l == r:
                return r
            if r == TRUE:
                return l
            if isinstance(l, Lit) and not l.value:
                return FALSE
            if isinstance(r, Lit) and not r.value:
                return FALSE
            return BinOp("and", l, r)
        if e.op == "or":
            if isinstance(l, Lit):
                return TRUE if l.value else r
            if isinstance(r, Lit):
                return TRUE if r.value else l
            if l == r:
                return l
            return BinOp("or", l, r)
        if isinstance(l, Lit) and isinstance(r, Lit):
            return Lit(eval_expr(BinOp(e.op, l, r), _EMPTY_VAL))
        if e.op == "++":
            if l == Lit(()):
                return r
            if r == Lit(()):
                return l
        return BinOp(e.op, l, r)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Substitutions


@dataclass(frozen=True)
class Subst:
    """Finite map from variable names to expressions; identity elsewhere."""

    entries: tuple  # sorted ((name, Expr), ...), identity entries omitted

    def get(self, name: str) -> Expr:
        for n, x in self.entries:
            if n == name:
                return x
        return Var(name)

    def domain(self) -> frozenset:
        return frozenset(n for n, _ in self.entries)

    def is_identity(self) -> bool:
        return not self.entries

    def __str__(self) -> str:
        if not self.entries:
            return "id"
        inner = ", ".join(f"{n} |-> {pp_expr(x)}" for n, x in self.entries)
        return "{" + inner + "}"


IDENTITY = Subst(())


def subst_of(mapping: dict) -> Subst:
    entries = []
    for n in sorted(mapping):
        x = fold(mapping[n])
        if x != Var(n):
            entries.append((n, x))
    return Subst(tuple(entries))


def apply_subst(s: Subst, e: Expr) -> Expr:
    """Simultaneous substitution of state variables, then constant folding.

    Trace projections and acceptance references are untouched: substitutions
    update state variables only.
    """
    if s.is_identity():
        return fold(e)

    def go(x: Expr) -> Expr:
        if isinstance(x, Var):
            return s.get(x.name)
        if isinstance(x, (Lit, Proj, Acc, Primed)):
            return x
        if isinstance(x, Not):
            return Not(go(x.arg))
        if isinstance(x, Head):
            return Head(go(x.arg))
        if isinstance(x, Tail):
            return Tail(go(x.arg))
        if isinstance(x, Len):
            return Len(go(x.arg))
        if isinstance(x, IfE):
            return IfE(go(x.cond), go(x.then), go(x.other))
        if isinstance(x, BinOp):
            return BinOp(x.op, go(x.left), go(x.right))
        if isinstance(x, SeqDisplay):
            return SeqDisplay(tuple(go(y) for y in x.elems))
        if isinstance(x, Clamp):
            return Clamp(go(x.arg), x.vtype)
        raise TypeError(f"not an expression: {x!r}")

    return fold(go(e))


def compose_subst(first: Subst, second: Subst) -> Subst:
    """The substitution applying `first` and then `second` (second o first)."""
    mapping = {}
    for n in first.domain() | second.domain():
        mapping[n] = apply_subst(first, second.get(n))
    return subst_of(mapping)


def apply_to_valuation(s: Subst, val: Valuation, symtab: SymbolTable) -> Valuation:
    items = []
    for n, _old in val.items:
        v = eval_expr(s.get(n), val)
        items.append((n, symtab.variables[n].clamp(v)))
    return Valuation(tuple(items))


def assignment_subst(mapping: dict, symtab: SymbolTable) -> Subst:
    """Substitution for an assignment: right-hand sides saturate into the
    target variable's carrier, so symbolic composition matches stepwise
    execution."""
    out = {}
    for n, e in mapping.items():
        e = fold(e)
        if e == Var(n):
            continue
        out[n] = Clamp(e, symtab.variables[n])
    return subst_of(out)


# ---------------------------------------------------------------------------
# Semantic helpers over finite domains


def conj(*conds: Expr) -> Expr:
    out: Expr = TRUE
    for c in conds:
        out = BinOp("and", out, c)
    return fold(out)


def disj(*conds: Expr) -> Expr:
    out: Expr = FALSE
    for c in conds:
        out = BinOp("or", out, c)
    return fold(out)


def negate(c: Expr) -> Expr:
    return fold(Not(c))


def cond_is_true(c: Expr, symtab: SymbolTable) -> bool:
    c = fold(c)
    if c == TRUE:
        return True
    if isinstance(c, Lit):
        return bool(c.value)
    return all(eval_expr(c, v) for v in symtab.valuations())


def cond_is_false(c: Expr, symtab: SymbolTable) -> bool:
    c = fold(c)
    if c == FALSE:
        return True
    if isinstance(c, Lit):
        return not c.value
    return not any(eval_expr(c, v) for v in symtab.valuations())


def exprs_equiv(a: Expr, b: Expr, symtab: SymbolTable) -> bool:
    """Semantic equality on the finite domain, with a syntactic fast path."""
    a, b = fold(a), fold(b)
    if a == b:
        return True
    if mentions_trace(a) or mentions_trace(b):
        return False  # trace-dependent terms compare syntactically only
    return all(
        eval_expr(a, v) == eval_expr(b, v) for v in symtab.valuations()
    )


def cond_implies(a: Expr, b: Expr, symtab: SymbolTable) -> bool:
    a, b = fold(a), fold(b)
    if a == b or b == TRUE or a == FALSE:
        return True
    return all(
        eval_expr(b, v) for v in symtab.valuations() if eval_expr(a, v)
    )


def substs_equiv(s1: Subst, s2: Subst, symtab: SymbolTable) -> bool:
    if s1 == s2:
        return True
    for n in s1.domain() | s2.domain():
        if not exprs_equiv(s1.get(n), s2.get(n), symtab):
            return False
    return True


# ---------------------------------------------------------------------------
# Pretty-printing (parseable by the DSL expression grammar)

_PREC = {
    "or": 1,
    "and": 2,
    "=": 4,
    "!=": 4,
    "<": 4,
    "<=": 4,
    "++": 5,
    "+": 6,
    "-": 6,
    "*": 7,
}


def pp_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return "<" + ", ".join(pp_value(x) for x in v) + ">"
    if isinstance(v, frozenset):
        return "{" + ", ".join(sorted(str(x) for x in v)) + "}"
    return str(v)


def pp_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Primed):
        return e.name + "'"
    if isinstance(e, Lit):
        return pp_value(e.value)
    if isinstance(e, Proj):
        return f"proj(tt, {e.chan})"
    if isinstance(e, Acc):
        return "acc"
    if isinstance(e, Head):
        return f"head({pp_expr(e.arg)})"
    if isinstance(e, Tail):
        return f"tail({pp_expr(e.arg)})"
    if isinstance(e, Len):
        return f"#{pp_expr(e.arg, 8)}"
    if isinstance(e, Not):
        return f"not {pp_expr(e.arg, 3)}"
    if isinstance(e, SeqDisplay):
        return "<" + ", ".join(pp_expr(x) for x in e.elems) + ">"
    if isinstance(e, Clamp):
        return f"clamp({pp_expr(e.arg)})"
    if isinstance(e, IfE):
        s = (
            f"if {pp_expr(e.cond)} then {pp_expr(e.then)} "
            f"else {pp_expr(e.other)}"
        )
        return f"({s})"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        # comparisons are non-associative; others associate to the left
        lp, rp = p, p + 1
        if e.op in ("=", "!=", "<", "<="):
            lp = p + 1
        s = f"{pp_expr(e.left, lp)} {e.op} {pp_expr(e.right, rp)}"
        return f"({s})" if p < prec else s
    raise TypeError(f"not an expression: {e!r}")
