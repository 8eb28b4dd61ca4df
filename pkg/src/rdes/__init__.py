"""Contract calculator and verifier for reactive programs.

Programs in a small reactive DSL are translated into contracts
⦗precondition | pericondition | postcondition⦘ over reactive relations;
refinement, deadlock-freedom, and loop-invariant obligations are discharged
by finite-domain enumeration and cross-checked against an independent
bounded enumerator.
"""

from .contracts import Contract, calculate
from .dsl import load_program, parse, parse_invariant, typecheck
from .oracle import cross_check, enumerate_program
from .verify import (
    Config,
    Verdict,
    check_deadlock_free,
    check_invariant_loop,
    check_rrel_refine,
    refine_check,
    refine_obligations,
)

__all__ = [
    "Config",
    "Contract",
    "Verdict",
    "calculate",
    "check_deadlock_free",
    "check_invariant_loop",
    "check_rrel_refine",
    "cross_check",
    "enumerate_program",
    "load_program",
    "parse",
    "parse_invariant",
    "refine_check",
    "refine_obligations",
    "typecheck",
]
