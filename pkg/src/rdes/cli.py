"""Command-line front end.

Commands
    calc FILE              calculate and print a program's contract
    refine SPEC IMPL       discharge the refinement obligations
    dlf FILE               deadlock-freedom check
    inv-check FILE         loop-invariant check (requires --invariant)
    oracle FILE            dump the bounded enumerator's observations
    crosscheck FILE|--random N   compare calculus against the enumerator
    laws                   run the relational and iteration law suites

Exit codes: 0 verified/ok, 1 refuted/differences, 2 inconclusive or error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import contracts, dsl, laws, oracle, randgen
from .verify import (
    Config,
    InvariantRel,
    SpecTriple,
    check_deadlock_free,
    deadlock_free_spec,
    inv_check_program,
    refine_check,
)
from .relalg import TRUE_PRE, TRUE_R
from .state import eval_expr


def _add_bounds(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trace-bound", type=int, default=4)
    p.add_argument("--star-bound", type=int, default=3)
    p.add_argument("--wp-bound", type=int, default=16)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def _config(args) -> Config:
    for name in ("trace_bound", "star_bound", "wp_bound"):
        if getattr(args, name) < 1:
            raise SystemExit(f"--{name.replace('_', '-')} must be >= 1")
    return Config(
        trace_bound=args.trace_bound,
        star_bound=args.star_bound,
        wp_bound=args.wp_bound,
        jobs=args.jobs,
        seed=args.seed,
        fmt=args.format,
    )


def _load(path: str) -> dsl.TypedProgram:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            source = fh.read()
        return dsl.load_program(source)
    except FileNotFoundError:
        print(f"error: no such file: {path}", file=sys.stderr)
        raise SystemExit(2)
    except (
        dsl.ParseError,
        dsl.TypeMismatchError,
        dsl.DuplicateNameError,
        dsl.UnboundNameError,
        dsl.InfiniteDomainError,
    ) as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _calculate(tp: dsl.TypedProgram, cfg: Config) -> contracts.Contract:
    try:
        return contracts.calculate(tp, cfg.wp_bound)
    except contracts.NotProductiveError as exc:
        print(f"error: NotProductive: {exc}", file=sys.stderr)
        raise SystemExit(2)
    except Exception as exc:  # WpNotConverged, NormalizationIncomplete
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _emit_verdict(verdict, cfg: Config) -> int:
    if cfg.fmt == "json":
        print(json.dumps(verdict.to_json(), indent=2))
    else:
        print(f"verdict: {verdict.kind}")
        print(f"bounds: {verdict.bounds}")
        if verdict.witness:
            print(f"witness: {verdict.witness}")
        if verdict.reason:
            print(f"reason: {verdict.reason}")
    return verdict.exit_code()


def cmd_calc(args) -> int:
    cfg = _config(args)
    tp = _load(args.file)
    c = _calculate(tp, cfg)
    if cfg.fmt == "json":
        print(json.dumps(c.to_json(), indent=2))
    else:
        print(c)
    return 0


def _spec_for(args, cfg: Config, symtab):
    """Resolve the specification side of a refinement."""
    if args.peri or args.post:
        peri = TRUE_R
        post = TRUE_R
        if args.peri:
            peri = InvariantRel(
                "peri", dsl.parse_invariant(args.peri, symtab)
            )
        if args.post:
            post = InvariantRel(
                "post", dsl.parse_invariant(args.post, symtab)
            )
        return SpecTriple(TRUE_PRE, peri, post)
    if args.spec == "dlf":
        return deadlock_free_spec()
    spec_tp = _load(args.spec)
    return _calculate(spec_tp, cfg)


def cmd_refine(args) -> int:
    cfg = _config(args)
    tp = _load(args.impl)
    impl = _calculate(tp, cfg)
    if args.invariant:
        return _refine_via_invariant(args, cfg, tp)
    spec = _spec_for(args, cfg, tp.symtab)
    verdict = refine_check(spec, impl, tp.symtab, cfg)
    return _emit_verdict(verdict, cfg)


def _refine_via_invariant(args, cfg: Config, tp: dsl.TypedProgram) -> int:
    """Prove an invariant-style spec of a loop program: discharge the loop
    conditions for the supplied invariant, distribute the leading
    assignments in, and check the reduced invariant implies the spec."""
    symtab = tp.symtab
    inv_body = dsl.parse_invariant(args.invariant, symtab)
    verdict, reduced = inv_check_program(tp, inv_body, cfg)
    if not verdict.verified:
        return _emit_verdict(verdict, cfg)
    if args.peri:
        spec_body = dsl.parse_invariant(args.peri, symtab)
        counter = _implication_gap(
            reduced.peri.body, spec_body, symtab, cfg
        )
        if counter is not None:
            from .verify import Verdict

            return _emit_verdict(
                Verdict("refuted", cfg.bounds(), witness=counter), cfg
            )
    return _emit_verdict(verdict, cfg)


def _implication_gap(stronger, weaker, symtab, cfg: Config):
    """A ground (state, trace) where the reduced invariant holds but the
    spec does not; None when the implication holds within bounds."""
    import itertools

    alphabet = symtab.alphabet()
    for s in symtab.valuations():
        for n in range(cfg.trace_bound + 1):
            for tt in itertools.product(alphabet, repeat=n):
                if eval_expr(stronger, s, tt=tt) and not eval_expr(
                    weaker, s, tt=tt
                ):
                    return {
                        "state": str(s),
                        "trace": "<" + ", ".join(map(str, tt)) + ">",
                    }
    return None


def cmd_dlf(args) -> int:
    cfg = _config(args)
    tp = _load(args.file)
    c = _calculate(tp, cfg)
    verdict = check_deadlock_free(c, tp.symtab, cfg)
    return _emit_verdict(verdict, cfg)


def cmd_inv_check(args) -> int:
    cfg = _config(args)
    tp = _load(args.file)
    inv_body = dsl.parse_invariant(args.invariant, tp.symtab)
    verdict, reduced = inv_check_program(tp, inv_body, cfg)
    code = _emit_verdict(verdict, cfg)
    if reduced is not None and cfg.fmt == "text":
        print(f"reduced spec pericondition: {reduced.peri}")
    return code


def cmd_oracle(args) -> int:
    cfg = _config(args)
    tp = _load(args.file)
    dump = oracle.observations_json(tp, cfg)
    text = json.dumps(dump, indent=2)
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.emit}")
    else:
        print(text)
    return 0


def _crosscheck_one(tp: dsl.TypedProgram, cfg: Config):
    c = contracts.calculate(tp, cfg.wp_bound)
    return oracle.cross_check(tp, c, cfg)


def cmd_crosscheck(args) -> int:
    cfg = _config(args)
    reports = []
    if args.random:
        rng = randgen.rng_for(cfg.seed)
        programs = []
        for _ in range(args.random):
            if args.loops:
                programs.append(randgen.random_loop_program(rng))
            else:
                programs.append(randgen.random_program(rng))
        if cfg.jobs > 1:
            import concurrent.futures as cf

            with cf.ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                reports = list(
                    pool.map(_crosscheck_one, programs, [cfg] * len(programs))
                )
        else:
            reports = [_crosscheck_one(tp, cfg) for tp in programs]
    else:
        if not args.file:
            print("error: give a file or --random N", file=sys.stderr)
            return 2
        tp = _load(args.file)
        c = _calculate(tp, cfg)
        reports = [oracle.cross_check(tp, c, cfg)]
    diffs = [d for r in reports for d in r["diffs"]]
    summary = {
        "programs": len(reports),
        "differences": len(diffs),
        "diffs": diffs[:50],
    }
    if cfg.fmt == "json":
        print(json.dumps(summary, indent=2))
    else:
        print(f"programs checked: {summary['programs']}")
        print(f"differences: {summary['differences']}")
        for d in summary["diffs"][:10]:
            print(f"  {d}")
    return 0 if not diffs else 1


def cmd_laws(args) -> int:
    cfg = _config(args)
    rel = laws.run_law_suite(seed=cfg.seed, per_law=args.per_law)
    ka = laws.run_ka_suite(
        seed=cfg.seed, terms=args.terms, depth=args.depth
    )
    summary = {
        "relational": {
            "instances": rel["instances"],
            "failures": rel["failures"][:20],
        },
        "iteration": {
            "terms": ka["terms"],
            "failures": ka["failures"][:20],
        },
        "ok": rel["ok"] and ka["ok"],
    }
    if cfg.fmt == "json":
        print(json.dumps(summary, indent=2, default=str))
    else:
        print(
            f"relational laws: {rel['instances']} instances, "
            f"{len(rel['failures'])} failures"
        )
        print(
            f"iteration laws: {ka['terms']} terms, "
            f"{len(ka['failures'])} failures"
        )
        for f in (rel["failures"] + ka["failures"])[:10]:
            print(f"  {f}")
    return 0 if summary["ok"] else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rdes",
        description="Contract calculator and verifier for reactive programs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calc", help="calculate a program's contract")
    p.add_argument("file")
    _add_bounds(p)
    p.set_defaults(func=cmd_calc)

    p = sub.add_parser("refine", help="check spec ⊑ impl")
    p.add_argument("spec", nargs="?", default=None,
                   help="spec program file, or 'dlf'")
    p.add_argument("impl")
    p.add_argument("--peri", help="pericondition invariant of the spec")
    p.add_argument("--post", help="postcondition invariant of the spec")
    p.add_argument("--invariant", help="loop invariant for while programs")
    _add_bounds(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("dlf", help="deadlock-freedom check")
    p.add_argument("file")
    _add_bounds(p)
    p.set_defaults(func=cmd_dlf)

    p = sub.add_parser("inv-check", help="loop invariant check")
    p.add_argument("file")
    p.add_argument("--invariant", required=True)
    _add_bounds(p)
    p.set_defaults(func=cmd_inv_check)

    p = sub.add_parser("oracle", help="dump enumerated observations")
    p.add_argument("file")
    p.add_argument("--emit", help="write observations JSON to a file")
    _add_bounds(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("crosscheck", help="calculus vs enumerator")
    p.add_argument("file", nargs="?", default=None)
    p.add_argument("--random", type=int, default=0, metavar="N")
    p.add_argument("--loops", action="store_true",
                   help="generate loop programs instead of star-free ones")
    _add_bounds(p)
    p.set_defaults(func=cmd_crosscheck)

    p = sub.add_parser("laws", help="run the law suites")
    p.add_argument("--per-law", type=int, default=50)
    p.add_argument("--terms", type=int, default=200)
    p.add_argument("--depth", type=int, default=3)
    _add_bounds(p)
    p.set_defaults(func=cmd_laws)

    args = parser.parse_args(argv)
    if args.command == "refine" and args.spec is None and not (
        args.peri or args.post
    ):
        parser.error("refine needs a spec file, 'dlf', or --peri/--post")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
