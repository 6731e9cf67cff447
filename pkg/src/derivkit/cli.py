"""Command line front end.

Exit codes: 0 when every checked theory is accepted, 1 when any theory
fails its symbolic or numeric check, 2 for usage and input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

from .errors import DerivkitError, DerivSyntaxError
from .formula import DivergesLeftAt, Theory
from .kernel import (CheckResult, LemmaEntry, LemmaPool, NUMERIC_CERTIFIED,
                     check_theory)
from .numcheck import NumericReport, SamplePlan, divergence_table, run_suite
from .parser import parse_theories
from .theories import build_pool, dependency_order, registry

Outcome = Tuple[Theory, CheckResult, Optional[NumericReport], int]


def _plan(args) -> SamplePlan:
    return SamplePlan(seed=args.seed, count=args.samples,
                      series_cutoff=args.series_cutoff, rel_tol=args.tol)


def _run_numeric(theory: Theory, plan: SamplePlan) -> Optional[NumericReport]:
    try:
        return run_suite(theory, plan)
    except DerivkitError as e:
        return NumericReport(plan.seed, 0, float("inf"), False,
                             f"{type(e).__name__}: {e}")


def _outcome(theory: Theory, pool: LemmaPool, plan: SamplePlan,
             seed: int, res: Optional[CheckResult] = None) -> Outcome:
    t0 = time.perf_counter()
    if res is None:
        res = check_theory(theory, pool, seed=seed)
    numeric = _run_numeric(theory, plan) if res.accepted else None
    ms = int((time.perf_counter() - t0) * 1000)
    return theory, res, numeric, ms


def _verdict(res: CheckResult, numeric: Optional[NumericReport]) -> bool:
    return res.accepted and (numeric is None or numeric.passed)


def _to_json(out: Outcome) -> dict:
    theory, res, numeric, ms = out
    d = {
        "theory": theory.name,
        "verdict": "accepted" if _verdict(res, numeric) else "failed",
        "soundness": res.soundness,
    }
    if res.failure is not None:
        step, reason = res.failure
        d["failure"] = {"step": step if step is not None else -1, "reason": reason}
    elif numeric is not None and not numeric.passed:
        d["failure"] = {"step": -1, "reason": f"numeric: {numeric.label}"}
    d["steps"] = [{"step": r.step, "goal_after": r.goal_after,
                   "obligations": list(r.obligations)} for r in res.steps]
    if numeric is not None:
        d["numeric"] = {"seed": numeric.seed, "samples": numeric.samples,
                        "worst_residual": numeric.worst_residual}
    d["ms"] = ms
    return d


def _print_human(out: Outcome, plan: SamplePlan) -> None:
    theory, res, numeric, ms = out
    if _verdict(res, numeric):
        kind = "NumericCertified" if res.soundness == NUMERIC_CERTIFIED else "Symbolic"
        print(f"{theory.name}: Accepted ({kind})  [{ms} ms]")
        if res.soundness == NUMERIC_CERTIFIED and isinstance(theory.goal, DivergesLeftAt):
            for j, v in enumerate(divergence_table(theory, plan), start=1):
                print(f"  j={j}: {v:.6e}")
    elif res.failure is not None:
        step, reason = res.failure
        where = f" at step {step}" if step is not None else ""
        print(f"{theory.name}: Failed ({reason}{where})  [{ms} ms]")
    else:
        print(f"{theory.name}: Failed (numeric: {numeric.label}, "
              f"worst residual {numeric.worst_residual:.3e})  [{ms} ms]")


def _emit(outcomes: List[Outcome], args) -> int:
    plan = _plan(args)
    if args.json:
        print(json.dumps([_to_json(o) for o in outcomes], indent=2))
    else:
        for o in outcomes:
            _print_human(o, plan)
    return 0 if all(_verdict(r, n) for _, r, n, _ in outcomes) else 1


def _load_file(path: str) -> List[Theory]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_theories(fh.read())


def _check_batch(theories: List[Theory], base_pool: LemmaPool,
                 plan: SamplePlan, seed: int) -> List[Outcome]:
    # theories within one file see their predecessors as lemmas
    pool = dict(base_pool)
    out = []
    for th in theories:
        oc = _outcome(th, pool, plan, seed)
        pool[th.name] = LemmaEntry(th, oc[1].accepted)
        out.append(oc)
    return out


def cmd_check(args) -> int:
    plan = _plan(args)
    try:
        batches = [_load_file(p) for p in args.paths]
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DerivSyntaxError as e:
        print(f"syntax error: {e}", file=sys.stderr)
        return 2
    except DerivkitError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return 2
    base_pool, _ = build_pool(args.seed)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as ex:
            futs = [ex.submit(_check_batch, b, base_pool, plan, args.seed)
                    for b in batches]
            per_file = [f.result() for f in futs]
    else:
        per_file = [_check_batch(b, base_pool, plan, args.seed)
                    for b in batches]
    return _emit([o for chunk in per_file for o in chunk], args)


def cmd_builtin(args) -> int:
    plan = _plan(args)
    known = {e.name for e in registry()}
    if not args.all and args.name not in known:
        print(f"error: no builtin theory named {args.name!r}", file=sys.stderr)
        return 2
    pool, results = build_pool(args.seed)
    if args.all:
        names = [e.name for e in dependency_order(registry())]
    else:
        names = [args.name]
    outcomes = []
    for n in names:
        res = results[n]
        outcomes.append(_outcome(pool[n].theory, pool, plan, args.seed, res=res))
    return _emit(outcomes, args)


def cmd_list(args) -> int:
    for e in registry():
        parts = [e.name]
        if e.depends_on:
            parts.append("depends: " + ", ".join(e.depends_on))
        if e.reconstructed:
            parts.append("[reconstructed]")
        parts.append(e.citation)
        print("  ".join(parts))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="derivkit",
                                description="check derivation scripts")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--json", action="store_true",
                        help="emit a JSON report instead of text")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--samples", type=int, default=100)
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--series-cutoff", type=int, default=2000,
                        dest="series_cutoff")

    pc = sub.add_parser("check", help="check theory script files")
    pc.add_argument("paths", nargs="+", metavar="PATH")
    pc.add_argument("--jobs", type=int, default=1,
                    help="check files concurrently; output keeps input order")
    common(pc)
    pc.set_defaults(fn=cmd_check)

    pb = sub.add_parser("builtin", help="check builtin theories")
    group = pb.add_mutually_exclusive_group(required=True)
    group.add_argument("--all", action="store_true")
    group.add_argument("name", nargs="?")
    common(pb)
    pb.set_defaults(fn=cmd_builtin)

    pl = sub.add_parser("list", help="list builtin theories")
    pl.set_defaults(fn=cmd_list)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "samples", 1) < 1:
        parser.error("--samples must be at least 1")
    if getattr(args, "series_cutoff", 1) < 1:
        parser.error("--series-cutoff must be at least 1")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
