"""Command-line interface.

Commands:
  check <rulefile...>            well-formedness verdict per rule
  rewrite [opts] [termfile|-]    normalize a term, print the result
  bench <family> [opts]          run timed sweeps, write CSV
  analyze-bounds [opts] [file|-] interval analysis + clip insertion

Exit codes: 0 success, 1 verification or well-formedness failure,
2 usage or parse errors.  RF_SEED fixes all randomized sampling.
"""

from __future__ import annotations

import argparse
import os
import random
import sys

from .bench import ENGINES, FAMILIES, eq_nil_impl, run_family, write_csv, EQ_NIL_SYMBOL
from .bounds import NonStraightlineInput, analyze_and_clip, parse_bounds_flag
from .core import EvalError, LetLiftError, denote, values_equal
from .engine import EngineConfig, rewrite_top
from .naive import rewrite_exhaustive, trace_cost
from .randgen import opaque_impl, random_valuation
from .rules import RuleSet, load_rules
from .textio import ParseError, SymTable, parse_term_text, print_term


def _seed() -> int:
    return int(os.environ.get("RF_SEED", "0"))


def _load_rulesets(paths: list[str]) -> tuple[RuleSet | None, SymTable]:
    symtab = SymTable()
    rules = []
    for p in paths:
        rl, symtab = load_rules(p, symtab)
        rules.extend(rl)
    for i, r in enumerate(rules):
        r.priority = i
    if not rules:
        return None, symtab
    return RuleSet(rules, symbols=dict(symtab.symbols)), symtab


def _read_term(path: str, symtab: SymTable):
    text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    return parse_term_text(text, symtab)


def cmd_check(args) -> int:
    from .patterns import check_rule_wf

    status = 0
    for path in args.rules:
        rl, _ = load_rules(path)
        for r in rl:
            errs = check_rule_wf(r)
            if errs:
                status = 1
                for e in errs:
                    print(f"FAIL {r.name}: {e}")
            else:
                print(f"ok   {r.name}")
    return status


def _impls_for(symtab: SymTable, seed: int):
    impls = {}
    for name, ty in symtab.symbols.items():
        if name == EQ_NIL_SYMBOL:
            impls[name] = eq_nil_impl()
        else:
            impls[name] = opaque_impl(name, ty, seed)
    return impls


def cmd_rewrite(args) -> int:
    ruleset, symtab = _load_rulesets(args.rules)
    term, free = _read_term(args.term, symtab)
    names = {vid: n for n, (vid, _) in free.items()}
    cfg = EngineConfig(
        fuel=args.fuel,
        budget=args.budget,
        inline_constants=not args.no_inline_constants,
        inline_vars=not args.no_inline_vars,
        name_cons_cells=not args.no_name_cons_cells,
    )
    if args.engine == "nbe":
        out, stats = rewrite_top(term, ruleset, cfg)
        if args.stats:
            print(stats.as_text(), file=sys.stderr)
    else:
        order = "topdown" if args.engine == "naive-topdown" else "bottomup"
        out, trace = rewrite_exhaustive(term, ruleset, order, max_steps=args.budget)
        if args.trace:
            for s in trace:
                path = ".".join(map(str, s.path)) or "root"
                print(f"step {s.rule} at {path} (goal size {s.goal_size})", file=sys.stderr)
        if args.stats:
            cost = trace_cost(trace)
            print(
                f"trace_steps={cost['steps']}\ntrace_goal_size={cost['total_goal_size']}",
                file=sys.stderr,
            )
    print(print_term(out, names))
    if args.verify:
        rng = random.Random(_seed())
        impls = _impls_for(symtab, _seed())
        bad = None
        for i in range(args.verify_samples):
            rho = random_valuation({vid: t for _, (vid, t) in free.items()}, rng)
            try:
                a = denote(term, rho, impls)
                b = denote(out, rho, impls)
            except EvalError as exc:
                bad = f"evaluation fault under sampled valuation: {exc}"
                break
            if not values_equal(a, b):
                bad = f"denotation mismatch on sample {i}"
                break
        if bad is not None:
            print(f"verify: FAIL ({bad})", file=sys.stderr)
            return 1
        print(f"verify: ok ({args.verify_samples} samples agree)", file=sys.stderr)
    return 0


def _parse_grid(spec: str) -> list[int]:
    if "," in spec:
        return [int(x) for x in spec.split(",")]
    if ".." in spec:
        lo, rest = spec.split("..", 1)
        step = 1
        if ":" in rest:
            hi, step_s = rest.split(":", 1)
            step = int(step_s)
        else:
            hi = rest
        return list(range(int(lo), int(hi) + 1, step))
    return [int(spec)]


def cmd_bench(args) -> int:
    engines = args.engines.split(",")
    for e in engines:
        if e not in ENGINES:
            print(f"unknown engine {e!r}; choose from {', '.join(ENGINES)}", file=sys.stderr)
            return 2
    ns = _parse_grid(args.n)
    ms = _parse_grid(args.m) if args.m else [0]
    if args.family == "underlets_plus0":
        grid = [(n, 0) for n in ns]
    else:
        grid = [(n, m) for n in ns for m in ms]
    records = []
    for engine in engines:
        records.extend(
            run_family(
                args.family,
                engine,
                grid,
                repetitions=args.reps,
                seed=_seed(),
                app_budget=args.budget,
                time_budget_s=args.time_budget,
            )
        )
    write_csv(args.out, records)
    bad = [r for r in records if r.status != "ok"]
    for r in bad:
        print(f"cell {r.engine} n={r.n} m={r.m}: {r.status}", file=sys.stderr)
    print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)
    return 1 if any(r.status.startswith("failed-verify") for r in bad) else 0


def cmd_analyze_bounds(args) -> int:
    symtab = SymTable()
    term, free = _read_term(args.term, symtab)
    names = {vid: n for n, (vid, _) in free.items()}
    env = {}
    for spec in args.bounds:
        try:
            name, iv = parse_bounds_flag(spec)
        except LetLiftError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return 2
        if name not in free:
            print(f"bounds given for unknown variable {name!r}", file=sys.stderr)
            return 2
        env[free[name][0]] = iv
    try:
        out = analyze_and_clip(term, env)
    except NonStraightlineInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(print_term(out, names))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="letlift", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="check rule files for well-formedness")
    c.add_argument("rules", nargs="+", help="rule files or builtin library names")
    c.set_defaults(fn=cmd_check)

    r = sub.add_parser("rewrite", help="normalize a term")
    r.add_argument("term", nargs="?", default="-", help="term file, or - for stdin")
    r.add_argument("--rules", action="append", default=[],
                   help="rule file or builtin library (std, fold, map, bounds); repeatable")
    r.add_argument("--engine", choices=ENGINES, default="nbe")
    r.add_argument("--fuel", type=int, default=256)
    r.add_argument("--budget", type=int, default=10_000_000)
    r.add_argument("--no-inline-constants", action="store_true")
    r.add_argument("--no-inline-vars", action="store_true")
    r.add_argument("--no-name-cons-cells", action="store_true")
    r.add_argument("--stats", action="store_true", help="print engine statistics to stderr")
    r.add_argument("--trace", action="store_true", help="print naive-engine steps to stderr")
    r.add_argument("--verify", action="store_true",
                   help="check the result against the reference interpreter on samples")
    r.add_argument("--verify-samples", type=int, default=20)
    r.set_defaults(fn=cmd_rewrite)

    b = sub.add_parser("bench", help="run a benchmark family, write CSV")
    b.add_argument("family", choices=FAMILIES)
    b.add_argument("--engines", default="nbe")
    b.add_argument("--n", required=True, help="grid: lo..hi[:step] or comma list")
    b.add_argument("--m", default="", help="grid for m (ignored for underlets_plus0)")
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--budget", type=int, default=10_000_000)
    b.add_argument("--time-budget", type=float, default=120.0)
    b.add_argument("--out", default="bench.csv")
    b.set_defaults(fn=cmd_bench)

    a = sub.add_parser("analyze-bounds", help="interval analysis with clip insertion")
    a.add_argument("term", nargs="?", default="-")
    a.add_argument("--bounds", action="append", default=[], metavar="VAR=LO..HI",
                   help="input interval (hi exclusive); repeatable")
    a.set_defaults(fn=cmd_analyze_bounds)
    return ap


def main(argv=None) -> int:
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except LetLiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
