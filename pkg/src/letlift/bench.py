"""Microbenchmark families, timed cross-engine runs, scaling fits, CSV.

Three families, each parameterized and paired with an independently
constructed expected normal form:

* plus0tree(n, m): a balanced +-tree of 2^n leaves, each leaf a free
  variable under m useless additions of zero.  Normal form: the same tree
  with bare-variable leaves.
* underlets_plus0(n): a chain of n let binders, each adding zero to the
  previous one.  Normal form: the free variable itself.
* liftlets_map(n, m): m rounds of an element-doubling map (expressed with
  the list/nat recursors) over an n-element list; each round binds one let
  per element.  Normal form: n*m let bindings over an n-element list.
  With wrap_goal=True the term is wrapped in an opaque goal predicate
  (eq_nil), modeling rewriting inside a goal equation, which is what makes
  the baseline lift every binding out of the goal as well.

Every timed run is verified (expected normal form and denotation oracle)
before its time is admitted.
"""

from __future__ import annotations

import csv
import math
import random
import time
from dataclasses import dataclass, field
from typing import Optional

from . import core
from .core import (
    BOOL,
    INT,
    Expr,
    ListT,
    Ty,
    VBool,
    VInt,
    Value,
    alpha_eq,
    app,
    apps,
    denote,
    fresh_var,
    int_add,
    lam,
    let_in,
    lit,
    ref,
    term_stats,
    values_equal,
    var,
)
from .engine import BudgetExhausted, EngineConfig, FuelExhausted, rewrite_top
from .naive import StepBudgetExhausted, count_steps, rewrite_exhaustive, trace_cost
from .rules import RuleSet, add_zero_rule, map_rules

EQ_NIL_SYMBOL = "eq_nil"


def eq_nil_ident():
    return core.opaque(EQ_NIL_SYMBOL, core.Arrow(ListT(INT), BOOL))


def eq_nil_impl() -> Value:
    return core.VFun(lambda l: VBool(len(l.items) == 0))


@dataclass
class GenTerm:
    expr: Expr
    free: dict[str, tuple[int, Ty]]
    expected_nf: Optional[Expr]


# ---------------------------------------------------------------------------
# Generators


def gen_plus0tree(n: int, m: int) -> GenTerm:
    """2^n copies of (x + 0 + ... + 0) with m zeros, joined by +."""
    if n < 0 or m < 0:
        raise ValueError("n, m must be >= 0")
    x = fresh_var()

    def leaf() -> Expr:
        e: Expr = var(x, INT)
        for _ in range(m):
            e = int_add(e, lit(0))
        return e

    level = [leaf() for _ in range(2**n)]
    exp_level = [var(x, INT) for _ in range(2**n)]
    while len(level) > 1:
        level = [int_add(level[i], level[i + 1]) for i in range(0, len(level), 2)]
        exp_level = [int_add(exp_level[i], exp_level[i + 1]) for i in range(0, len(exp_level), 2)]
    return GenTerm(level[0], {"x": (x, INT)}, exp_level[0])


def gen_underlets_plus0(n: int) -> GenTerm:
    """let v1 = x+0 in let v2 = v1+0 in ... vn; normal form x."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = fresh_var()
    vids = [fresh_var() for _ in range(n)]
    body: Expr = var(vids[-1], INT)
    for i in reversed(range(n)):
        prev = var(x, INT) if i == 0 else var(vids[i - 1], INT)
        body = let_in(vids[i], int_add(prev, lit(0)), body)
    return GenTerm(body, {"x": (x, INT)}, var(x, INT))


def _map_dbl_case() -> Expr:
    """The doubling step for list_rect: \\h t rec. let y = h+h in y :: rec."""
    il = ListT(INT)
    h, t, rec, y = fresh_var(), fresh_var(), fresh_var(), fresh_var()
    body = let_in(
        y,
        int_add(var(h, INT), var(h, INT)),
        apps(ref(core.cons(INT)), var(y, INT), var(rec, il)),
    )
    return lam(h, INT, lam(t, il, lam(rec, il, body)))


def gen_liftlets_map(n: int, m: int, wrap_goal: bool = False) -> GenTerm:
    """make(n, m, v): m rounds of element doubling over an n-element list,
    with the recursion expressed via the built-in list/nat recursors."""
    if n < 1 or m < 0:
        raise ValueError("n must be >= 1, m >= 0")
    il = ListT(INT)
    v = fresh_var()
    zero_case = core.build_list([var(v, INT)] * n, INT)
    k, rec = fresh_var(), fresh_var()
    round_body = apps(ref(core.list_rect(INT, il)), ref(core.nil(INT)), _map_dbl_case(), var(rec, il))
    succ_case = lam(k, INT, lam(rec, il, round_body))
    term: Expr = apps(ref(core.nat_rect(il)), zero_case, succ_case, lit(m))

    prev: list[Expr] = [var(v, INT)] * n
    lets: list[tuple[int, Expr]] = []
    for _ in range(m):
        names = [fresh_var() for _ in range(n)]
        # The recursor computes its recursive argument first, so within a
        # round the binding for the last element lands outermost.
        for i in reversed(range(n)):
            lets.append((names[i], int_add(prev[i], prev[i])))
        prev = [var(names[i], INT) for i in range(n)]
    payload: Expr = core.build_list(prev, INT)
    expected: Expr
    if wrap_goal:
        term = app(ref(eq_nil_ident()), term)
        payload = app(ref(eq_nil_ident()), payload)
    expected = payload
    for vid, rhs in reversed(lets):
        expected = let_in(vid, rhs, expected)
    return GenTerm(term, {"v": (v, INT)}, expected)


FAMILIES = ("plus0tree", "underlets_plus0", "liftlets_map")
ENGINES = ("nbe", "naive-topdown", "naive-bottomup")


def generate(family: str, n: int, m: int) -> GenTerm:
    if family == "plus0tree":
        return gen_plus0tree(n, m)
    if family == "underlets_plus0":
        return gen_underlets_plus0(n)
    if family == "liftlets_map":
        return gen_liftlets_map(n, m)
    raise ValueError(f"unknown family {family!r}")


def family_ruleset(family: str) -> RuleSet:
    if family == "liftlets_map":
        return RuleSet(map_rules())
    return RuleSet([add_zero_rule()])


# ---------------------------------------------------------------------------
# Records and runs


@dataclass
class BenchRecord:
    family: str
    engine: str
    n: int
    m: int
    wall_time_s: float = math.nan
    rule_apps: Optional[int] = None
    nodes_visited: Optional[int] = None
    lets_lifted: Optional[int] = None
    trace_steps: Optional[int] = None
    trace_goal_size: Optional[int] = None
    output_lets: Optional[int] = None
    status: str = "ok"
    rule_breakdown: dict[str, int] = field(default_factory=dict)
    elim_steps: Optional[int] = None


CSV_HEADER = [
    "family",
    "engine",
    "n",
    "m",
    "wall_time_s",
    "rule_apps",
    "nodes_visited",
    "lets_lifted",
    "trace_steps",
    "trace_goal_size",
    "output_lets",
    "status",
]


def _verify_output(family: str, engine: str, gen: GenTerm, out: Expr, rng: random.Random,
                   samples: int = 8) -> Optional[str]:
    """Expected-normal-form and denotation checks; returns an error or None."""
    impls = {EQ_NIL_SYMBOL: eq_nil_impl()}
    if engine == "nbe" or family != "liftlets_map":
        if gen.expected_nf is not None and not alpha_eq(out, gen.expected_nf):
            return "output does not match the expected normal form"
    else:
        # The baseline's fixpoint on liftlets interleaves lets differently
        # per traversal order; check shape structurally instead.
        stats = term_stats(out)
        if gen.expected_nf is not None and stats["let_count"] != term_stats(gen.expected_nf)["let_count"]:
            return "unexpected number of let binders"
    for _ in range(samples):
        rho = {vid: VInt(rng.randint(-999, 999)) for _, (vid, _) in gen.free.items()}
        a = denote(gen.expr, rho, impls)
        b = denote(out, rho, impls)
        if not values_equal(a, b):
            return "denotation mismatch against the reference interpreter"
    return None


def _run_engine(engine: str, gen: GenTerm, ruleset: RuleSet, app_budget: int,
                collect: bool = True):
    if engine == "nbe":
        cfg = EngineConfig(budget=app_budget)
        out, stats = rewrite_top(gen.expr, ruleset, cfg)
        return out, stats, None
    order = "topdown" if engine == "naive-topdown" else "bottomup"
    out, trace = rewrite_exhaustive(gen.expr, ruleset, order, max_steps=app_budget)
    return out, None, trace


def run_family(
    family: str,
    engine: str,
    param_grid: list[tuple[int, int]],
    repetitions: int = 3,
    seed: int = 0,
    app_budget: int = 10_000_000,
    time_budget_s: float = 120.0,
) -> list[BenchRecord]:
    """One engine over a grid of (n, m) cells; median-of-repetitions times.

    Each cell's output is verified against the family's expected normal
    form and the denotation oracle before any time is recorded; failures
    mark the record instead of aborting the sweep.
    """
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    ruleset = family_ruleset(family)
    records: list[BenchRecord] = []
    for n, m in param_grid:
        rng = random.Random((seed, family, engine, n, m).__repr__())
        rec = BenchRecord(family=family, engine=engine, n=n, m=m)
        gen = generate(family, n, m)
        try:
            out, stats, trace = _run_engine(engine, gen, ruleset, app_budget)
        except (BudgetExhausted, FuelExhausted, StepBudgetExhausted) as exc:
            rec.status = f"failed-budget:{type(exc).__name__}"
            records.append(rec)
            continue
        err = _verify_output(family, engine, gen, out, rng)
        if err is not None:
            rec.status = f"failed-verify:{err}"
            records.append(rec)
            continue
        rec.output_lets = term_stats(out)["let_count"]
        if stats is not None:
            rec.rule_apps = stats.total_applications()
            rec.nodes_visited = stats.nodes_visited
            rec.lets_lifted = stats.lets_lifted
            rec.rule_breakdown = dict(stats.rule_applications)
            rec.elim_steps = stats.elim_steps
        if trace is not None:
            cost = trace_cost(trace)
            rec.rule_apps = cost["steps"]
            rec.trace_steps = cost["steps"]
            rec.trace_goal_size = cost["total_goal_size"]
            rec.lets_lifted = count_steps(trace, "lift_let")
        # Timing: one discarded warm-up, then the median of the repetitions.
        times = []
        deadline = time.perf_counter() + time_budget_s
        for i in range(repetitions + 1):
            t0 = time.perf_counter()
            _run_engine(engine, gen, ruleset, app_budget)
            dt = time.perf_counter() - t0
            if i > 0:
                times.append(dt)
            if time.perf_counter() > deadline:
                break
        if not times:
            rec.status = "failed-budget:time"
        else:
            times.sort()
            rec.wall_time_s = times[len(times) // 2]
        records.append(rec)
    return records


def fit_loglog(xs: list[float], ys: list[float]) -> dict[str, float]:
    """Least-squares slope of log(y) against log(x), with r^2."""
    if len(xs) < 4:
        raise ValueError("insufficient data: need at least 4 points")
    if any(x <= 0 for x in xs) or any(y <= 0 for y in ys):
        raise ValueError("insufficient data: values must be positive")
    lx = [math.log(x) for x in xs]
    ly = [math.log(y) for y in ys]
    k = len(lx)
    mx = sum(lx) / k
    my = sum(ly) / k
    sxx = sum((a - mx) ** 2 for a in lx)
    sxy = sum((a - mx) * (b - my) for a, b in zip(lx, ly))
    syy = sum((b - my) ** 2 for b in ly)
    if sxx == 0:
        raise ValueError("insufficient data: degenerate x values")
    slope = sxy / sxx
    r2 = 1.0 if syy == 0 else (sxy * sxy) / (sxx * syy)
    return {"exponent": slope, "r_squared": r2}


def fit_scaling(records: list[BenchRecord], x: str = "n", y: str = "wall_time_s") -> dict[str, float]:
    """log-log scaling fit over successful records."""
    ok = [r for r in records if r.status == "ok"]
    xs = [float(getattr(r, x)) if x != "nm" else float(r.n * r.m) for r in ok]
    ys = [float(getattr(r, y)) for r in ok]
    return fit_loglog(xs, ys)


def write_csv(path: str, records: list[BenchRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            def cell(v):
                return "" if v is None else v

            w.writerow(
                [
                    r.family,
                    r.engine,
                    r.n,
                    r.m,
                    "" if math.isnan(r.wall_time_s) else f"{r.wall_time_s:.6f}",
                    cell(r.rule_apps),
                    cell(r.nodes_visited),
                    cell(r.lets_lifted),
                    cell(r.trace_steps),
                    cell(r.trace_goal_size),
                    cell(r.output_lets),
                    r.status,
                ]
            )


def read_csv(path: str) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
