"""Naive one-rewrite-at-a-time engines with rewrite-trace accounting.

These emulate the cost model of tactic-style rewriting: one rule applied at
the first matching position per pass (topdown or bottomup), textual
substitution with full term copies, no sharing machinery, and a trace
recording term sizes so superlinear growth is observable.

Besides user rules, the baseline carries the structural steps tactic
rewriting would also need as explicit rules: beta, the list/nat recursor
computation steps, inlining of trivial lets, and let-lifting out of
argument positions.  Lifts across constructor spines are traced under the
separate name "lift_let_cons" so lift accounting can distinguish hoisting
across a function call from reassociating inside a literal list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

from . import core
from .core import (
    Abs,
    App,
    Expr,
    IdentRef,
    LetIn,
    LetLiftError,
    Var,
    app,
    app_spine,
    apps,
    lit,
    refresh_binders,
    subst,
    term_stats,
)
from .patterns import is_constant, match_pattern
from .rules import RuleSet

Order = Literal["topdown", "bottomup"]

BUILTIN_STEPS = (
    "beta",
    "nat_rect_zero",
    "nat_rect_succ",
    "list_rect_nil",
    "list_rect_cons",
    "inline_let",
    "lift_let",
    "lift_let_cons",
)


class StepBudgetExhausted(LetLiftError):
    def __init__(self, msg: str, partial: tuple[Expr, list["TraceStep"]]):
        super().__init__(msg)
        self.partial = partial


@dataclass(frozen=True)
class TraceStep:
    rule: str
    path: tuple[int, ...]
    before_size: int
    after_size: int
    goal_size: int  # node count of the whole term when the step fired


def node_size(e: Expr) -> int:
    return term_stats(e)["node_count"]


def _try_user_rules(e: Expr, ruleset: Optional[RuleSet]) -> Optional[tuple[Expr, str]]:
    if ruleset is None:
        return None
    from .conditions import eval_side_condition
    from .patterns import instantiate

    for rule in ruleset.rules:
        binds = match_pattern(rule.lhs, e)
        if binds is None:
            continue
        if rule.cond is not None and not eval_side_condition(rule.cond, binds):
            continue
        inst = instantiate(rule, binds)
        if inst is None:
            continue
        return inst, rule.name
    return None


def _constructor_headed(e: Expr) -> bool:
    head, _ = app_spine(e)
    return isinstance(head, IdentRef) and head.ident.tag in core.CONSTRUCTOR_TAGS


def _try_builtin(e: Expr) -> Optional[tuple[Expr, str]]:
    # beta
    if isinstance(e, App) and isinstance(e.fn, Abs):
        return subst(e.fn.body, {e.fn.param: e.arg}), "beta"
    # recursor computation on constructor-headed scrutinees
    head, args = app_spine(e)
    if isinstance(head, IdentRef) and head.ident.tag in core.ELIMINATOR_TAGS and len(args) == 3:
        z, s, scrut = args
        if head.ident.tag == "nat_rect":
            if isinstance(scrut, IdentRef) and scrut.ident.tag == "int_lit":
                k = scrut.ident.payload[0]
                if k <= 0:
                    return refresh_binders(z), "nat_rect_zero"
                rec = apps(head, refresh_binders(z), refresh_binders(s), lit(k - 1))
                return apps(refresh_binders(s), lit(k - 1), rec), "nat_rect_succ"
        else:  # list_rect
            if isinstance(scrut, IdentRef) and scrut.ident.tag == "nil":
                return refresh_binders(z), "list_rect_nil"
            if (
                isinstance(scrut, App)
                and isinstance(scrut.fn, App)
                and isinstance(scrut.fn.fn, IdentRef)
                and scrut.fn.fn.ident.tag == "cons"
            ):
                h = scrut.fn.arg
                t = scrut.arg
                rec = apps(head, refresh_binders(z), refresh_binders(s), refresh_binders(t))
                return (
                    apps(refresh_binders(s), refresh_binders(h), refresh_binders(t), rec),
                    "list_rect_cons",
                )
    # inline trivial lets (bare variable or constant right-hand side)
    if isinstance(e, LetIn) and (isinstance(e.rhs, Var) or is_constant(e.rhs)):
        return subst(e.body, {e.bound: e.rhs}), "inline_let"
    # let-lifting out of argument position
    if isinstance(e, App) and isinstance(e.arg, LetIn):
        l = e.arg
        lifted = core.let_in(l.bound, l.rhs, app(e.fn, l.body))
        name = "lift_let_cons" if _constructor_headed(e.fn) else "lift_let"
        return lifted, name
    return None


def _try_at(e: Expr, ruleset: Optional[RuleSet]) -> Optional[tuple[Expr, str]]:
    hit = _try_user_rules(e, ruleset)
    if hit is not None:
        return hit
    return _try_builtin(e)


def _children(e: Expr) -> list[tuple[int, Expr]]:
    match e:
        case App(_, fn, arg):
            return [(0, fn), (1, arg)]
        case Abs(_, _, _, body):
            return [(0, body)]
        case LetIn(_, _, rhs, body):
            return [(0, rhs), (1, body)]
        case _:
            return []


def _find_redex(
    e: Expr, ruleset: Optional[RuleSet], order: Order, path: tuple[int, ...] = ()
) -> Optional[tuple[tuple[int, ...], Expr, str]]:
    if order == "topdown":
        hit = _try_at(e, ruleset)
        if hit is not None:
            return path, hit[0], hit[1]
    for i, child in _children(e):
        found = _find_redex(child, ruleset, order, path + (i,))
        if found is not None:
            return found
    if order == "bottomup":
        hit = _try_at(e, ruleset)
        if hit is not None:
            return path, hit[0], hit[1]
    return None


def subterm_at(e: Expr, path: tuple[int, ...]) -> Expr:
    for i in path:
        kids = dict(_children(e))
        e = kids[i]
    return e


def replace_at(e: Expr, path: tuple[int, ...], replacement: Expr) -> Expr:
    if not path:
        return replacement
    i, rest = path[0], path[1:]
    match e:
        case App(ty, fn, arg):
            return App(ty, replace_at(fn, rest, replacement) if i == 0 else fn,
                       replace_at(arg, rest, replacement) if i == 1 else arg)
        case Abs(ty, p, pt, body):
            return Abs(ty, p, pt, replace_at(body, rest, replacement))
        case LetIn(_, v, rhs, body):
            rhs2 = replace_at(rhs, rest, replacement) if i == 0 else rhs
            body2 = replace_at(body, rest, replacement) if i == 1 else body
            return LetIn(body2.ty, v, rhs2, body2)
        case _:
            raise LetLiftError(f"path {path} does not exist in term")


def rewrite_once(
    e: Expr, ruleset: Optional[RuleSet], order: Order = "bottomup"
) -> Optional[tuple[Expr, TraceStep]]:
    """Apply the first matching rule at the first position in the given
    traversal order; plain textual substitution, full copies."""
    found = _find_redex(e, ruleset, order)
    if found is None:
        return None
    path, replacement, name = found
    before = subterm_at(e, path)
    step = TraceStep(
        rule=name,
        path=path,
        before_size=node_size(before),
        after_size=node_size(replacement),
        goal_size=node_size(e),
    )
    return replace_at(e, path, replacement), step


def rewrite_exhaustive(
    e: Expr,
    ruleset: Optional[RuleSet],
    order: Order = "bottomup",
    max_steps: int = 1_000_000,
) -> tuple[Expr, list[TraceStep]]:
    """Iterate rewrite_once to fixpoint or the step bound."""
    trace: list[TraceStep] = []
    current = e
    while True:
        hit = rewrite_once(current, ruleset, order)
        if hit is None:
            return current, trace
        if len(trace) >= max_steps:
            raise StepBudgetExhausted(
                f"exceeded {max_steps} rewrite steps", (current, trace)
            )
        current, step = hit
        trace.append(step)


def trace_cost(trace: list[TraceStep]) -> dict[str, int]:
    """Total goal size over the trace: the stand-in for proof-term size
    (each step restates the goal it rewrites)."""
    return {
        "steps": len(trace),
        "total_goal_size": sum(s.goal_size for s in trace),
    }


def count_steps(trace: list[TraceStep], name: str) -> int:
    return sum(1 for s in trace if s.rule == name)


def replay(e: Expr, trace: list[TraceStep], ruleset: Optional[RuleSet]) -> Expr:
    """Re-apply the trace's (path, rule) steps to the input.

    Binder ids are re-drawn from the fresh supply, so the result is checked
    against the original output up to alpha equivalence.
    """
    current = e
    for step in trace:
        target = subterm_at(current, step.path)
        hit = _try_at(target, ruleset)
        if hit is None or hit[1] != step.rule:
            raise LetLiftError(f"trace replay diverged at {step}")
        current = replace_at(current, step.path, hit[0])
    return current
