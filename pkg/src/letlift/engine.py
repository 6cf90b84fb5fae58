"""Reducer fused with top-of-term rewriting.

Terms are normalized by evaluation: arrow-typed values become host
functions, base-typed values become residual syntax.  The constant case of
the reducer reflects identifiers and, underneath full eta-expansion,
applies the compiled rule matcher at the root of each base-typed residual
("rewrite head").  Let binders are never substituted away: the reducer
threads telescopes of bindings (`WithLets`) and splices them out of
function-argument positions, so redexes beneath a binder stay visible to
rewriting while sharing is preserved.  The list/nat recursors are built
into reflection and compute unconditionally on constructor-headed
scrutinees.

Instantiated rule right-hand sides are re-reduced (so recursion rules keep
computing); termination is enforced by per-node fuel plus a global
rule-application budget, never by silent truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from . import core
from .core import (
    Abs,
    App,
    Arrow,
    Expr,
    IdentRef,
    LetIn,
    LetLiftError,
    Ty,
    Var,
    app,
    app_spine,
    fresh_var,
    lam,
    let_in,
    list_spine,
    type_check,
    var,
)
from .conditions import eval_side_condition
from .dtree import eval_decision_tree
from .patterns import RewriteRule, instantiate, is_constant


class FuelExhausted(LetLiftError):
    """A rule chain at one node exceeded the fuel bound; the rule set is
    likely non-terminating."""


class BudgetExhausted(LetLiftError):
    """The global rule-application budget was exceeded."""


@dataclass
class EngineConfig:
    fuel: int = 256  # max rule applications chained at one node
    inline_constants: bool = True
    inline_vars: bool = True
    name_cons_cells: bool = True
    collect_stats: bool = True
    budget: int = 10_000_000  # global rule-application budget

    def __post_init__(self):
        if self.fuel < 1:
            raise ValueError("fuel must be >= 1")


@dataclass
class RewriteStats:
    rule_applications: dict[str, int] = field(default_factory=dict)
    nodes_visited: int = 0
    lets_lifted: int = 0
    lets_inlined: int = 0
    elim_steps: int = 0

    def total_applications(self) -> int:
        return sum(self.rule_applications.values())

    def as_text(self) -> str:
        lines = [
            f"nodes_visited={self.nodes_visited}",
            f"lets_lifted={self.lets_lifted}",
            f"lets_inlined={self.lets_inlined}",
            f"elim_steps={self.elim_steps}",
            f"rule_applications={self.total_applications()}",
        ]
        for name in sorted(self.rule_applications):
            lines.append(f"rule.{name}={self.rule_applications[name]}")
        return "\n".join(lines)


# A semantic value is a residual expression at base types and a host
# function SemValue -> WithLets at arrow types.
SemValue = Union[Expr, Callable]


@dataclass
class WithLets:
    """A telescope of let bindings (vid, bound expression) over a payload.

    Each bound expression may mention binders introduced earlier in the
    telescope plus ambient variables.
    """

    lets: list[tuple[int, Expr]]
    payload: SemValue


class _Env:
    """Variable environment with O(1) in-place extension.

    Closures snapshot the current mapping by calling `freeze`; the next
    extension after a freeze copies, so captured environments are never
    mutated underneath a closure.
    """

    __slots__ = ("data", "_shared")

    def __init__(self, data: Optional[dict[int, SemValue]] = None):
        self.data = data if data is not None else {}
        self._shared = False

    def get(self, vid: int) -> Optional[SemValue]:
        return self.data.get(vid)

    def extended(self, vid: int, value: SemValue) -> "_Env":
        if self._shared:
            env = _Env(dict(self.data))
            env.data[vid] = value
            return env
        self.data[vid] = value
        return self

    def freeze(self) -> dict[int, SemValue]:
        self._shared = True
        return self.data


class _Ctx:
    __slots__ = ("ruleset", "cfg", "stats", "budget_left", "on_event", "collect")

    def __init__(self, ruleset, cfg: EngineConfig, stats: RewriteStats, on_event=None):
        self.ruleset = ruleset
        self.cfg = cfg
        self.stats = stats
        self.budget_left = cfg.budget
        self.on_event = on_event
        self.collect = cfg.collect_stats


def _try_match(e: Expr, ctx: _Ctx) -> Optional[tuple[RewriteRule, dict[str, Expr]]]:
    """One decision-tree evaluation at the root of `e`, side conditions
    included (a failed condition falls through to lower-priority rules)."""
    rs = ctx.ruleset
    if rs is None:
        return None

    def try_rule(idx: int, bindings: dict[str, Expr]):
        rule = rs.rules[idx]
        if rule.cond is not None and not eval_side_condition(rule.cond, bindings):
            return None
        return (rule, bindings)

    return eval_decision_tree(rs.tree, e, try_rule)


def _spend(rule: RewriteRule, ctx: _Ctx) -> None:
    ctx.budget_left -= 1
    if ctx.budget_left < 0:
        raise BudgetExhausted(f"rule-application budget {ctx.cfg.budget} exceeded")
    if ctx.collect:
        ctx.stats.rule_applications[rule.name] = ctx.stats.rule_applications.get(rule.name, 0) + 1


def rewrite_head(
    e: Expr,
    ruleset,
    cfg: Optional[EngineConfig] = None,
    stats: Optional[RewriteStats] = None,
) -> Optional[Expr]:
    """Purely syntactic rewriting at the root of `e` only.

    Applies the first rule (by priority) whose pattern matches and side
    condition holds, instantiates its right-hand side (splices computed,
    binders refreshed), and repeats on the result up to `cfg.fuel` times.
    Returns None when no rule fires at all.  This is the plain syntactic
    operation; the reducer uses a semantic variant that re-reduces
    instantiated right-hand sides.
    """
    cfg = cfg or EngineConfig()
    ctx = _Ctx(ruleset, cfg, stats if stats is not None else RewriteStats())
    applied = 0
    current = e
    while True:
        m = _try_match(current, ctx)
        if m is None:
            return current if applied else None
        if applied >= cfg.fuel:
            raise FuelExhausted(f"more than {cfg.fuel} chained rewrites at one node")
        rule, bindings = m
        inst = instantiate(rule, bindings)
        if inst is None:  # undefined constant splice: treat as non-match
            return current if applied else None
        _spend(rule, ctx)
        current = inst
        applied += 1


# ---------------------------------------------------------------------------
# The reducer


def _emit(ctx: _Ctx, kind: str, payload) -> None:
    if ctx.on_event is not None:
        ctx.on_event(kind, payload)


def _rewrite_head_sem(e: Expr, ctx: _Ctx) -> WithLets:
    """Rewrite chain at one node, re-reducing each instantiated RHS."""
    _emit(ctx, "rewrite_head", e)
    lets: list[tuple[int, Expr]] = []
    applied = 0
    current = e
    while True:
        m = _try_match(current, ctx)
        if m is None:
            return WithLets(lets, current)
        if applied >= ctx.cfg.fuel:
            raise FuelExhausted(f"more than {ctx.cfg.fuel} chained rewrites at one node")
        rule, bindings = m
        spliced = _splice_template(rule, bindings)
        if spliced is None:  # undefined constant splice: rule does not fire
            return WithLets(lets, current)
        # Spend before reducing the instantiated RHS: the reduction may
        # recursively rewrite, and the budget is what bounds cyclic rules.
        _spend(rule, ctx)
        applied += 1
        inst = _instantiate_sem(rule, spliced, bindings, ctx)
        lets.extend(inst.lets)
        current = inst.payload


def _instantiate_sem(rule: RewriteRule, spliced: Expr, bindings: dict[str, Expr],
                     ctx: _Ctx) -> WithLets:
    """Reduce the rule's (splice-resolved) RHS template with pattern
    variables bound to the semantic values of their matched subterms."""
    env = _Env()
    for n, e in bindings.items():
        vid = rule.patvar_vids.get(n)
        if vid is not None:
            env = env.extended(vid, _binding_sem(e, rule.binder_type(n), ctx))
    return _reduce(spliced, env, ctx)


def _splice_template(rule: RewriteRule, bindings: dict[str, Expr]) -> Optional[Expr]:
    from .conditions import eval_arith

    def go(e: Expr) -> Optional[Expr]:
        match e:
            case IdentRef(_, ident) if ident.tag == "const_splice":
                v = eval_arith(ident.payload[0], bindings)
                return None if v is None else core.lit(v)
            case App(_, fn, arg):
                f2, a2 = go(fn), go(arg)
                return None if f2 is None or a2 is None else App(e.ty, f2, a2)
            case Abs(_, p, pt, body):
                b2 = go(body)
                return None if b2 is None else Abs(e.ty, p, pt, b2)
            case LetIn(_, v, rhs, body):
                r2, b2 = go(rhs), go(body)
                return None if r2 is None or b2 is None else LetIn(e.ty, v, r2, b2)
            case _:
                return e

    return go(rule.rhs)


def _binding_sem(e: Expr, t: Ty, ctx: _Ctx) -> SemValue:
    """Semantic value of an already-reduced residual expression."""
    if t.is_base():
        return e
    if isinstance(e, Abs):
        # Re-enter the reducer per call rather than leaving a beta redex.
        def call_abs(x: SemValue, _e=e) -> WithLets:
            env = _Env({_e.param: x})
            return _reduce(_e.body, env, ctx)

        return call_abs
    return _reflect_neutral(e, t, ctx)


def _reflect_neutral(e: Expr, t: Ty, ctx: _Ctx) -> SemValue:
    """Type-directed reflection of residual syntax into the semantic domain.

    At arrow types this is eta-expansion: each application extends the
    residual spine with the reified argument.  A base-typed spine is where
    recursor computation and the rewrite chain happen.
    """
    if t.is_base():
        raise AssertionError("neutral reflection is only built at arrow types")

    def call(x: SemValue, _e=e, _t=t) -> WithLets:
        e2 = app(_e, _reify_sem(x, _t.dom, ctx))
        if isinstance(_t.cod, Arrow):
            return WithLets([], _reflect_neutral(e2, _t.cod, ctx))
        return _app_base(e2, ctx)

    return call


def _cons_prefix(e: Expr) -> tuple[list[Expr], Optional[Expr]]:
    """Longest literal cons prefix and its terminal: (elems, None) when the
    chain ends in nil, (elems, tail) when it ends in an opaque tail."""
    elems: list[Expr] = []
    while True:
        if isinstance(e, IdentRef) and e.ident.tag == "nil":
            return elems, None
        if (
            isinstance(e, App)
            and isinstance(e.fn, App)
            and isinstance(e.fn.fn, IdentRef)
            and e.fn.fn.ident.tag == "cons"
        ):
            elems.append(e.fn.arg)
            e = e.arg
            continue
        return elems, e


def _app_base(e: Expr, ctx: _Ctx) -> WithLets:
    """A base-typed residual spine just materialized: run recursor steps
    if the scrutinee is constructor-headed, otherwise the rewrite chain."""
    head, args = app_spine(e)
    if isinstance(head, IdentRef) and head.ident.tag in core.ELIMINATOR_TAGS and len(args) == 3:
        z_expr, s_expr, scrut = args
        if head.ident.tag == "list_rect":
            elems, tail = _cons_prefix(scrut)
            if tail is None or elems:
                return _run_list_rect(head.ident, z_expr, s_expr, elems, tail, ctx)
        else:  # nat_rect
            if isinstance(scrut, IdentRef) and scrut.ident.tag == "int_lit":
                return _run_nat_rect(head.ident, z_expr, s_expr, scrut.ident.payload[0], ctx)
    return _rewrite_head_sem(e, ctx)


def _run_list_rect(ident, z_expr: Expr, s_expr: Expr, elems: list[Expr],
                   opaque_tail: Optional[Expr], ctx: _Ctx) -> WithLets:
    elem_ty, motive = ident.payload
    s_ty = core.arrows(elem_ty, core.ListT(elem_ty), motive, motive)
    s = _binding_sem(s_expr, s_ty, ctx)
    lets: list[tuple[int, Expr]] = []
    if opaque_tail is None:
        acc = _binding_sem(z_expr, motive, ctx)
    else:
        # Computation consumed the literal prefix; the recursion bottoms out
        # in a residual recursor application over the opaque tail.
        residual = core.apps(core.ref(ident), z_expr, s_expr, opaque_tail)
        w = _rewrite_head_sem(residual, ctx)
        lets.extend(w.lets)
        acc = w.payload
    # Fold from the right; the recursive result is an argument value, so its
    # telescope is spliced before the step body's own bindings.
    tail: Expr = opaque_tail if opaque_tail is not None else core.ref(core.nil(elem_ty))
    tails: list[Expr] = []
    for h in reversed(elems):
        tails.append(tail)
        tail = core.apps(core.ref(core.cons(elem_ty)), h, tail)
    tails.reverse()
    for i in reversed(range(len(elems))):
        ctx.stats.elim_steps += 1
        w1 = s(elems[i])
        step_lets = list(w1.lets)
        w2 = w1.payload(tails[i])
        step_lets.extend(w2.lets)
        w3 = w2.payload(acc)
        step_lets.extend(w3.lets)
        lets.extend(step_lets)
        acc = w3.payload
    return WithLets(lets, acc)


def _run_nat_rect(ident, z_expr: Expr, s_expr: Expr, n: int, ctx: _Ctx) -> WithLets:
    (motive,) = ident.payload
    s_ty = core.arrows(core.INT, motive, motive)
    z = _binding_sem(z_expr, motive, ctx)
    s = _binding_sem(s_expr, s_ty, ctx)
    lets: list[tuple[int, Expr]] = []
    acc = z
    for k in range(max(0, n)):
        ctx.stats.elim_steps += 1
        w1 = s(core.lit(k))
        lets.extend(w1.lets)
        w2 = w1.payload(acc)
        lets.extend(w2.lets)
        acc = w2.payload
    return WithLets(lets, acc)


def _reduce(e: Expr, env: _Env, ctx: _Ctx) -> WithLets:
    """Structural recursion over the term; let chains handled iteratively."""
    cfg = ctx.cfg
    stats = ctx.stats
    lets: list[tuple[int, Expr]] = []
    while True:
        if ctx.collect:
            stats.nodes_visited += 1
        match e:
            case Var(ty, vid):
                v = env.get(vid)
                if v is None:
                    # Ambient variable: residual at base, eta at arrow.
                    v = e if ty.is_base() else _reflect_neutral(e, ty, ctx)
                _emit(ctx, "reduced", e)
                return WithLets(lets, v)
            case IdentRef(ty, ident):
                _emit(ctx, "reduced", e)
                if ty.is_base():
                    w = _rewrite_head_sem(e, ctx)
                    lets.extend(w.lets)
                    return WithLets(lets, w.payload)
                return WithLets(lets, _reflect_neutral(e, ty, ctx))
            case Abs(_, param, _, body):
                frozen = env.freeze()

                def closure(x: SemValue, _b=body, _p=param, _f=frozen) -> WithLets:
                    inner = _Env(dict(_f))
                    inner.data[_p] = x
                    return _reduce(_b, inner, ctx)

                _emit(ctx, "reduced", e)
                return WithLets(lets, closure)
            case App(_, fn, arg):
                wf = _reduce(fn, env, ctx)
                wa = _reduce(arg, env, ctx)
                lets.extend(wf.lets)
                lets.extend(wa.lets)
                f = wf.payload
                if not callable(f):
                    raise LetLiftError(f"engine bug: applying non-function value {f!r}")
                w = f(wa.payload)
                lets.extend(w.lets)
                _emit(ctx, "reduced", e)
                return WithLets(lets, w.payload)
            case LetIn(_, v, rhs, body):
                wr = _reduce(rhs, env, ctx)
                lets.extend(wr.lets)
                pv = wr.payload
                if isinstance(rhs.ty, Arrow):
                    # Function-typed bindings are always inlined semantically.
                    env = env.extended(v, pv)
                    stats.lets_inlined += 1
                elif cfg.inline_vars and isinstance(pv, Var):
                    env = env.extended(v, pv)
                    stats.lets_inlined += 1
                elif cfg.inline_constants and is_constant(pv):
                    env = env.extended(v, pv)
                    stats.lets_inlined += 1
                elif cfg.name_cons_cells and list_spine(pv) is not None:
                    env = env.extended(v, _name_cells(pv, lets, ctx))
                else:
                    w = fresh_var()
                    lets.append((w, pv))
                    stats.lets_lifted += 1
                    env = env.extended(v, Var(rhs.ty, w))
                e = body
            case _:
                raise LetLiftError(f"engine bug: cannot reduce {e!r}")


def _name_cells(chain: Expr, lets: list[tuple[int, Expr]], ctx: _Ctx) -> Expr:
    """Bind each non-atomic element of a cons chain to its own let and
    rebuild the chain over the names (such a list may be traversed many
    times in different ways)."""
    elems = list_spine(chain)
    assert elems is not None
    elem_ty = chain.ty.elem
    named: list[Expr] = []
    for el in elems:
        if isinstance(el, (Var, IdentRef)) or is_constant(el):
            named.append(el)
        else:
            w = fresh_var()
            lets.append((w, el))
            ctx.stats.lets_lifted += 1
            named.append(Var(elem_ty, w))
    return core.build_list(named, elem_ty)


# ---------------------------------------------------------------------------
# Reify / reflect


def _reify_sem(v: SemValue, t: Ty, ctx: _Ctx) -> Expr:
    if t.is_base():
        assert isinstance(v, Expr), f"engine bug: base value is not syntax: {v!r}"
        return v
    assert callable(v), f"engine bug: arrow value is not a function: {v!r}"
    x = fresh_var()
    arg = _binding_sem(var(x, t.dom), t.dom, ctx)
    w = v(arg)
    body = _reify_with_lets(w, t.cod, ctx)
    return lam(x, t.dom, body)


def _reify_with_lets(w: WithLets, t: Ty, ctx: _Ctx) -> Expr:
    body = _reify_sem(w.payload, t, ctx)
    for vid, rhs in reversed(w.lets):
        body = let_in(vid, rhs, body)
    return body


# ---------------------------------------------------------------------------
# Public entry points


def reduce_expr(e: Expr, env: Optional[dict[int, SemValue]] = None, ruleset=None,
                cfg: Optional[EngineConfig] = None) -> WithLets:
    """Reduce `e` to a semantic value with a telescope of lifted lets.

    Free variables not covered by `env` are treated as opaque.
    """
    ctx = _Ctx(ruleset, cfg or EngineConfig(), RewriteStats())
    return _reduce(e, _Env(dict(env) if env else {}), ctx)


def reflect(e: Expr, t: Ty, ruleset=None, cfg: Optional[EngineConfig] = None) -> SemValue:
    """Reflect residual syntax at type `t` (rewrite chain at base types)."""
    ctx = _Ctx(ruleset, cfg or EngineConfig(), RewriteStats())
    return _binding_sem(e, t, ctx)


def reify(v: SemValue, t: Ty, ruleset=None, cfg: Optional[EngineConfig] = None) -> Expr:
    """Read back a semantic value into syntax (eta-expanding at arrows)."""
    ctx = _Ctx(ruleset, cfg or EngineConfig(), RewriteStats())
    return _reify_sem(v, t, ctx)


def rewrite_top(
    E: Expr,
    ruleset=None,
    cfg: Optional[EngineConfig] = None,
    on_event=None,
) -> tuple[Expr, RewriteStats]:
    """Normalize-and-rewrite a whole term; the main engine entry point.

    The result is well typed at the type of `E` and denotes the same value
    in every environment (checked by the test suite against the reference
    interpreter, and optionally via `--verify` in the CLI).  Precondition:
    `E` is well typed; free variables are treated as opaque.
    """
    cfg = cfg or EngineConfig()
    stats = RewriteStats()
    ctx = _Ctx(ruleset, cfg, stats, on_event=on_event)
    w = _reduce(E, _Env(), ctx)
    result = _reify_with_lets(w, E.ty, ctx)
    got = type_check(result, {v: t for v, t in core.free_vars(result).items()})
    if got != E.ty:
        raise LetLiftError(f"engine bug: type changed from {E.ty!r} to {got!r}")
    return result, stats
