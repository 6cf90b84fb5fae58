"""Rewrite rules: left-hand-side patterns, right-hand-side templates, and
the naive root matcher used as the oracle for the compiled decision tree.

Patterns are first-order and left-linear: wildcards, constant-only
wildcards, identifiers, and applications.  A right-hand side is an ordinary
expression in which pattern variables appear as free `Var` nodes (one fixed
VarId per pattern variable, held in `RewriteRule.patvar_vids`), plus
optional constant splices: integer subexpressions computed from
constant-only pattern variables at instantiation time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import core
from .conditions import Cond, cond_vars, eval_arith
from .core import (
    INT,
    Abs,
    App,
    Arrow,
    Expr,
    Ident,
    IdentRef,
    LetIn,
    LetLiftError,
    Ty,
    Var,
    app_spine,
    fresh_var,
    lit,
    subst,
    type_check,
)


class RuleError(LetLiftError):
    pass


# ---------------------------------------------------------------------------
# Patterns


@dataclass(frozen=True)
class Pattern:
    pass


@dataclass(frozen=True)
class PWild(Pattern):
    name: str


@dataclass(frozen=True)
class PConstWild(Pattern):
    name: str


@dataclass(frozen=True)
class PIdent(Pattern):
    ident: Ident


@dataclass(frozen=True)
class PApp(Pattern):
    fn: Pattern
    arg: Pattern


def pattern_vars(p: Pattern) -> list[str]:
    """Pattern variable names in left-to-right order (with duplicates)."""
    out: list[str] = []
    stack = [p]
    while stack:
        q = stack.pop()
        match q:
            case PWild(name) | PConstWild(name):
                out.append(name)
            case PApp(fn, arg):
                stack.append(fn)
                stack.append(arg)
            case _:
                pass
    return out


def is_constant(e: Expr) -> bool:
    """True iff `e` is built solely from literal identifiers and fully
    applied cons/pair constructors over constants."""
    stack = [e]
    while stack:
        t = stack.pop()
        if isinstance(t, IdentRef):
            if t.ident.tag in core.LITERAL_TAGS:
                continue
            return False
        head, args = app_spine(t)
        if (
            isinstance(head, IdentRef)
            and head.ident.tag in core.CONSTRUCTOR_TAGS
            and len(args) == core.arity(head.ident.ty)
        ):
            stack.extend(args)
            continue
        return False
    return True


def match_pattern(p: Pattern, e: Expr) -> Optional[dict[str, Expr]]:
    """Structural match at the root only; the naive per-rule strategy."""
    binds: dict[str, Expr] = {}
    stack = [(p, e)]
    while stack:
        q, t = stack.pop()
        match q:
            case PWild(name):
                binds[name] = t
            case PConstWild(name):
                if not is_constant(t):
                    return None
                binds[name] = t
            case PIdent(ident):
                if not (isinstance(t, IdentRef) and t.ident == ident):
                    return None
            case PApp(fn, arg):
                if not isinstance(t, App):
                    return None
                stack.append((arg, t.arg))
                stack.append((fn, t.fn))
    return binds


# ---------------------------------------------------------------------------
# Rules


def const_splice(c: Cond) -> Ident:
    """RHS-only marker: an integer computed from constant pattern variables
    when the rule fires (the apostrophe-splice of the rule syntax)."""
    return Ident("const_splice", (c,), INT)


@dataclass
class RewriteRule:
    name: str
    binders: tuple[tuple[str, Ty, bool], ...]  # (var name, type, constant-only)
    lhs: Pattern
    rhs: Expr  # template over patvar Vars (see patvar_vids)
    cond: Optional[Cond] = None
    priority: int = 0
    patvar_vids: dict[str, int] = field(default_factory=dict)

    @classmethod
    def make(cls, name, binders, lhs, rhs_fn, cond=None, priority=0) -> "RewriteRule":
        """Build a rule programmatically.

        `rhs_fn` receives a dict mapping pattern-variable names to `Var`
        template nodes and returns the right-hand-side expression.
        """
        vids = {n: fresh_var() for n, _, _ in binders}
        pvars = {n: core.var(vids[n], t) for n, t, _ in binders}
        rhs = rhs_fn(pvars)
        return cls(name, tuple(binders), lhs, rhs, cond, priority, vids)

    def binder_type(self, name: str) -> Ty:
        for n, t, _ in self.binders:
            if n == name:
                return t
        raise RuleError(f"rule {self.name}: unknown pattern variable {name!r}")

    def const_names(self) -> set[str]:
        return {n for n, _, c in self.binders if c}


@dataclass(frozen=True)
class WfError:
    code: str
    detail: str

    def __str__(self):
        return f"{self.code}: {self.detail}"


def infer_pattern_type(p: Pattern, rule: RewriteRule) -> Ty:
    """Type of a pattern under the rule's binder declarations."""
    match p:
        case PWild(name) | PConstWild(name):
            return rule.binder_type(name)
        case PIdent(ident):
            return ident.ty
        case PApp(fn, arg):
            fn_ty = infer_pattern_type(fn, rule)
            arg_ty = infer_pattern_type(arg, rule)
            if not isinstance(fn_ty, Arrow):
                raise RuleError(f"pattern applies non-function of type {fn_ty!r}")
            if fn_ty.dom != arg_ty:
                raise RuleError(
                    f"pattern argument type {arg_ty!r} does not match domain {fn_ty.dom!r}"
                )
            return fn_ty.cod
    raise RuleError(f"unknown pattern {p!r}")


def _template_free_names(rule: RewriteRule) -> tuple[set[str], set[str]]:
    """(pattern variables used in rhs, splice variables used in rhs)."""
    by_vid = {v: n for n, v in rule.patvar_vids.items()}
    used: set[str] = set()
    spliced: set[str] = set()
    for t in core.subterms(rule.rhs):
        if isinstance(t, Var) and t.vid in by_vid:
            used.add(by_vid[t.vid])
        elif isinstance(t, IdentRef) and t.ident.tag == "const_splice":
            spliced |= cond_vars(t.ident.payload[0])
    return used, spliced


def check_rule_wf(rule: RewriteRule) -> list[WfError]:
    """Well-formedness: returns [] iff the rule is accepted.

    Checks: the LHS is headed by structure (not a bare wildcard); patterns
    are left-linear; RHS and side-condition variables all occur in the LHS;
    condition and splice variables are constant-marked integers; LHS and RHS
    types agree under the binder typing.
    """
    errs: list[WfError] = []
    declared = {n for n, _, _ in rule.binders}

    if isinstance(rule.lhs, (PWild, PConstWild)):
        errs.append(WfError("bare_wildcard_lhs", f"rule {rule.name}: LHS matches everything"))

    occ = pattern_vars(rule.lhs)
    for n in sorted(set(x for x in occ if occ.count(x) > 1)):
        errs.append(WfError("nonlinear_lhs", f"rule {rule.name}: variable {n} occurs twice in LHS"))
    undeclared = [n for n in occ if n not in declared]
    for n in undeclared:
        errs.append(WfError("undeclared_var", f"rule {rule.name}: {n} not declared"))
        return errs  # typing below would be meaningless

    lhs_names = set(occ)
    const_names = rule.const_names()

    rhs_used, rhs_spliced = _template_free_names(rule)
    for n in sorted(rhs_used - lhs_names):
        errs.append(WfError("unbound_rhs_var", f"rule {rule.name}: RHS uses {n} not bound in LHS"))

    cond_names = cond_vars(rule.cond) if rule.cond is not None else set()
    for n in sorted((cond_names | rhs_spliced) - lhs_names):
        errs.append(
            WfError("unbound_cond_var", f"rule {rule.name}: condition uses {n} not bound in LHS")
        )
    for n in sorted((cond_names | rhs_spliced) & lhs_names - const_names):
        errs.append(
            WfError(
                "non_constant_in_side_condition",
                f"rule {rule.name}: {n} used in a condition but not marked constant-only",
            )
        )
    for n in sorted(cond_names | rhs_spliced):
        if n in declared and rule.binder_type(n) != INT:
            errs.append(
                WfError("cond_var_not_int", f"rule {rule.name}: condition variable {n} is not int")
            )

    try:
        lhs_ty = infer_pattern_type(rule.lhs, rule)
        env = {rule.patvar_vids[n]: t for n, t, _ in rule.binders if n in rule.patvar_vids}
        rhs_ty = type_check(rule.rhs, env)
        if lhs_ty != rhs_ty:
            errs.append(
                WfError(
                    "type_mismatch",
                    f"rule {rule.name}: LHS type {lhs_ty!r} != RHS type {rhs_ty!r}",
                )
            )
    except LetLiftError as exc:
        errs.append(WfError("type_mismatch", f"rule {rule.name}: {exc}"))

    return errs


def instantiate(rule: RewriteRule, bindings: dict[str, Expr]) -> Optional[Expr]:
    """Syntactic RHS instantiation: compute splices, substitute bindings,
    refresh every binder.  Returns None if a splice is undefined."""

    def splice(e: Expr) -> Optional[Expr]:
        match e:
            case IdentRef(_, ident) if ident.tag == "const_splice":
                v = eval_arith(ident.payload[0], bindings)
                return None if v is None else lit(v)
            case App(_, fn, arg):
                f2, a2 = splice(fn), splice(arg)
                if f2 is None or a2 is None:
                    return None
                return App(e.ty, f2, a2)
            case Abs(_, p, pt, body):
                b2 = splice(body)
                return None if b2 is None else Abs(e.ty, p, pt, b2)
            case LetIn(_, v, rhs, body):
                r2, b2 = splice(rhs), splice(body)
                if r2 is None or b2 is None:
                    return None
                return LetIn(e.ty, v, r2, b2)
            case _:
                return e

    spliced = splice(rule.rhs)
    if spliced is None:
        return None
    repl = {rule.patvar_vids[n]: e for n, e in bindings.items() if n in rule.patvar_vids}
    return subst(spliced, repl)
