"""Compilation of rule left-hand sides to a decision tree, and tree evaluation.

The tree shares decomposition work across rules: along any root-to-leaf
path each subterm's head is inspected at most once, even when several rules
match on overlapping symbols.  Compilation follows the matrix method:
a vector of patterns per rule, specialized column by column.  Column
selection is the leftmost column containing a non-wildcard; when that is
not column 0 a Swap node reorders the evaluation vector.

Bindings are not re-matched at a leaf: the compiler tracks, per rule row,
where each pattern variable's subterm lives (a current vector slot, a
statically known identifier, or an application reassembled from slots) and
stores that recipe on the TryLeaf node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, TypeVar

from .core import App, Expr, Ident, IdentRef, LetLiftError, app
from .patterns import (
    PApp,
    PConstWild,
    PIdent,
    Pattern,
    PWild,
    RewriteRule,
    check_rule_wf,
    is_constant,
)

R = TypeVar("R")


class EmptyRuleSet(LetLiftError):
    pass


class MalformedTree(LetLiftError):
    """Swap index out of range: signals a compiler bug."""


# --- binding recipes -------------------------------------------------------


@dataclass(frozen=True)
class BindSpec:
    pass


@dataclass(frozen=True)
class Slot(BindSpec):
    pos: int


@dataclass(frozen=True)
class Reassemble(BindSpec):
    fn: BindSpec
    arg: BindSpec


@dataclass(frozen=True)
class Known(BindSpec):
    ident: Ident


@dataclass(frozen=True)
class LeafBind:
    name: str
    spec: BindSpec
    require_const: bool


# --- tree nodes ------------------------------------------------------------


@dataclass
class DTree:
    pass


@dataclass
class Failure(DTree):
    pass


@dataclass
class TryLeaf(DTree):
    rule_index: int
    binds: tuple[LeafBind, ...]
    on_failure: DTree


@dataclass
class Swap(DTree):
    i: int
    cont: DTree


@dataclass
class Switch(DTree):
    icases: tuple[tuple[Ident, DTree], ...]
    app_case: Optional[DTree]
    default: DTree
    _imap: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._imap = {i: t for i, t in self.icases}


# --- compiler --------------------------------------------------------------

# Internal binding recipes during compilation refer to symbolic column ids,
# remapped to vector positions when a leaf is emitted.


@dataclass(frozen=True)
class _ColRef:
    cid: int


@dataclass(frozen=True)
class _RApp:
    fn: object
    arg: object


@dataclass(frozen=True)
class _RKnown:
    ident: Ident


_PAD = PWild("")  # anonymous wildcard introduced by app-splits; never binds


def _is_wild(p: Pattern) -> bool:
    return isinstance(p, (PWild, PConstWild))


@dataclass
class _Row:
    pats: list[Pattern]
    rule_index: int
    resolved: dict[str, tuple[object, bool]]  # name -> (recipe, require_const)


def _subst_recipe(r, cid: int, replacement):
    if isinstance(r, _ColRef) and r.cid == cid:
        return replacement
    if isinstance(r, _RApp):
        return _RApp(_subst_recipe(r.fn, cid, replacement), _subst_recipe(r.arg, cid, replacement))
    return r


def _resolve_col(rows: list[_Row], cid: int, replacement) -> None:
    for row in rows:
        row.resolved = {
            n: (_subst_recipe(rec, cid, replacement), c) for n, (rec, c) in row.resolved.items()
        }


class _Compiler:
    def __init__(self, rules: list[RewriteRule]):
        self.rules = rules
        self._next_col = 0

    def new_col(self) -> int:
        self._next_col += 1
        return self._next_col

    def compile(self, cols: list[int], rows: list[_Row]) -> DTree:
        if not rows:
            return Failure()
        row0 = rows[0]
        if all(_is_wild(p) for p in row0.pats):
            return TryLeaf(row0.rule_index, self._leaf_binds(cols, row0), self.compile(cols, rows[1:]))

        c = next(i for i in range(len(cols)) if any(not _is_wild(r.pats[i]) for r in rows))
        if c != 0:
            swapped_rows = []
            for r in rows:
                pats = list(r.pats)
                pats[0], pats[c] = pats[c], pats[0]
                swapped_rows.append(_Row(pats, r.rule_index, dict(r.resolved)))
            cols2 = list(cols)
            cols2[0], cols2[c] = cols2[c], cols2[0]
            return Swap(c, self.compile(cols2, swapped_rows))

        cid = cols[0]
        heads: list[Ident] = []
        has_app = False
        for r in rows:
            match r.pats[0]:
                case PIdent(i):
                    if i not in heads:
                        heads.append(i)
                case PApp():
                    has_app = True

        icases = []
        for i in heads:
            sub_rows: list[_Row] = []
            i_const = i.tag in ("int_lit", "bool_lit", "unit_lit", "nil")
            for r in rows:
                p0 = r.pats[0]
                if isinstance(p0, PIdent):
                    if p0.ident != i:
                        continue
                    sub_rows.append(_Row(r.pats[1:], r.rule_index, dict(r.resolved)))
                elif isinstance(p0, PConstWild) and not i_const:
                    continue  # a constant-only wildcard can never accept this head
                elif _is_wild(p0):
                    resolved = dict(r.resolved)
                    if p0.name:
                        resolved[p0.name] = (_RKnown(i), False)
                    sub_rows.append(_Row(r.pats[1:], r.rule_index, resolved))
            for row in sub_rows:
                _resolve_col([row], cid, _RKnown(i))
            icases.append((i, self.compile(cols[1:], sub_rows)))

        app_case = None
        if has_app:
            fn_cid, arg_cid = self.new_col(), self.new_col()
            sub_rows = []
            for r in rows:
                p0 = r.pats[0]
                if isinstance(p0, PApp):
                    sub_rows.append(
                        _Row([p0.fn, p0.arg] + r.pats[1:], r.rule_index, dict(r.resolved))
                    )
                elif _is_wild(p0):
                    resolved = dict(r.resolved)
                    if p0.name:
                        resolved[p0.name] = (
                            _RApp(_ColRef(fn_cid), _ColRef(arg_cid)),
                            isinstance(p0, PConstWild),
                        )
                    sub_rows.append(_Row([_PAD, _PAD] + r.pats[1:], r.rule_index, resolved))
            for row in sub_rows:
                _resolve_col([row], cid, _RApp(_ColRef(fn_cid), _ColRef(arg_cid)))
            app_case = self.compile([fn_cid, arg_cid] + cols[1:], sub_rows)

        default_rows = [
            _Row(list(r.pats), r.rule_index, dict(r.resolved)) for r in rows if _is_wild(r.pats[0])
        ]
        default = self.compile(cols, default_rows)
        return Switch(tuple(icases), app_case, default)

    def _leaf_binds(self, cols: list[int], row: _Row) -> tuple[LeafBind, ...]:
        pos_of = {cid: i for i, cid in enumerate(cols)}

        def to_spec(rec) -> BindSpec:
            if isinstance(rec, _ColRef):
                return Slot(pos_of[rec.cid])
            if isinstance(rec, _RApp):
                return Reassemble(to_spec(rec.fn), to_spec(rec.arg))
            assert isinstance(rec, _RKnown)
            return Known(rec.ident)

        binds = []
        for n, (rec, require_const) in row.resolved.items():
            binds.append(LeafBind(n, to_spec(rec), require_const))
        for i, p in enumerate(row.pats):
            if isinstance(p, (PWild, PConstWild)) and p.name:
                binds.append(LeafBind(p.name, Slot(i), isinstance(p, PConstWild)))
        return tuple(sorted(binds, key=lambda b: b.name))


def compile_rules(rules: list[RewriteRule]) -> DTree:
    """Compile rule LHSs to a decision tree with first-match-by-priority
    semantics (declaration order).  Rejects empty and malformed rule sets."""
    if not rules:
        raise EmptyRuleSet("no rules to compile")
    for r in rules:
        errs = check_rule_wf(r)
        if errs:
            raise LetLiftError(f"rule {r.name} ill-formed: " + "; ".join(map(str, errs)))
    comp = _Compiler(rules)
    root = comp.new_col()
    rows = [_Row([r.lhs], i, {}) for i, r in enumerate(rules)]
    return comp.compile([root], rows)


# --- evaluation ------------------------------------------------------------


def _reassemble(spec: BindSpec, vector: list[Expr]) -> Expr:
    match spec:
        case Slot(pos):
            return vector[pos]
        case Known(ident):
            return IdentRef(ident.ty, ident)
        case Reassemble(fn, arg):
            return app(_reassemble(fn, vector), _reassemble(arg, vector))
    raise MalformedTree(f"unknown binding spec {spec!r}")


def eval_decision_tree(
    tree: DTree,
    e: Expr,
    try_rule: Callable[[int, dict[str, Expr]], Optional[R]],
    on_inspect: Optional[Callable[[Expr], None]] = None,
) -> Optional[R]:
    """Walk the tree over a vector initialized to [e].

    `try_rule(rule_index, bindings)` may reject (return None), e.g. on a
    failed side condition; evaluation then continues with the leaf's
    failure continuation.  `on_inspect` observes each head inspection
    (used by tests to verify decomposition sharing).
    """
    vector = [e]
    while True:
        match tree:
            case Failure():
                return None
            case TryLeaf(rule_index, binds, on_failure):
                bindings: Optional[dict[str, Expr]] = {}
                for b in binds:
                    sub = _reassemble(b.spec, vector)
                    if b.require_const and not is_constant(sub):
                        bindings = None
                        break
                    bindings[b.name] = sub
                if bindings is not None:
                    result = try_rule(rule_index, bindings)
                    if result is not None:
                        return result
                tree = on_failure
            case Swap(i, cont):
                if i >= len(vector):
                    raise MalformedTree(f"swap index {i} out of range {len(vector)}")
                vector[0], vector[i] = vector[i], vector[0]
                tree = cont
            case Switch(icases, app_case, default):
                v0 = vector[0]
                if on_inspect is not None:
                    on_inspect(v0)
                if isinstance(v0, IdentRef) and v0.ident in tree._imap:
                    vector = vector[1:]
                    tree = tree._imap[v0.ident]
                elif isinstance(v0, App) and app_case is not None:
                    vector = [v0.fn, v0.arg] + vector[1:]
                    tree = app_case
                else:
                    tree = default
            case _:
                raise MalformedTree(f"unknown tree node {tree!r}")
