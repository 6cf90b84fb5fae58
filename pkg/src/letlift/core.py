"""Object language: simple types, identifiers, terms, and the reference interpreter.

The term language is a simply typed lambda calculus with let binders and a
fixed alphabet of identifiers (literals, arithmetic primitives, pair/list
constructors and their recursors, plus user-registered opaque symbols).
Every expression node caches its type, so type lookup is O(1) everywhere;
the smart constructors refuse to build ill-typed terms.

The interpreter (`denote`) is the semantics oracle for the whole package:
every engine transformation is tested against it, never trusted on its own.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

TWO64 = 2**64


class LetLiftError(Exception):
    """Base class for engine errors."""


class TypeError_(LetLiftError):
    """Ill-typed term construction or type_check failure."""

    def __init__(self, msg: str, path: tuple[int, ...] = ()):
        super().__init__(f"{msg}" + (f" (at path {list(path)})" if path else ""))
        self.path = path


class UnboundVariable(TypeError_):
    pass


class EvalError(LetLiftError):
    """Runtime error in the reference interpreter (e.g. division by zero)."""


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class Ty:
    def is_base(self) -> bool:
        return not isinstance(self, Arrow)


@dataclass(frozen=True)
class IntT(Ty):
    def __repr__(self):
        return "int"


@dataclass(frozen=True)
class BoolT(Ty):
    def __repr__(self):
        return "bool"


@dataclass(frozen=True)
class UnitT(Ty):
    def __repr__(self):
        return "unit"


@dataclass(frozen=True)
class ListT(Ty):
    elem: Ty

    def __post_init__(self):
        if not self.elem.is_base():
            raise TypeError_("list element type must be a base type")

    def __repr__(self):
        return f"list {self.elem!r}"


@dataclass(frozen=True)
class PairT(Ty):
    fst: Ty
    snd: Ty

    def __post_init__(self):
        if not (self.fst.is_base() and self.snd.is_base()):
            raise TypeError_("pair component types must be base types")

    def __repr__(self):
        return f"({self.fst!r} * {self.snd!r})"


@dataclass(frozen=True)
class Arrow(Ty):
    dom: Ty
    cod: Ty

    def __repr__(self):
        return f"({self.dom!r} -> {self.cod!r})"


INT = IntT()
BOOL = BoolT()
UNIT = UnitT()


def arrows(*tys: Ty) -> Ty:
    """Right-associated arrow chain: arrows(a, b, c) == a -> (b -> c)."""
    t = tys[-1]
    for d in reversed(tys[:-1]):
        t = Arrow(d, t)
    return t


def arity(t: Ty) -> int:
    n = 0
    while isinstance(t, Arrow):
        n += 1
        t = t.cod
    return n


def result_type(t: Ty) -> Ty:
    while isinstance(t, Arrow):
        t = t.cod
    return t


# ---------------------------------------------------------------------------
# Identifiers
#
# An identifier is a (tag, payload) pair with a fixed type computable at
# construction.  Equality and hashing are over tag+payload only, so rule
# dispatch on identifiers is a constant-time comparison.


@dataclass(frozen=True)
class Ident:
    tag: str
    payload: tuple = ()
    ty: Ty = field(compare=False, hash=False, default=UNIT)

    def __repr__(self):
        if self.payload:
            return f"{self.tag}{list(self.payload)!r}"
        return self.tag


def int_lit(v: int) -> Ident:
    return Ident("int_lit", (int(v),), INT)


def bool_lit(v: bool) -> Ident:
    return Ident("bool_lit", (bool(v),), BOOL)


def unit_lit() -> Ident:
    return Ident("unit_lit", (), UNIT)


def nil(elem: Ty) -> Ident:
    return Ident("nil", (elem,), ListT(elem))


_BINOP = arrows(INT, INT, INT)


def add() -> Ident:
    return Ident("add", (), _BINOP)


def sub() -> Ident:
    return Ident("sub", (), _BINOP)


def mul() -> Ident:
    return Ident("mul", (), _BINOP)


def div() -> Ident:
    return Ident("div", (), _BINOP)


def shr() -> Ident:
    return Ident("shr", (), _BINOP)


def pow_() -> Ident:
    return Ident("pow", (), _BINOP)


def log2floor() -> Ident:
    return Ident("log2floor", (), Arrow(INT, INT))


def fst(a: Ty, b: Ty) -> Ident:
    return Ident("fst", (a, b), Arrow(PairT(a, b), a))


def snd(a: Ty, b: Ty) -> Ident:
    return Ident("snd", (a, b), Arrow(PairT(a, b), b))


def pair_mk(a: Ty, b: Ty) -> Ident:
    return Ident("pair", (a, b), arrows(a, b, PairT(a, b)))


def cons(elem: Ty) -> Ident:
    return Ident("cons", (elem,), arrows(elem, ListT(elem), ListT(elem)))


def add_with_carry64() -> Ident:
    return Ident("addcarry64", (), arrows(INT, INT, PairT(INT, INT)))


def clip() -> Ident:
    # clip lo hi n: identity on n when lo <= n < hi, else lo.  The bounds
    # are ordinary arguments so rule patterns can bind them as constants.
    return Ident("clip", (), arrows(INT, INT, INT, INT))


def comment(text: str, t: Ty) -> Ident:
    return Ident("comment", (text, t), Arrow(t, t))


def list_rect(elem: Ty, motive: Ty) -> Ident:
    step = arrows(elem, ListT(elem), motive, motive)
    return Ident("list_rect", (elem, motive), arrows(motive, step, ListT(elem), motive))


def nat_rect(motive: Ty) -> Ident:
    step = arrows(INT, motive, motive)
    return Ident("nat_rect", (motive,), arrows(motive, step, INT, motive))


def opaque(name: str, t: Ty) -> Ident:
    """User-registered symbol with no built-in semantics."""
    return Ident("opaque", (name, t), t)


ELIMINATOR_TAGS = frozenset({"list_rect", "nat_rect"})
LITERAL_TAGS = frozenset({"int_lit", "bool_lit", "unit_lit", "nil"})
CONSTRUCTOR_TAGS = frozenset({"cons", "pair"})


# ---------------------------------------------------------------------------
# Expressions
#
# VarIds are globally unique integers from `fresh_var`.  Node identity is
# object identity; use alpha_eq for term comparison.

_var_counter = itertools.count(1)


def fresh_var() -> int:
    # next() on itertools.count is atomic under the GIL.
    return next(_var_counter)


@dataclass(eq=False)
class Expr:
    ty: Ty


@dataclass(eq=False)
class Var(Expr):
    vid: int


@dataclass(eq=False)
class Abs(Expr):
    param: int
    param_ty: Ty
    body: Expr


@dataclass(eq=False)
class App(Expr):
    fn: Expr
    arg: Expr


@dataclass(eq=False)
class LetIn(Expr):
    bound: int
    rhs: Expr
    body: Expr


@dataclass(eq=False)
class IdentRef(Expr):
    ident: Ident


def var(vid: int, t: Ty) -> Var:
    return Var(t, vid)


def ref(i: Ident) -> IdentRef:
    return IdentRef(i.ty, i)


def lam(param: int, param_ty: Ty, body: Expr) -> Abs:
    return Abs(Arrow(param_ty, body.ty), param, param_ty, body)


def app(fn: Expr, arg: Expr) -> App:
    if not isinstance(fn.ty, Arrow):
        raise TypeError_(f"application of non-function of type {fn.ty!r}")
    if fn.ty.dom != arg.ty:
        raise TypeError_(f"argument type {arg.ty!r} does not match domain {fn.ty.dom!r}")
    return App(fn.ty.cod, fn, arg)


def apps(fn: Expr, *args: Expr) -> Expr:
    e = fn
    for a in args:
        e = app(e, a)
    return e


def let_in(bound: int, rhs: Expr, body: Expr) -> LetIn:
    return LetIn(body.ty, bound, rhs, body)


def lit(v: int) -> IdentRef:
    return ref(int_lit(v))


def int_add(a: Expr, b: Expr) -> Expr:
    return apps(ref(add()), a, b)


def build_list(elems: list[Expr], elem_ty: Ty) -> Expr:
    e: Expr = ref(nil(elem_ty))
    for h in reversed(elems):
        e = apps(ref(cons(elem_ty)), h, e)
    return e


def list_spine(e: Expr) -> Optional[list[Expr]]:
    """Elements of a literal cons-chain ending in nil, or None."""
    out = []
    while True:
        if isinstance(e, IdentRef) and e.ident.tag == "nil":
            return out
        if (
            isinstance(e, App)
            and isinstance(e.fn, App)
            and isinstance(e.fn.fn, IdentRef)
            and e.fn.fn.ident.tag == "cons"
        ):
            out.append(e.fn.arg)
            e = e.arg
            continue
        return None


def app_spine(e: Expr) -> tuple[Expr, list[Expr]]:
    """Decompose nested applications into (head, [args])."""
    args: list[Expr] = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fn
    args.reverse()
    return e, args


def subterms(e: Expr) -> Iterator[Expr]:
    """All subterms, preorder, iteratively (safe on deep terms)."""
    stack = [e]
    while stack:
        t = stack.pop()
        yield t
        match t:
            case App(_, fn, arg):
                stack.append(arg)
                stack.append(fn)
            case Abs(_, _, _, body):
                stack.append(body)
            case LetIn(_, _, rhs, body):
                stack.append(body)
                stack.append(rhs)
            case _:
                pass


def free_vars(e: Expr) -> dict[int, Ty]:
    # Relies on the unique-binder invariant: a variable is free iff no
    # binder anywhere in the term carries its id.
    occs: dict[int, Ty] = {}
    binders: set[int] = set()
    for t in subterms(e):
        match t:
            case Var(ty, vid):
                occs[vid] = ty
            case Abs(_, param, _, _):
                binders.add(param)
            case LetIn(_, v, _, _):
                binders.add(v)
            case _:
                pass
    return {v: t for v, t in occs.items() if v not in binders}


def binders_unique(e: Expr) -> bool:
    """Check the Barendregt invariant: every binder id occurs on one binder."""
    seen: set[int] = set()
    for t in subterms(e):
        b = None
        if isinstance(t, Abs):
            b = t.param
        elif isinstance(t, LetIn):
            b = t.bound
        if b is not None:
            if b in seen:
                return False
            seen.add(b)
    return True


# ---------------------------------------------------------------------------
# Values and the reference interpreter


@dataclass(frozen=True)
class Value:
    pass


@dataclass(frozen=True)
class VInt(Value):
    v: int


@dataclass(frozen=True)
class VBool(Value):
    v: bool


@dataclass(frozen=True)
class VUnit(Value):
    pass


@dataclass(frozen=True)
class VList(Value):
    items: tuple


@dataclass(frozen=True)
class VPair(Value):
    fst: Value
    snd: Value


@dataclass(frozen=True, eq=False)
class VFun(Value):
    fn: Callable[[Value], Value]


def _vint(v: Value) -> int:
    assert isinstance(v, VInt), f"interpreter bug: expected VInt, got {v!r}"
    return v.v


def clip_value(lo: int, hi: int, n: int) -> int:
    """Total extension of the clip family: identity in [lo, hi), else lo."""
    return n if lo <= n < hi else lo


def _fun2(f) -> VFun:
    return VFun(lambda a: VFun(lambda b: f(a, b)))


def _fun3(f) -> VFun:
    return VFun(lambda a: VFun(lambda b: VFun(lambda c: f(a, b, c))))


def _den_div(a: Value, b: Value) -> Value:
    if _vint(b) == 0:
        raise EvalError("division by zero")
    return VInt(_vint(a) // _vint(b))


def _den_shr(a: Value, b: Value) -> Value:
    if _vint(b) < 0:
        raise EvalError("shift by negative amount")
    return VInt(_vint(a) >> _vint(b))


def _den_pow(a: Value, b: Value) -> Value:
    if _vint(b) < 0:
        raise EvalError("negative exponent")
    return VInt(_vint(a) ** _vint(b))


def _den_log2floor(a: Value) -> Value:
    if _vint(a) <= 0:
        raise EvalError("log2floor of non-positive integer")
    return VInt(_vint(a).bit_length() - 1)


def _den_addcarry64(a: Value, b: Value) -> Value:
    q, r = divmod(_vint(a) + _vint(b), TWO64)
    return VPair(VInt(q), VInt(r))


def _den_list_rect(z: Value, s: Value, l: Value) -> Value:
    assert isinstance(l, VList)
    acc = z
    items = l.items
    for i in reversed(range(len(items))):
        tail = VList(items[i + 1 :])
        acc = apply_value(apply_value(apply_value(s, items[i]), tail), acc)
    return acc


def _den_nat_rect(z: Value, s: Value, n: Value) -> Value:
    # Scrutinees <= 0 take the zero case, mirroring the engine's reducer.
    acc = z
    for k in range(max(0, _vint(n))):
        acc = apply_value(apply_value(s, VInt(k)), acc)
    return acc


def apply_value(f: Value, a: Value) -> Value:
    assert isinstance(f, VFun), f"interpreter bug: applying non-function {f!r}"
    return f.fn(a)


def denote_ident(i: Ident, ident_impls: Optional[dict[str, Value]] = None) -> Value:
    """Meaning of an identifier, as a (curried) Value."""
    match i.tag:
        case "int_lit":
            return VInt(i.payload[0])
        case "bool_lit":
            return VBool(i.payload[0])
        case "unit_lit":
            return VUnit()
        case "nil":
            return VList(())
        case "add":
            return _fun2(lambda a, b: VInt(_vint(a) + _vint(b)))
        case "sub":
            return _fun2(lambda a, b: VInt(_vint(a) - _vint(b)))
        case "mul":
            return _fun2(lambda a, b: VInt(_vint(a) * _vint(b)))
        case "div":
            return _fun2(_den_div)
        case "shr":
            return _fun2(_den_shr)
        case "pow":
            return _fun2(_den_pow)
        case "log2floor":
            return VFun(_den_log2floor)
        case "fst":
            return VFun(lambda p: p.fst)
        case "snd":
            return VFun(lambda p: p.snd)
        case "pair":
            return _fun2(VPair)
        case "cons":
            return _fun2(lambda h, t: VList((h,) + t.items))
        case "addcarry64":
            return _fun2(_den_addcarry64)
        case "clip":
            return _fun3(lambda lo, hi, n: VInt(clip_value(_vint(lo), _vint(hi), _vint(n))))
        case "comment":
            return VFun(lambda x: x)
        case "list_rect":
            return _fun3(_den_list_rect)
        case "nat_rect":
            return _fun3(_den_nat_rect)
        case "opaque":
            name = i.payload[0]
            if ident_impls is not None and name in ident_impls:
                return ident_impls[name]
            raise EvalError(f"no interpretation registered for opaque symbol {name!r}")
        case _:
            raise EvalError(f"unknown identifier tag {i.tag!r}")


def denote(e: Expr, env: Optional[dict[int, Value]] = None,
           ident_impls: Optional[dict[str, Value]] = None) -> Value:
    """Big-step call-by-value evaluation; the semantics oracle.

    `env` must cover the free variables of `e`.  Let chains are evaluated
    iteratively so deeply nested binders do not overflow the host stack.
    """
    env = dict(env) if env else {}

    def go(e: Expr, env: dict[int, Value]) -> Value:
        while True:
            match e:
                case Var(_, vid):
                    if vid not in env:
                        raise EvalError(f"unbound variable v{vid} during evaluation")
                    return env[vid]
                case IdentRef(_, ident):
                    return denote_ident(ident, ident_impls)
                case Abs(_, param, _, body):
                    saved = dict(env)
                    return VFun(lambda x, _b=body, _p=param, _e=saved: go(_b, {**_e, _p: x}))
                case App(_, fn, arg):
                    return apply_value(go(fn, env), go(arg, env))
                case LetIn(_, v, rhs, body):
                    env = {**env, v: go(rhs, env)}
                    e = body
                case _:
                    raise EvalError(f"cannot evaluate {e!r}")

    return go(e, env)


def values_equal(a: Value, b: Value) -> bool:
    """Structural equality at base types; functions are not comparable."""
    if isinstance(a, VFun) or isinstance(b, VFun):
        raise EvalError("cannot compare function values")
    if type(a) is not type(b):
        return False
    match a:
        case VList(items):
            return len(items) == len(b.items) and all(
                values_equal(x, y) for x, y in zip(items, b.items)
            )
        case VPair(f, s):
            return values_equal(f, b.fst) and values_equal(s, b.snd)
        case _:
            return a == b


# ---------------------------------------------------------------------------
# type_check, alpha_eq, term_stats


def type_check(e: Expr, env: Optional[dict[int, Ty]] = None) -> Ty:
    """Full structural type check; returns the unique type of `e`.

    Does not trust the cached `.ty` fields: recomputes bottom-up and
    cross-checks them, so it also catches terms assembled with raw
    constructors.  Iterative (explicit stack) to handle deep let chains.
    """
    env = dict(env) if env else {}
    # Frames: ("visit", expr, env, path) then ("build", expr, path, ...)
    stack: list[tuple] = [("visit", e, env, ())]
    results: list[Ty] = []
    while stack:
        frame = stack.pop()
        if frame[0] == "visit":
            _, t, env, path = frame
            match t:
                case Var(ty, vid):
                    if vid not in env:
                        raise UnboundVariable(f"unbound variable v{vid}", path)
                    if env[vid] != ty:
                        raise TypeError_(
                            f"variable v{vid} annotated {ty!r} but bound at {env[vid]!r}", path
                        )
                    results.append(ty)
                case IdentRef(ty, ident):
                    if ident.ty != ty:
                        raise TypeError_(f"identifier {ident!r} annotated {ty!r}", path)
                    results.append(ty)
                case Abs(_, param, param_ty, body):
                    stack.append(("build_abs", t, path))
                    stack.append(("visit", body, {**env, param: param_ty}, path + (0,)))
                case App(_, fn, arg):
                    stack.append(("build_app", t, path))
                    stack.append(("visit", arg, env, path + (1,)))
                    stack.append(("visit", fn, env, path + (0,)))
                case LetIn(_, v, rhs, body):
                    # Evaluate rhs type eagerly so the body env is available.
                    rhs_ty = type_check(rhs, env)
                    stack.append(("build_let", t, path, rhs_ty))
                    stack.append(("visit", body, {**env, v: rhs_ty}, path + (1,)))
                case _:
                    raise TypeError_(f"unknown expression node {t!r}", path)
        elif frame[0] == "build_abs":
            _, t, path = frame
            body_ty = results.pop()
            got = Arrow(t.param_ty, body_ty)
            if t.ty != got:
                raise TypeError_(f"abstraction annotated {t.ty!r}, computed {got!r}", path)
            results.append(got)
        elif frame[0] == "build_app":
            _, t, path = frame
            arg_ty = results.pop()
            fn_ty = results.pop()
            if not isinstance(fn_ty, Arrow):
                raise TypeError_(f"application of non-function of type {fn_ty!r}", path)
            if fn_ty.dom != arg_ty:
                raise TypeError_(
                    f"argument type {arg_ty!r} does not match domain {fn_ty.dom!r}", path
                )
            if t.ty != fn_ty.cod:
                raise TypeError_(f"application annotated {t.ty!r}, computed {fn_ty.cod!r}", path)
            results.append(fn_ty.cod)
        else:  # build_let
            _, t, path, rhs_ty = frame
            body_ty = results.pop()
            if t.ty != body_ty:
                raise TypeError_(f"let annotated {t.ty!r}, computed {body_ty!r}", path)
            results.append(body_ty)
    assert len(results) == 1
    return results[0]


def alpha_eq(e1: Expr, e2: Expr) -> bool:
    """Equality up to consistent renaming of bound variables."""
    # Map both sides' binder ids to shared serial numbers.
    m1: dict[int, int] = {}
    m2: dict[int, int] = {}
    serial = itertools.count()
    stack = [(e1, e2)]
    while stack:
        a, b = stack.pop()
        if type(a) is not type(b) or a.ty != b.ty:
            return False
        match a:
            case Var(_, v):
                s1 = m1.get(v)
                s2 = m2.get(b.vid)
                if s1 is None and s2 is None:
                    if v != b.vid:  # both free
                        return False
                elif s1 != s2:
                    return False
            case IdentRef(_, ident):
                if ident != b.ident:
                    return False
            case Abs(_, p, pt, body):
                if pt != b.param_ty:
                    return False
                s = next(serial)
                m1[p] = s
                m2[b.param] = s
                stack.append((body, b.body))
            case App(_, fn, arg):
                stack.append((arg, b.arg))
                stack.append((fn, b.fn))
            case LetIn(_, v, rhs, body):
                stack.append((rhs, b.rhs))
                s = next(serial)
                m1[v] = s
                m2[b.bound] = s
                stack.append((body, b.body))
            case _:
                return False
    return True


def term_stats(e: Expr) -> dict[str, int]:
    """Exact node/binder counts by structural traversal.

    node_count treats application as pure structure: Var, IdentRef, Abs and
    LetIn each count one node, App contributes none of its own (its operator
    head is an IdentRef and counts there).  max_binder_depth is the deepest
    nesting of Abs/LetIn binders.
    """
    node_count = 0
    let_count = 0
    max_depth = 0
    stack: list[tuple[Expr, int]] = [(e, 0)]
    while stack:
        t, d = stack.pop()
        match t:
            case Var() | IdentRef():
                node_count += 1
            case App(_, fn, arg):
                stack.append((arg, d))
                stack.append((fn, d))
            case Abs(_, _, _, body):
                node_count += 1
                max_depth = max(max_depth, d + 1)
                stack.append((body, d + 1))
            case LetIn(_, _, rhs, body):
                node_count += 1
                let_count += 1
                max_depth = max(max_depth, d + 1)
                stack.append((body, d + 1))
                stack.append((rhs, d + 1))
    return {"node_count": node_count, "let_count": let_count, "max_binder_depth": max_depth}


# ---------------------------------------------------------------------------
# Copying transforms (binder refresh, substitution)


def _rebuild(e: Expr, repl: dict[int, Expr], refresh_all: bool) -> Expr:
    """Copy `e`, substituting repl[vid] for free occurrences and refreshing
    binders (all of them when refresh_all, else none are kept stale anyway
    since every copy must preserve binder uniqueness)."""
    # Iterative post-order rebuild.
    POST = object()
    stack: list = [(e, repl)]
    out: list[Expr] = []
    while stack:
        item = stack.pop()
        if item is POST:
            node, mapping = stack.pop()
            match node:
                case App():
                    arg = out.pop()
                    fn = out.pop()
                    out.append(App(node.ty, fn, arg))
                case Abs():
                    body = out.pop()
                    out.append(Abs(node.ty, mapping[node.param].vid, node.param_ty, body))
                case LetIn():
                    body = out.pop()
                    rhs = out.pop()
                    out.append(LetIn(node.ty, mapping[node.bound].vid, rhs, body))
            continue
        node, mapping = item
        match node:
            case Var(_, vid):
                r = mapping.get(vid, node)
                if not isinstance(r, (Var, IdentRef)):
                    # Refresh per insertion so repeated occurrences cannot
                    # duplicate binder ids from the replacement term.
                    r = refresh_binders(r)
                out.append(r)
            case IdentRef():
                out.append(node)
            case Abs(_, param, param_ty, body):
                new_map = {**mapping, param: Var(param_ty, fresh_var())}
                stack.append((node, new_map))
                stack.append(POST)
                stack.append((body, new_map))
            case App(_, fn, arg):
                stack.append((node, mapping))
                stack.append(POST)
                stack.append((arg, mapping))
                stack.append((fn, mapping))
            case LetIn(_, v, rhs, body):
                new_map = {**mapping, v: Var(rhs.ty, fresh_var())}
                stack.append((node, new_map))
                stack.append(POST)
                stack.append((body, new_map))
                stack.append((rhs, mapping))
    assert len(out) == 1
    return out[0]


def refresh_binders(e: Expr) -> Expr:
    """Deep copy with all binders renamed fresh (preserves alpha class)."""
    return _rebuild(e, {}, refresh_all=True)


def subst(e: Expr, repl: dict[int, Expr]) -> Expr:
    """Capture-avoiding substitution with full copies.

    Every binder in the result is refreshed, so repeated insertion of the
    same replacement term cannot duplicate binder ids.
    """
    if not repl:
        return refresh_binders(e)
    return _rebuild(e, dict(repl), refresh_all=True)
