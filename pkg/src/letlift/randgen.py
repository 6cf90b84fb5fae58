"""Seeded random generation of well-typed terms and valuations.

Used by the property tests (oracle equivalence over the engine and the
decision tree) and by the CLI's --verify sampling.  Generated terms stay
inside the total fragment: division, shifts and powers only appear with
literal right operands that cannot fault, and recursor scrutinees are
small literals or list-typed variables.
"""

from __future__ import annotations

import random
from . import core
from .core import (
    BOOL,
    INT,
    UNIT,
    Expr,
    ListT,
    PairT,
    Ty,
    VBool,
    VInt,
    VList,
    VPair,
    VUnit,
    Value,
    apps,
    fresh_var,
    lam,
    let_in,
    lit,
    ref,
    var,
)

BASE_KINDS = [INT, BOOL, UNIT, ListT(INT), PairT(INT, INT), PairT(INT, BOOL), ListT(BOOL)]


def random_base_type(rng: random.Random) -> Ty:
    return rng.choice(BASE_KINDS)


def random_value(ty: Ty, rng: random.Random) -> Value:
    match ty:
        case core.IntT():
            return VInt(rng.randint(-99, 99))
        case core.BoolT():
            return VBool(rng.random() < 0.5)
        case core.UnitT():
            return VUnit()
        case ListT(elem):
            return VList(tuple(random_value(elem, rng) for _ in range(rng.randint(0, 3))))
        case PairT(a, b):
            return VPair(random_value(a, rng), random_value(b, rng))
    raise ValueError(f"cannot sample a value of type {ty!r}")


def random_valuation(free: dict[int, Ty], rng: random.Random) -> dict[int, Value]:
    return {vid: random_value(t, rng) for vid, t in free.items()}


class TermGen:
    """Random well-typed closed-over-env terms of bounded size."""

    def __init__(self, rng: random.Random, max_size: int = 30):
        self.rng = rng
        self.size = max_size

    def _spend(self) -> bool:
        if self.size <= 0:
            return False
        self.size -= 1
        return True

    def literal(self, ty: Ty) -> Expr:
        rng = self.rng
        match ty:
            case core.IntT():
                return lit(rng.randint(-9, 9))
            case core.BoolT():
                return ref(core.bool_lit(rng.random() < 0.5))
            case core.UnitT():
                return ref(core.unit_lit())
            case ListT(elem):
                return core.build_list(
                    [self.literal(elem) for _ in range(rng.randint(0, 2))], elem
                )
            case PairT(a, b):
                return apps(ref(core.pair_mk(a, b)), self.literal(a), self.literal(b))
        raise ValueError(ty)

    def gen(self, ty: Ty, env: list[tuple[int, Ty]]) -> Expr:
        rng = self.rng
        if isinstance(ty, core.Arrow):
            x = fresh_var()
            return lam(x, ty.dom, self.gen(ty.cod, env + [(x, ty.dom)]))
        candidates = [vid for vid, t in env if t == ty]
        if not self._spend():
            if candidates and rng.random() < 0.7:
                return var(rng.choice(candidates), ty)
            return self.literal(ty)
        roll = rng.random()
        if candidates and roll < 0.2:
            return var(rng.choice(candidates), ty)
        if roll < 0.35:
            return self.literal(ty)
        if roll < 0.5:
            # let binding of a base-typed rhs
            rty = random_base_type(rng)
            rhs = self.gen(rty, env)
            v = fresh_var()
            return let_in(v, rhs, self.gen(ty, env + [(v, rty)]))
        if roll < 0.58:
            # beta redex
            aty = random_base_type(rng)
            x = fresh_var()
            body = self.gen(ty, env + [(x, aty)])
            return core.app(lam(x, aty, body), self.gen(aty, env))
        if roll < 0.63:
            return core.app(ref(core.comment("gen", ty)), self.gen(ty, env))
        return self.by_type(ty, env)

    def by_type(self, ty: Ty, env) -> Expr:
        rng = self.rng
        match ty:
            case core.IntT():
                return self.int_expr(env)
            case core.BoolT() | core.UnitT():
                # projections out of a pair, or a literal
                if rng.random() < 0.4:
                    other = random_base_type(rng)
                    p = self.gen(PairT(ty, other), env)
                    return core.app(ref(core.fst(ty, other)), p)
                return self.literal(ty)
            case ListT(elem):
                if rng.random() < 0.4:
                    h = self.gen(elem, env)
                    t = self.gen(ty, env)
                    return apps(ref(core.cons(elem)), h, t)
                if rng.random() < 0.3:
                    return self.list_rect_expr(ty, env)
                return self.literal(ty)
            case PairT(a, b):
                if rng.random() < 0.25:
                    return apps(
                        ref(core.add_with_carry64()), self.gen(INT, env), self.gen(INT, env)
                    ) if (a, b) == (INT, INT) else apps(
                        ref(core.pair_mk(a, b)), self.gen(a, env), self.gen(b, env)
                    )
                return apps(ref(core.pair_mk(a, b)), self.gen(a, env), self.gen(b, env))
        raise ValueError(ty)

    def int_expr(self, env) -> Expr:
        rng = self.rng
        roll = rng.random()
        if roll < 0.3:
            op = rng.choice([core.add, core.sub, core.mul])
            return apps(ref(op()), self.gen(INT, env), self.gen(INT, env))
        if roll < 0.4:
            # x + 0 and friends: give the standard rules something to do
            return core.int_add(self.gen(INT, env), lit(0))
        if roll < 0.48:
            return apps(ref(core.div()), self.gen(INT, env), lit(rng.choice([1, 2, 3, 4, 8, 16])))
        if roll < 0.54:
            return apps(ref(core.shr()), self.gen(INT, env), lit(rng.randint(0, 5)))
        if roll < 0.6:
            return apps(
                ref(core.clip()),
                lit(rng.randint(-20, 0)),
                lit(rng.randint(1, 40)),
                self.gen(INT, env),
            )
        if roll < 0.68:
            other = random_base_type(rng)
            return core.app(ref(core.fst(INT, other)), self.gen(PairT(INT, other), env))
        if roll < 0.76:
            return self.nat_rect_expr(env)
        if roll < 0.84:
            lists = [vid for vid, t in env if t == ListT(INT)]
            if lists:
                return self.list_len_expr(env, rng.choice(lists))
            return self.literal(INT)
        return self.literal(INT)

    def nat_rect_expr(self, env) -> Expr:
        k, acc = fresh_var(), fresh_var()
        body = self.gen(INT, env + [(k, INT), (acc, INT)])
        step = lam(k, INT, lam(acc, INT, body))
        return apps(
            ref(core.nat_rect(INT)), self.gen(INT, env), step, lit(self.rng.randint(0, 3))
        )

    def list_rect_expr(self, ty: ListT, env) -> Expr:
        elem = ty.elem
        h, t, r = fresh_var(), fresh_var(), fresh_var()
        inner_env = env + [(h, elem), (t, ty), (r, ty)]
        body = self.gen(ty, inner_env)
        step = lam(h, elem, lam(t, ty, lam(r, ty, body)))
        scrut = self.literal(ty)
        list_vars = [vid for vid, vt in env if vt == ty]
        if list_vars and self.rng.random() < 0.4:
            # constructor-headed scrutinee with an opaque tail: the recursor
            # steps through the literal prefix and residualizes the rest
            scrut = apps(ref(core.cons(elem)), self.gen(elem, env),
                         var(self.rng.choice(list_vars), ty))
        return apps(ref(core.list_rect(elem, ty)), self.gen(ty, env), step, scrut)

    def list_len_expr(self, env, list_vid: int) -> Expr:
        # fold a list variable down to an int with list_rect
        h, t, r = fresh_var(), fresh_var(), fresh_var()
        step = lam(h, INT, lam(t, ListT(INT), lam(r, INT, core.int_add(var(r, INT), lit(1)))))
        return apps(ref(core.list_rect(INT, INT)), lit(0), step, var(list_vid, ListT(INT)))


def random_term(
    rng: random.Random, max_size: int = 30, n_free: int = 3
) -> tuple[Expr, dict[int, Ty]]:
    """A random well-typed base-typed term over a few free variables."""
    free = {fresh_var(): random_base_type(rng) for _ in range(n_free)}
    ty = random_base_type(rng)
    g = TermGen(rng, max_size=max_size)
    return g.gen(ty, list(free.items())), free


def value_key(v: Value) -> tuple:
    """Stable structural key of a base-typed value (for seeding)."""
    match v:
        case VInt(x):
            return ("i", x)
        case VBool(x):
            return ("b", x)
        case VUnit():
            return ("u",)
        case VList(items):
            return ("l",) + tuple(value_key(x) for x in items)
        case VPair(a, b):
            return ("p", value_key(a), value_key(b))
    raise ValueError(f"cannot key value {v!r}")


def opaque_impl(name: str, ty: Ty, seed: int) -> Value:
    """Deterministic pseudo-random interpretation for an opaque symbol.

    Base results are drawn from a generator seeded by the symbol name and
    the argument values, so the function is pure and reproducible.
    """

    def build(t: Ty, args: tuple) -> Value:
        if isinstance(t, core.Arrow):
            return core.VFun(lambda x, _t=t, _a=args: build(_t.cod, _a + (value_key(x),)))
        rng = random.Random(repr((seed, name, args)))
        return random_value(t, rng)

    return build(ty, ())
