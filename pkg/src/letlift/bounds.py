"""Interval abstract interpretation over base-typed straightline programs.

The analysis infers a conservative [lo, hi) interval (inclusive lower,
exclusive upper) for every let-bound variable of a straightline program,
then rewrites every integer variable occurrence x with known bounds into
clip lo hi x.  The clip family is semantically the identity on in-range
arguments, so the annotated program denotes the same values on every
valuation that respects the declared input bounds; its purpose is to put
the bounds into the syntax as constants, where bounds-conditioned rewrite
rules can match them and decide their side conditions at rewrite time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from . import core
from .core import (
    INT,
    Abs,
    App,
    Expr,
    Ident,
    IdentRef,
    LetIn,
    LetLiftError,
    Var,
    app_spine,
    apps,
    clip_value,
    ref,
)


class NonStraightlineInput(LetLiftError):
    pass


class UnsupportedOp(LetLiftError):
    pass


@dataclass(frozen=True)
class Interval:
    """Integer interval [lo, hi): inclusive lower, exclusive upper bound."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo >= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi})")

    def contains(self, n: int) -> bool:
        return self.lo <= n < self.hi

    def subset(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi


class _Unknown:
    """Top element: no information."""

    def __repr__(self):
        return "UNKNOWN"


UNKNOWN = _Unknown()


@dataclass(frozen=True)
class PairAbs:
    """Componentwise abstraction of a pair value."""

    fst: Union[Interval, _Unknown]
    snd: Union[Interval, _Unknown]


AbsVal = Union[Interval, _Unknown, PairAbs]
BoundsEnv = dict[int, AbsVal]


def _corners(a: Interval, b: Interval, f) -> Interval:
    """Interval from corner evaluation; sound for operators monotone in
    each argument over the corner rectangle."""
    vals = [f(x, y) for x in (a.lo, a.hi - 1) for y in (b.lo, b.hi - 1)]
    return Interval(min(vals), max(vals) + 1)


def interval_op(op: Ident, args: list[AbsVal]) -> AbsVal:
    """Sound abstract transfer for one identifier application.

    Supported: literals, add, sub, mul, shr, clip, addcarry64, and the
    pair constructors/projections.  Anything else raises UnsupportedOp
    (the analysis then records Unknown).  Unknown inputs are absorbing
    except where the operator's result range is fixed regardless.
    """
    tag = op.tag
    if tag == "int_lit":
        v = op.payload[0]
        return Interval(v, v + 1)
    if tag == "pair":
        a, b = args
        return PairAbs(a if not isinstance(a, PairAbs) else UNKNOWN,
                       b if not isinstance(b, PairAbs) else UNKNOWN)
    if tag == "fst":
        (p,) = args
        return p.fst if isinstance(p, PairAbs) else UNKNOWN
    if tag == "snd":
        (p,) = args
        return p.snd if isinstance(p, PairAbs) else UNKNOWN
    if tag == "clip":
        lo_i, hi_i, n = args
        if not (isinstance(lo_i, Interval) and isinstance(hi_i, Interval)):
            return UNKNOWN
        if lo_i.hi - lo_i.lo != 1 or hi_i.hi - hi_i.lo != 1:
            return UNKNOWN  # non-constant clip parameters
        lo, hi = lo_i.lo, hi_i.lo
        if lo >= hi:
            return Interval(lo, lo + 1)  # degenerate clip always yields lo
        if isinstance(n, Interval) and n.subset(Interval(lo, hi)):
            return n
        return Interval(lo, hi)
    if tag == "addcarry64":
        a, b = args
        if not (isinstance(a, Interval) and isinstance(b, Interval)):
            return PairAbs(UNKNOWN, UNKNOWN)
        s = Interval(a.lo + b.lo, (a.hi - 1) + (b.hi - 1) + 1)
        q_lo = s.lo // core.TWO64
        q_hi = (s.hi - 1) // core.TWO64
        carry = Interval(q_lo, q_hi + 1)
        if q_lo == q_hi:
            low = Interval(s.lo % core.TWO64, (s.hi - 1) % core.TWO64 + 1)
        else:
            low = Interval(0, core.TWO64)
        return PairAbs(carry, low)
    if tag in ("add", "sub", "mul", "shr"):
        a, b = args
        if not (isinstance(a, Interval) and isinstance(b, Interval)):
            return UNKNOWN
        if tag == "add":
            return Interval(a.lo + b.lo, (a.hi - 1) + (b.hi - 1) + 1)
        if tag == "sub":
            return Interval(a.lo - (b.hi - 1), (a.hi - 1) - b.lo + 1)
        if tag == "mul":
            return _corners(a, b, lambda x, y: x * y)
        # shr: undefined for negative shift amounts
        if b.lo < 0:
            return UNKNOWN
        return _corners(a, b, lambda x, y: x >> y)
    raise UnsupportedOp(f"no abstract transfer for identifier {op!r}")


def abstract_eval(e: Expr, env: BoundsEnv) -> AbsVal:
    """Abstract value of a binder-free expression under `env`."""
    match e:
        case Var(_, vid):
            return env.get(vid, UNKNOWN)
        case IdentRef(_, ident):
            if ident.tag == "int_lit":
                return interval_op(ident, [])
            return UNKNOWN
        case App():
            head, args = app_spine(e)
            if not isinstance(head, IdentRef):
                return UNKNOWN
            if core.arity(head.ident.ty) != len(args):
                return UNKNOWN
            vals = [abstract_eval(a, env) for a in args]
            try:
                return interval_op(head.ident, vals)
            except UnsupportedOp:
                return UNKNOWN
        case _:
            return UNKNOWN


def _check_flat(e: Expr, what: str) -> None:
    for t in core.subterms(e):
        if isinstance(t, (Abs, LetIn)):
            raise NonStraightlineInput(f"{what} contains a binder; not straightline code")


def _wrap_occurrences(e: Expr, env: BoundsEnv) -> Expr:
    """Rewrite each integer variable occurrence with known bounds into a
    clip application recording them."""
    match e:
        case Var(ty, vid):
            iv = env.get(vid, UNKNOWN)
            if ty == INT and isinstance(iv, Interval):
                return apps(ref(core.clip()), core.lit(iv.lo), core.lit(iv.hi), e)
            return e
        case App(ty, fn, arg):
            return App(ty, _wrap_occurrences(fn, env), _wrap_occurrences(arg, env))
        case _:
            return e


def analyze_and_clip(e: Expr, input_bounds: BoundsEnv) -> Expr:
    """Interval analysis over a straightline program, followed by clip
    insertion at every variable occurrence with known bounds.

    The program shape is a chain of let bindings over binder-free
    arithmetic right-hand sides, optionally under top-level lambdas whose
    parameters draw their intervals from `input_bounds`.  The result
    denotes the same value as the input for every valuation inside the
    declared bounds.
    """
    env: BoundsEnv = dict(input_bounds)

    def go(e: Expr) -> Expr:
        match e:
            case Abs(ty, param, param_ty, body):
                return Abs(ty, param, param_ty, go(body))
            case LetIn(ty, v, rhs, body):
                _check_flat(rhs, "let right-hand side")
                wrapped = _wrap_occurrences(rhs, env)
                env[v] = abstract_eval(rhs, env)
                return LetIn(ty, v, wrapped, go(body))
            case _:
                _check_flat(e, "program body")
                return _wrap_occurrences(e, env)

    return go(e)


def clip_semantics(lo: int, hi: int, n: int) -> int:
    """The documented total extension: identity on [lo, hi), else lo."""
    return clip_value(lo, hi, n)


def parse_bounds_flag(spec: str) -> tuple[str, Interval]:
    """Parse a CLI bounds declaration `name=lo..hi` (hi exclusive)."""
    try:
        name, rng = spec.split("=", 1)
        lo_s, hi_s = rng.split("..", 1)
        return name.strip(), Interval(int(lo_s), int(hi_s))
    except ValueError as exc:
        raise LetLiftError(f"bad bounds declaration {spec!r}: expected name=lo..hi") from exc
