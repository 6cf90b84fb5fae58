"""Executable boolean side conditions over constant-matched pattern variables.

A condition is a closed arithmetic/boolean expression over pattern-variable
names; it may only mention variables the owning rule marked constant-only.
Evaluation is total: partial operations (log2floor of a non-positive input,
a negative exponent) make the whole condition false rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import EvalError, Expr, IdentRef, LetLiftError


class NonConstantBinding(LetLiftError):
    """A condition variable was bound to a non-literal expression.

    The matcher must prevent this; seeing it signals an engine bug.
    """


@dataclass(frozen=True)
class Cond:
    pass


@dataclass(frozen=True)
class CInt(Cond):
    v: int


@dataclass(frozen=True)
class CVar(Cond):
    name: str


@dataclass(frozen=True)
class CBin(Cond):
    op: str  # one of + - * ^ log2 == < <= && ||
    a: Cond
    b: Cond


@dataclass(frozen=True)
class CNot(Cond):
    a: Cond


@dataclass(frozen=True)
class CLog2(Cond):
    a: Cond


ARITH_OPS = {"+", "-", "*", "^"}
CMP_OPS = {"==", "<", "<="}
BOOL_OPS = {"&&", "||"}


def cond_vars(c: Cond) -> set[str]:
    match c:
        case CVar(name):
            return {name}
        case CBin(_, a, b):
            return cond_vars(a) | cond_vars(b)
        case CNot(a) | CLog2(a):
            return cond_vars(a)
        case _:
            return set()


class _Undefined(Exception):
    pass


def _arith(c: Cond, env: dict[str, int]) -> int:
    match c:
        case CInt(v):
            return v
        case CVar(name):
            return env[name]
        case CLog2(a):
            n = _arith(a, env)
            if n <= 0:
                raise _Undefined
            return n.bit_length() - 1
        case CBin("+", a, b):
            return _arith(a, env) + _arith(b, env)
        case CBin("-", a, b):
            return _arith(a, env) - _arith(b, env)
        case CBin("*", a, b):
            return _arith(a, env) * _arith(b, env)
        case CBin("^", a, b):
            base, e = _arith(a, env), _arith(b, env)
            if e < 0:
                raise _Undefined
            return base**e  # 0^0 == 1 by Python semantics, as required
        case _:
            raise EvalError(f"expected arithmetic condition, got {c!r}")


def _boolean(c: Cond, env: dict[str, int]) -> bool:
    match c:
        case CBin("==", a, b):
            return _arith(a, env) == _arith(b, env)
        case CBin("<", a, b):
            return _arith(a, env) < _arith(b, env)
        case CBin("<=", a, b):
            return _arith(a, env) <= _arith(b, env)
        case CBin("&&", a, b):
            return _boolean(a, env) and _boolean(b, env)
        case CBin("||", a, b):
            return _boolean(a, env) or _boolean(b, env)
        case CNot(a):
            return not _boolean(a, env)
        case _:
            raise EvalError(f"expected boolean condition, got {c!r}")


def binding_int(e: Expr) -> int:
    """Integer payload of a constant binding; engine bug if not a literal."""
    if isinstance(e, IdentRef) and e.ident.tag == "int_lit":
        return e.ident.payload[0]
    raise NonConstantBinding(f"condition variable bound to non-literal {e!r}")


def eval_side_condition(c: Cond, bindings: dict[str, Expr]) -> bool:
    """Total evaluation of a condition over constant bindings.

    A partial subterm (log2floor(n <= 0), negative exponent) makes the whole
    condition false, matching the requirement that conditions are executable
    total deciders.
    """
    env = {name: binding_int(bindings[name]) for name in cond_vars(c)}
    try:
        return _boolean(c, env)
    except _Undefined:
        return False


def eval_arith(c: Cond, bindings: dict[str, Expr]) -> int | None:
    """Arithmetic evaluation for right-hand-side constant splices.

    Returns None when undefined (the rule then does not fire).
    """
    env = {name: binding_int(bindings[name]) for name in cond_vars(c)}
    try:
        return _arith(c, env)
    except _Undefined:
        return None
