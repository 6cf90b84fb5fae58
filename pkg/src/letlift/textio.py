"""Textual syntax for terms and rule files.

Terms::

    term  ::= \\x : type . term | let x = term in term
            | term :: term | term + term | term - term
            | term * term | term / term | term >> term | term ^ term
            | atom atom ...        (application, left-associative)
    atom  ::= integer | (-integer) | true | false | () | identifier
            | ( term ) | [ term ; ... ] | nil[type]
            | clip[lo,hi](term) | comment["text"](term)
            | fst | snd | pair | log2floor | addcarry64
            | list_rect[elem,motive] | nat_rect[motive]
            | '( arith )           (constant splice; rule RHS only)
    type  ::= int | bool | unit | list type | type * type | type -> type

Application binds tightest; arrows associate right.  `fst`, `snd`, `pair`
and `::` infer their type instances from their arguments; the explicit
bracket forms (`fst[a,b]`, `pair[a,b]`, `cons[t]`) cover partial
applications.  Undeclared identifiers denote free int variables unless a
`free name : type` header precedes the term.

Rule files hold `symbol name : type` declarations and rules::

    rule <name> : forall (x : type) ('c : type) ... [, when ( cond )] ,
        <lhs-term> => <rhs-term>

An apostrophe on a binder marks a constant-only pattern variable; `when`
conditions and `'( ... )` splices may mention only those.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import core
from .conditions import CBin, CInt, CLog2, CNot, Cond, CVar
from .core import (
    BOOL,
    INT,
    UNIT,
    Abs,
    App,
    Arrow,
    Expr,
    IdentRef,
    LetIn,
    LetLiftError,
    ListT,
    PairT,
    Ty,
    Var,
    app_spine,
    fresh_var,
)
from .patterns import (
    PApp,
    PConstWild,
    PIdent,
    Pattern,
    PWild,
    RewriteRule,
    const_splice,
)


class ParseError(LetLiftError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


KEYWORDS = {
    "let", "in", "true", "false", "nil", "fst", "snd", "pair", "cons",
    "clip", "comment", "log2floor", "addcarry64", "list_rect", "nat_rect",
    "int", "bool", "unit", "list", "rule", "symbol", "forall", "when", "free",
    "add", "sub", "mul", "div", "shr", "pow",
}

_PUNCT = [
    "=>", "->", "::", ">>", "==", "<=", ">=", "!=", "&&", "||",
    "\\", ".", "(", ")", "[", "]", ";", ",", ":", "=", "+", "-", "*", "/",
    "^", "'", "<", ">", "!",
]


@dataclass
class Tok:
    kind: str  # int | ident | string | punct | eof
    text: str
    line: int
    col: int


def lex(src: str) -> list[Tok]:
    toks: list[Tok] = []
    i, line, col = 0, 1, 1

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if src[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < len(src):
        c = src[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if c == "#":
            while i < len(src) and src[i] != "\n":
                advance(1)
            continue
        if c.isdigit():
            j = i
            while j < len(src) and src[j].isdigit():
                j += 1
            toks.append(Tok("int", src[i:j], line, col))
            advance(j - i)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(Tok("ident", src[i:j], line, col))
            advance(j - i)
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < len(src) and src[j] != '"':
                if src[j] == "\\" and j + 1 < len(src):
                    buf.append(src[j + 1])
                    j += 2
                else:
                    buf.append(src[j])
                    j += 1
            if j >= len(src):
                raise ParseError("unterminated string literal", line, col)
            toks.append(Tok("string", "".join(buf), line, col))
            advance(j + 1 - i)
            continue
        for p in _PUNCT:
            if src.startswith(p, i):
                toks.append(Tok("punct", p, line, col))
                advance(len(p))
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Tok("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser


@dataclass
class SymTable:
    """Declared opaque symbols (name -> type)."""

    symbols: dict[str, Ty] = field(default_factory=dict)

    def declare(self, name: str, t: Ty) -> None:
        self.symbols[name] = t


@dataclass
class TermScope:
    """Names visible while parsing one term."""

    bound: dict[str, Var] = field(default_factory=dict)  # lexical binders
    free: dict[str, Var] = field(default_factory=dict)  # free variables
    declared_free: dict[str, Ty] = field(default_factory=dict)
    patvars: dict[str, Var] = field(default_factory=dict)  # rule binders
    allow_splice: bool = False
    auto_free: bool = True  # unknown identifiers become free int variables

    def free_map(self) -> dict[str, tuple[int, Ty]]:
        return {n: (v.vid, v.ty) for n, v in self.free.items()}


class _Parser:
    def __init__(self, toks: list[Tok], symtab: Optional[SymTable] = None):
        self.toks = toks
        self.pos = 0
        self.symtab = symtab or SymTable()

    # -- token plumbing
    def peek(self) -> Tok:
        return self.toks[self.pos]

    def next(self) -> Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at_punct(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text in texts

    def at_ident(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and (not texts or t.text in texts)

    def expect(self, kind: str, text: Optional[str] = None) -> Tok:
        t = self.next()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {t.text or t.kind!r}", t.line, t.col)
        return t

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # -- types
    def parse_type(self) -> Ty:
        left = self.parse_type_prod()
        if self.at_punct("->"):
            self.next()
            return Arrow(left, self.parse_type())
        return left

    def parse_type_prod(self) -> Ty:
        left = self.parse_type_atom()
        while self.at_punct("*"):
            self.next()
            left = PairT(left, self.parse_type_atom())
        return left

    def parse_type_atom(self) -> Ty:
        t = self.peek()
        if self.at_ident("int"):
            self.next()
            return INT
        if self.at_ident("bool"):
            self.next()
            return BOOL
        if self.at_ident("unit"):
            self.next()
            return UNIT
        if self.at_ident("list"):
            self.next()
            return ListT(self.parse_type_atom())
        if self.at_punct("("):
            self.next()
            inner = self.parse_type()
            self.expect("punct", ")")
            return inner
        raise ParseError(f"expected a type, found {t.text!r}", t.line, t.col)

    # -- terms
    def parse_term(self, scope: TermScope) -> Expr:
        t = self.peek()
        if self.at_punct("\\"):
            self.next()
            name = self.expect("ident").text
            self.expect("punct", ":")
            ty = self.parse_type()
            self.expect("punct", ".")
            v = core.var(fresh_var(), ty)
            saved = scope.bound.get(name)
            scope.bound[name] = v
            body = self.parse_term(scope)
            if saved is None:
                del scope.bound[name]
            else:
                scope.bound[name] = saved
            return core.lam(v.vid, ty, body)
        if self.at_ident("let"):
            self.next()
            name = self.expect("ident").text
            self.expect("punct", "=")
            rhs = self.parse_term(scope)
            self.expect("ident", "in")
            v = core.var(fresh_var(), rhs.ty)
            saved = scope.bound.get(name)
            scope.bound[name] = v
            body = self.parse_term(scope)
            if saved is None:
                del scope.bound[name]
            else:
                scope.bound[name] = saved
            return core.let_in(v.vid, rhs, body)
        return self.parse_cons(scope)

    def _binop(self, op_tag: str, a: Expr, b: Expr, tok: Tok) -> Expr:
        idents = {
            "+": core.add, "-": core.sub, "*": core.mul, "/": core.div,
            ">>": core.shr, "^": core.pow_,
        }
        try:
            return core.apps(core.ref(idents[op_tag]()), a, b)
        except LetLiftError as exc:
            raise ParseError(str(exc), tok.line, tok.col) from None

    def parse_cons(self, scope: TermScope) -> Expr:
        head = self.parse_additive(scope)
        if self.at_punct("::"):
            tok = self.next()
            tail = self.parse_cons(scope)
            try:
                return core.apps(core.ref(core.cons(head.ty)), head, tail)
            except LetLiftError as exc:
                raise ParseError(str(exc), tok.line, tok.col) from None
        return head

    def parse_additive(self, scope: TermScope) -> Expr:
        left = self.parse_multiplicative(scope)
        while self.at_punct("+", "-"):
            tok = self.next()
            left = self._binop(tok.text, left, self.parse_multiplicative(scope), tok)
        return left

    def parse_multiplicative(self, scope: TermScope) -> Expr:
        left = self.parse_pow(scope)
        while self.at_punct("*", "/", ">>"):
            tok = self.next()
            left = self._binop(tok.text, left, self.parse_pow(scope), tok)
        return left

    def parse_pow(self, scope: TermScope) -> Expr:
        left = self.parse_application(scope)
        if self.at_punct("^"):
            tok = self.next()
            return self._binop("^", left, self.parse_pow(scope), tok)
        return left

    def parse_application(self, scope: TermScope) -> Expr:
        tok = self.peek()
        head = self.parse_atom(scope)
        args: list[Expr] = []
        while self._at_atom_start():
            args.append(self.parse_atom(scope))
        return self._apply(head, args, tok)

    def _at_atom_start(self) -> bool:
        t = self.peek()
        if t.kind in ("int", "string"):
            return t.kind == "int"
        if t.kind == "ident":
            return t.text not in ("in", "rule", "symbol", "when", "free")
        return t.kind == "punct" and t.text in ("(", "[")

    def _apply(self, head, args: list[Expr], tok: Tok) -> Expr:
        # `head` is an Expr or an unresolved polymorphic builtin name.
        if isinstance(head, str):
            head = self._resolve_builtin(head, args, tok)
        e = head
        for a in args:
            try:
                e = core.app(e, a)
            except LetLiftError as exc:
                raise ParseError(str(exc), tok.line, tok.col) from None
        return e

    def _resolve_builtin(self, name: str, args: list[Expr], tok: Tok) -> Expr:
        def err(msg):
            raise ParseError(msg, tok.line, tok.col)

        if name in ("fst", "snd"):
            if not args or not isinstance(args[0].ty, PairT):
                err(f"cannot infer the pair type of {name}; use {name}[a,b]")
            pt = args[0].ty
            mk = core.fst if name == "fst" else core.snd
            return core.ref(mk(pt.fst, pt.snd))
        if name == "pair":
            if len(args) < 2:
                err("cannot infer the type of a partially applied pair; use pair[a,b]")
            return core.ref(core.pair_mk(args[0].ty, args[1].ty))
        if name == "cons":
            if not args:
                err("cannot infer the element type of cons; use cons[t]")
            return core.ref(core.cons(args[0].ty))
        raise AssertionError(name)

    def parse_atom(self, scope: TermScope):
        t = self.peek()
        if t.kind == "int":
            self.next()
            return core.lit(int(t.text))
        if self.at_punct("'"):
            # constant splice '( arith )
            self.next()
            if not scope.allow_splice:
                raise ParseError("constant splices are only allowed in rule right-hand sides",
                                 t.line, t.col)
            self.expect("punct", "(")
            c = self.parse_cond_or(scope, arith_only=True)
            self.expect("punct", ")")
            return core.ref(const_splice(c))
        if self.at_punct("("):
            self.next()
            if self.at_punct(")"):
                self.next()
                return core.ref(core.unit_lit())
            if self.at_punct("-") and self.toks[self.pos + 1].kind == "int":
                self.next()
                v = int(self.expect("int").text)
                self.expect("punct", ")")
                return core.lit(-v)
            inner = self.parse_term(scope)
            self.expect("punct", ")")
            return inner
        if self.at_punct("["):
            self.next()
            elems = []
            if not self.at_punct("]"):
                elems.append(self.parse_term(scope))
                while self.at_punct(";"):
                    self.next()
                    elems.append(self.parse_term(scope))
            close = self.expect("punct", "]")
            if not elems:
                raise ParseError("empty list literal needs a type: use nil[t]", close.line,
                                 close.col)
            return core.build_list(elems, elems[0].ty)
        if t.kind != "ident":
            raise ParseError(f"expected a term, found {t.text or t.kind!r}", t.line, t.col)
        name = self.next().text
        if name == "true":
            return core.ref(core.bool_lit(True))
        if name == "false":
            return core.ref(core.bool_lit(False))
        if name == "nil":
            self.expect("punct", "[")
            ty = self.parse_type()
            self.expect("punct", "]")
            return core.ref(core.nil(ty))
        if name == "log2floor":
            return core.ref(core.log2floor())
        if name == "addcarry64":
            return core.ref(core.add_with_carry64())
        if name == "clip":
            if self.at_punct("["):
                self.next()
                lo = self._signed_int()
                self.expect("punct", ",")
                hi = self._signed_int()
                self.expect("punct", "]")
                self.expect("punct", "(")
                arg = self.parse_term(scope)
                self.expect("punct", ")")
                return core.apps(core.ref(core.clip()), core.lit(lo), core.lit(hi), arg)
            return core.ref(core.clip())
        if name == "comment":
            self.expect("punct", "[")
            txt = self.expect("string").text
            self.expect("punct", "]")
            self.expect("punct", "(")
            arg = self.parse_term(scope)
            self.expect("punct", ")")
            return core.app(core.ref(core.comment(txt, arg.ty)), arg)
        if name == "list_rect":
            self.expect("punct", "[")
            elem = self.parse_type()
            self.expect("punct", ",")
            motive = self.parse_type()
            self.expect("punct", "]")
            return core.ref(core.list_rect(elem, motive))
        if name == "nat_rect":
            self.expect("punct", "[")
            motive = self.parse_type()
            self.expect("punct", "]")
            return core.ref(core.nat_rect(motive))
        if name in ("add", "sub", "mul", "div", "shr", "pow"):
            mk = {"add": core.add, "sub": core.sub, "mul": core.mul,
                  "div": core.div, "shr": core.shr, "pow": core.pow_}[name]
            return core.ref(mk())
        if name in ("fst", "snd", "pair", "cons"):
            if self.at_punct("["):
                self.next()
                t1 = self.parse_type()
                if name == "cons":
                    self.expect("punct", "]")
                    return core.ref(core.cons(t1))
                self.expect("punct", ",")
                t2 = self.parse_type()
                self.expect("punct", "]")
                mk = {"fst": core.fst, "snd": core.snd, "pair": core.pair_mk}[name]
                return core.ref(mk(t1, t2))
            return name  # resolved from arguments at application time
        # plain identifier: binder, pattern variable, symbol, or free var
        if name in scope.bound:
            return scope.bound[name]
        if name in scope.patvars:
            return scope.patvars[name]
        if name in self.symtab.symbols:
            return core.ref(core.opaque(name, self.symtab.symbols[name]))
        if name in scope.free:
            return scope.free[name]
        if not scope.auto_free and name not in scope.declared_free:
            raise ParseError(f"unknown identifier {name!r}", t.line, t.col)
        ty = scope.declared_free.get(name, INT)
        v = core.var(fresh_var(), ty)
        scope.free[name] = v
        return v

    def _signed_int(self) -> int:
        neg = False
        if self.at_punct("-"):
            self.next()
            neg = True
        v = int(self.expect("int").text)
        return -v if neg else v

    # -- side conditions
    def parse_cond_or(self, scope: TermScope, arith_only: bool = False) -> Cond:
        left = self.parse_cond_and(scope, arith_only)
        while self.at_punct("||"):
            self.next()
            left = CBin("||", left, self.parse_cond_and(scope, arith_only))
        return left

    def parse_cond_and(self, scope: TermScope, arith_only: bool) -> Cond:
        left = self.parse_cond_cmp(scope, arith_only)
        while self.at_punct("&&"):
            self.next()
            left = CBin("&&", left, self.parse_cond_cmp(scope, arith_only))
        return left

    def parse_cond_cmp(self, scope: TermScope, arith_only: bool) -> Cond:
        if self.at_punct("!"):
            self.next()
            return CNot(self.parse_cond_cmp(scope, arith_only))
        left = self.parse_cond_add(scope)
        if self.at_punct("==", "<", "<=", ">", ">=", "!="):
            op = self.next().text
            right = self.parse_cond_add(scope)
            if op == "==":
                return CBin("==", left, right)
            if op == "<":
                return CBin("<", left, right)
            if op == "<=":
                return CBin("<=", left, right)
            if op == ">":
                return CBin("<", right, left)
            if op == ">=":
                return CBin("<=", right, left)
            return CNot(CBin("==", left, right))
        if arith_only:
            return left
        self.fail("expected a comparison in the condition")

    def parse_cond_add(self, scope: TermScope) -> Cond:
        left = self.parse_cond_mul(scope)
        while self.at_punct("+", "-"):
            op = self.next().text
            left = CBin(op, left, self.parse_cond_mul(scope))
        return left

    def parse_cond_mul(self, scope: TermScope) -> Cond:
        left = self.parse_cond_pow(scope)
        while self.at_punct("*"):
            self.next()
            left = CBin("*", left, self.parse_cond_pow(scope))
        return left

    def parse_cond_pow(self, scope: TermScope) -> Cond:
        left = self.parse_cond_atom(scope)
        if self.at_punct("^"):
            self.next()
            return CBin("^", left, self.parse_cond_pow(scope))
        return left

    def parse_cond_atom(self, scope: TermScope) -> Cond:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return CInt(int(t.text))
        if self.at_punct("-") and self.toks[self.pos + 1].kind == "int":
            self.next()
            return CInt(-int(self.next().text))
        if self.at_punct("("):
            self.next()
            inner = self.parse_cond_or(scope, arith_only=True)
            self.expect("punct", ")")
            return inner
        if self.at_ident("log2floor"):
            self.next()
            return CLog2(self.parse_cond_atom(scope))
        if t.kind == "ident":
            self.next()
            return CVar(t.text)
        self.fail("expected a condition atom")


# ---------------------------------------------------------------------------
# File-level entry points


def parse_term_text(
    src: str,
    symtab: Optional[SymTable] = None,
    declared_free: Optional[dict[str, Ty]] = None,
    free_vars: Optional[dict[str, tuple[int, Ty]]] = None,
) -> tuple[Expr, dict[str, tuple[int, Ty]]]:
    """Parse a term, optionally preceded by `free name : type` headers.

    Undeclared identifiers become free int variables.  Returns the term and
    the name -> (VarId, type) table for its free variables.  Passing a
    previous parse's table as `free_vars` makes the same names resolve to
    the same variable ids (what print/parse round-tripping needs).
    """
    p = _Parser(lex(src), symtab)
    scope = TermScope(declared_free=dict(declared_free or {}))
    for n, (vid, t) in (free_vars or {}).items():
        scope.free[n] = core.var(vid, t)
    while p.at_ident("free"):
        p.next()
        name = p.expect("ident").text
        p.expect("punct", ":")
        scope.declared_free[name] = p.parse_type()
    e = p.parse_term(scope)
    p.expect("eof")
    return e, scope.free_map()


def _expr_to_pattern(e: Expr, patvars: dict[str, Var], const_names: set[str],
                     rule_name: str) -> Pattern:
    by_vid = {v.vid: n for n, v in patvars.items()}
    match e:
        case Var(_, vid) if vid in by_vid:
            n = by_vid[vid]
            return PConstWild(n) if n in const_names else PWild(n)
        case Var():
            raise LetLiftError(f"rule {rule_name}: LHS mentions an unquantified variable")
        case IdentRef(_, ident):
            if ident.tag == "const_splice":
                raise LetLiftError(f"rule {rule_name}: splices cannot appear in a LHS")
            return PIdent(ident)
        case App(_, fn, arg):
            return PApp(
                _expr_to_pattern(fn, patvars, const_names, rule_name),
                _expr_to_pattern(arg, patvars, const_names, rule_name),
            )
        case _:
            raise LetLiftError(f"rule {rule_name}: LHS patterns cannot contain binders")


def parse_rules_text(src: str, symtab: Optional[SymTable] = None) -> tuple[list[RewriteRule], SymTable]:
    """Parse a rule file: `symbol` declarations and `rule` definitions."""
    symtab = symtab or SymTable()
    p = _Parser(lex(src), symtab)
    rules: list[RewriteRule] = []
    while True:
        if p.peek().kind == "eof":
            break
        if p.at_ident("symbol"):
            p.next()
            name = p.expect("ident").text
            p.expect("punct", ":")
            symtab.declare(name, p.parse_type())
            continue
        kw = p.expect("ident")
        if kw.text != "rule":
            raise ParseError("expected 'rule' or 'symbol'", kw.line, kw.col)
        name = p.expect("ident").text
        p.expect("punct", ":")
        p.expect("ident", "forall")
        binders: list[tuple[str, Ty, bool]] = []
        while p.at_punct("("):
            p.next()
            is_const = False
            if p.at_punct("'"):
                p.next()
                is_const = True
            bname = p.expect("ident").text
            p.expect("punct", ":")
            bty = p.parse_type()
            p.expect("punct", ")")
            binders.append((bname, bty, is_const))
        if not binders:
            p.fail("a rule needs at least one quantified variable")
        p.expect("punct", ",")
        scope = TermScope(auto_free=False)
        scope.patvars = {n: core.var(fresh_var(), t) for n, t, _ in binders}
        cond = None
        if p.at_ident("when"):
            p.next()
            p.expect("punct", "(")
            cond = p.parse_cond_or(scope)
            p.expect("punct", ")")
            p.expect("punct", ",")
        lhs_expr = p.parse_term(scope)
        p.expect("punct", "=>")
        scope.allow_splice = True
        rhs = p.parse_term(scope)
        scope.allow_splice = False
        const_names = {n for n, _, c in binders if c}
        lhs = _expr_to_pattern(lhs_expr, scope.patvars, const_names, name)
        rule = RewriteRule(
            name=name,
            binders=tuple(binders),
            lhs=lhs,
            rhs=rhs,
            cond=cond,
            priority=len(rules),
            patvar_vids={n: v.vid for n, v in scope.patvars.items()},
        )
        rules.append(rule)
    return rules, symtab


# ---------------------------------------------------------------------------
# Printers


def print_type(t: Ty, prec: int = 0) -> str:
    # prec: 0 arrow, 1 product, 2 atom
    match t:
        case core.IntT():
            return "int"
        case core.BoolT():
            return "bool"
        case core.UnitT():
            return "unit"
        case ListT(elem):
            return f"list {print_type(elem, 2)}"
        case PairT(a, b):
            s = f"{print_type(a, 2)} * {print_type(b, 2)}"
            return f"({s})" if prec > 1 else s
        case Arrow(d, c):
            s = f"{print_type(d, 1)} -> {print_type(c, 0)}"
            return f"({s})" if prec > 0 else s
    raise LetLiftError(f"unknown type {t!r}")


_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/", "shr": ">>", "pow": "^"}
_PREC_LOW, _PREC_CONS, _PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_APP, _PREC_ATOM = range(7)
_OP_PREC = {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL,
            ">>": _PREC_MUL, "^": _PREC_POW}


class _Printer:
    def __init__(self, names: Optional[dict[int, str]] = None):
        self.names = dict(names or {})
        self.used = set(self.names.values()) | KEYWORDS
        self.counter = 0

    def name_of(self, vid: int) -> str:
        if vid not in self.names:
            self.names[vid] = f"v{vid}"
        return self.names[vid]

    def fresh_name(self, vid: int) -> str:
        while True:
            cand = f"x{self.counter}"
            self.counter += 1
            if cand not in self.used:
                self.used.add(cand)
                self.names[vid] = cand
                return cand

    def go(self, e: Expr, prec: int) -> str:
        match e:
            case Var(_, vid):
                return self.name_of(vid)
            case IdentRef():
                return self.ident_atom(e.ident, applied=0)
            case Abs(_, param, pty, body):
                n = self.fresh_name(param)
                s = f"\\{n} : {print_type(pty)}. {self.go(body, _PREC_LOW)}"
                return f"({s})" if prec > _PREC_LOW else s
            case LetIn():
                parts = []
                cur = e
                while isinstance(cur, LetIn):
                    n = self.fresh_name(cur.bound)
                    parts.append(f"let {n} = {self.go(cur.rhs, _PREC_LOW)} in")
                    cur = cur.body
                s = " ".join(parts) + " " + self.go(cur, _PREC_LOW)
                return f"({s})" if prec > _PREC_LOW else s
            case App():
                return self.print_app(e, prec)
        raise LetLiftError(f"cannot print {e!r}")

    def print_app(self, e: App, prec: int) -> str:
        head, args = app_spine(e)
        if isinstance(head, IdentRef):
            tag = head.ident.tag
            if tag in _INFIX and len(args) == 2:
                op = _INFIX[tag]
                p = _OP_PREC[op]
                if op == "^":  # right-associative
                    lhs, rhs = self.go(args[0], p + 1), self.go(args[1], p)
                else:
                    lhs, rhs = self.go(args[0], p), self.go(args[1], p + 1)
                s = f"{lhs} {op} {rhs}"
                return f"({s})" if prec > p else s
            if tag == "cons" and len(args) == 2:
                sp = core.list_spine(e)
                if sp is not None:
                    return "[" + "; ".join(self.go(x, _PREC_LOW) for x in sp) + "]"
                s = f"{self.go(args[0], _PREC_CONS + 1)} :: {self.go(args[1], _PREC_CONS)}"
                return f"({s})" if prec > _PREC_CONS else s
            if tag == "clip" and len(args) == 3 and _is_int_lit(args[0]) and _is_int_lit(args[1]):
                lo = args[0].ident.payload[0]
                hi = args[1].ident.payload[0]
                return f"clip[{lo},{hi}]({self.go(args[2], _PREC_LOW)})"
            if tag == "comment" and len(args) == 1:
                txt = head.ident.payload[0].replace("\\", "\\\\").replace('"', '\\"')
                return f'comment["{txt}"]({self.go(args[0], _PREC_LOW)})'
            strs = [self.ident_atom(head.ident, applied=len(args))]
            strs += [self.go(a, _PREC_APP + 1) for a in args]
            s = " ".join(strs)
            return f"({s})" if prec > _PREC_APP else s
        strs = [self.go(head, _PREC_APP + 1)] + [self.go(a, _PREC_APP + 1) for a in args]
        s = " ".join(strs)
        return f"({s})" if prec > _PREC_APP else s

    def ident_atom(self, ident, applied: int) -> str:
        tag = ident.tag
        match tag:
            case "int_lit":
                v = ident.payload[0]
                return str(v) if v >= 0 else f"({v})"
            case "bool_lit":
                return "true" if ident.payload[0] else "false"
            case "unit_lit":
                return "()"
            case "nil":
                return f"nil[{print_type(ident.payload[0])}]"
            case "opaque":
                return ident.payload[0]
            case "list_rect":
                e, m = ident.payload
                return f"list_rect[{print_type(e)},{print_type(m)}]"
            case "nat_rect":
                return f"nat_rect[{print_type(ident.payload[0])}]"
            case "fst" | "snd":
                if applied >= 1:
                    return tag
                a, b = ident.payload
                return f"{tag}[{print_type(a)},{print_type(b)}]"
            case "pair":
                if applied >= 2:
                    return "pair"
                a, b = ident.payload
                return f"pair[{print_type(a)},{print_type(b)}]"
            case "cons":
                return f"cons[{print_type(ident.payload[0])}]"
            case "clip":
                return "clip"
            case "log2floor":
                return "log2floor"
            case "addcarry64":
                return "addcarry64"
            case "const_splice":
                return f"'({print_cond(ident.payload[0])})"
            case _:
                if tag in _INFIX:
                    return tag  # prefix name: add, sub, mul, div, shr, pow
                raise LetLiftError(f"cannot print identifier {ident!r}")


def _is_int_lit(e: Expr) -> bool:
    return isinstance(e, IdentRef) and e.ident.tag == "int_lit"


def print_term(e: Expr, names: Optional[dict[int, str]] = None) -> str:
    """Render a term in the surface syntax; free variables print under
    `names` (falling back to v<id>), binders get fresh printable names."""
    return _Printer(names).go(e, _PREC_LOW)


def print_cond(c: Cond, prec: int = 0) -> str:
    # prec: 0 or, 1 and, 2 cmp/not, 3 add, 4 mul, 5 pow, 6 atom
    match c:
        case CInt(v):
            return str(v) if v >= 0 else f"(-{-v})"
        case CVar(n):
            return n
        case CLog2(a):
            return f"log2floor {print_cond(a, 6)}"
        case CNot(CBin("==", a, b)):
            s = f"{print_cond(a, 3)} != {print_cond(b, 3)}"
            return f"({s})" if prec > 2 else s
        case CNot(a):
            return f"!{print_cond(a, 6)}"
        case CBin(op, a, b):
            table = {"||": 0, "&&": 1, "==": 2, "<": 2, "<=": 2, "+": 3, "-": 3, "*": 4, "^": 5}
            p = table[op]
            if op in ("==", "<", "<="):
                s = f"{print_cond(a, 3)} {op} {print_cond(b, 3)}"
            elif op == "^":
                s = f"{print_cond(a, p + 1)} {op} {print_cond(b, p)}"
            else:
                s = f"{print_cond(a, p)} {op} {print_cond(b, p + 1)}"
            return f"({s})" if prec > p else s
    raise LetLiftError(f"cannot print condition {c!r}")


def print_rule(rule: RewriteRule) -> str:
    binders = " ".join(
        "({}{} : {})".format("'" if c else "", n, print_type(t)) for n, t, c in rule.binders
    )
    names = {vid: n for n, vid in rule.patvar_vids.items()}
    lhs = print_term(_pattern_to_expr(rule.lhs, rule), names)
    rhs = print_term(rule.rhs, names)
    when = f"when ({print_cond(rule.cond)}), " if rule.cond is not None else ""
    return f"rule {rule.name} : forall {binders}, {when}{lhs} => {rhs}"


def _pattern_to_expr(p: Pattern, rule: RewriteRule) -> Expr:
    match p:
        case PWild(n) | PConstWild(n):
            return core.var(rule.patvar_vids[n], rule.binder_type(n))
        case PIdent(i):
            return core.ref(i)
        case PApp(fn, arg):
            return core.app(_pattern_to_expr(fn, rule), _pattern_to_expr(arg, rule))
    raise LetLiftError(f"cannot print pattern {p!r}")


def print_rules(rules: list[RewriteRule], symbols: Optional[dict[str, Ty]] = None) -> str:
    lines = []
    for name in sorted(symbols or {}):
        lines.append(f"symbol {name} : {print_type(symbols[name])}")
    if lines:
        lines.append("")
    lines.extend(print_rule(r) for r in rules)
    return "\n".join(lines) + "\n"


def rules_equal(r1: RewriteRule, r2: RewriteRule) -> bool:
    """Structural rule equality (pattern-variable names significant)."""
    if (r1.name, r1.binders, r1.lhs, r1.cond) != (r2.name, r2.binders, r2.lhs, r2.cond):
        return False
    # Compare templates with r2's pattern vids renamed to r1's.
    ren = {}
    for n, vid in r2.patvar_vids.items():
        if n not in r1.patvar_vids:
            return False
        ren[vid] = core.var(r1.patvar_vids[n], r1.binder_type(n))
    return core.alpha_eq(r1.rhs, core.subst(r2.rhs, ren))
