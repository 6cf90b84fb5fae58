"""Rule sets: well-formedness-checked rule lists with their compiled tree,
plus the standard libraries used by the CLI and the benchmarks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from . import core
from .conditions import CBin, CInt, CLog2, CVar
from .core import INT, LetLiftError, Ty, apps, arrows, lit, ref
from .dtree import DTree, compile_rules
from .patterns import (
    PApp,
    PConstWild,
    PIdent,
    Pattern,
    PWild,
    RewriteRule,
    WfError,
    check_rule_wf,
    const_splice,
)


@dataclass
class RuleSet:
    """An ordered list of rules with the decision tree compiled from their
    left-hand sides.  Construction rejects ill-formed rules."""

    rules: list[RewriteRule]
    tree: DTree = field(init=False)
    symbols: dict[str, Ty] = field(default_factory=dict)

    def __post_init__(self):
        errors = self.check()
        if errors:
            raise LetLiftError("; ".join(str(e) for e in errors))
        self.tree = compile_rules(self.rules)

    def check(self) -> list[WfError]:
        out: list[WfError] = []
        for r in self.rules:
            out.extend(check_rule_wf(r))
        return out

    def by_name(self, name: str) -> RewriteRule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)


def papp(*ps: Pattern) -> Pattern:
    p = ps[0]
    for q in ps[1:]:
        p = PApp(p, q)
    return p


def pident(i) -> PIdent:
    return PIdent(i)


def _binop_pat(op, a: Pattern, b: Pattern) -> Pattern:
    return papp(PIdent(op), a, b)


def add_zero_rule(priority: int = 0) -> RewriteRule:
    # ?n + 0 -> n
    return RewriteRule.make(
        "add_zero",
        [("n", INT, False)],
        _binop_pat(core.add(), PWild("n"), PIdent(core.int_lit(0))),
        lambda v: v["n"],
        priority=priority,
    )


def fst_pair_rule(a: Ty = INT, b: Ty = INT, priority: int = 0) -> RewriteRule:
    # fst (pair ?x ?y) -> x
    return RewriteRule.make(
        "fst_pair",
        [("x", a, False), ("y", b, False)],
        papp(PIdent(core.fst(a, b)), papp(PIdent(core.pair_mk(a, b)), PWild("x"), PWild("y"))),
        lambda v: v["x"],
        priority=priority,
    )


def snd_pair_rule(a: Ty = INT, b: Ty = INT, priority: int = 0) -> RewriteRule:
    return RewriteRule.make(
        "snd_pair",
        [("x", a, False), ("y", b, False)],
        papp(PIdent(core.snd(a, b)), papp(PIdent(core.pair_mk(a, b)), PWild("x"), PWild("y"))),
        lambda v: v["y"],
        priority=priority,
    )


def div_shift_rule(priority: int = 0) -> RewriteRule:
    # ?n / 'm -> n >> '(log2floor m)   when 2 ^ log2floor m == m
    cond = CBin("==", CBin("^", CInt(2), CLog2(CVar("m"))), CVar("m"))
    return RewriteRule.make(
        "div_shift",
        [("n", INT, False), ("m", INT, True)],
        _binop_pat(core.div(), PWild("n"), PConstWild("m")),
        lambda v: apps(ref(core.shr()), v["n"], ref(const_splice(CLog2(CVar("m"))))),
        cond=cond,
        priority=priority,
    )


def awc_clip_rule(priority: int = 0) -> RewriteRule:
    # addcarry64 (clip 'l 'u ?n) 0 -> pair 0 (clip 'l 'u n)
    #   when 0 <= l && u <= 2^64
    # With the exclusive upper bound of clip, u <= 2^64 is exactly what
    # guarantees the clipped value fits in one 64-bit word.
    cond = CBin(
        "&&",
        CBin("<=", CInt(0), CVar("l")),
        CBin("<=", CVar("u"), CBin("^", CInt(2), CInt(64))),
    )
    clip_pat = papp(PIdent(core.clip()), PConstWild("l"), PConstWild("u"), PWild("n"))

    def rhs(v):
        clipped = apps(ref(core.clip()), v["l"], v["u"], v["n"])
        return apps(ref(core.pair_mk(INT, INT)), lit(0), clipped)

    return RewriteRule.make(
        "awc_clip",
        [("l", INT, True), ("u", INT, True), ("n", INT, False)],
        papp(PIdent(core.add_with_carry64()), clip_pat, PIdent(core.int_lit(0))),
        rhs,
        cond=cond,
        priority=priority,
    )


def _fold_binop(name: str, op_ident, splice_op: str, guard=None, priority: int = 0) -> RewriteRule:
    cond = guard
    return RewriteRule.make(
        name,
        [("a", INT, True), ("b", INT, True)],
        _binop_pat(op_ident, PConstWild("a"), PConstWild("b")),
        lambda v: ref(const_splice(CBin(splice_op, CVar("a"), CVar("b")))),
        cond=cond,
        priority=priority,
    )


def fold_rules() -> list[RewriteRule]:
    """Literal folding for the arithmetic fragment; shipped as an optional
    library, never baked into the engine."""
    fold_pow = _fold_binop(
        "fold_pow", core.pow_(), "^", guard=CBin("<=", CInt(0), CVar("b"))
    )
    fold_log2 = RewriteRule.make(
        "fold_log2floor",
        [("a", INT, True)],
        papp(PIdent(core.log2floor()), PConstWild("a")),
        lambda v: ref(const_splice(CLog2(CVar("a")))),
        cond=CBin("<", CInt(0), CVar("a")),
    )
    rules = [
        _fold_binop("fold_add", core.add(), "+"),
        _fold_binop("fold_sub", core.sub(), "-"),
        _fold_binop("fold_mul", core.mul(), "*"),
        fold_pow,
        fold_log2,
    ]
    for i, r in enumerate(rules):
        r.priority = i
    return rules


MAP_SYMBOL = "map"


def map_symbol_type() -> Ty:
    return arrows(arrows(INT, INT), core.ListT(INT), core.ListT(INT))


def map_ident():
    return core.opaque(MAP_SYMBOL, map_symbol_type())


def map_rules(with_add_zero: bool = True) -> list[RewriteRule]:
    """The higher-order map example rules:
    map ?f nil -> nil; map ?f (?x :: ?xs) -> f x :: map f xs; ?n + 0 -> n.
    """
    int_list = core.ListT(INT)
    f_ty = arrows(INT, INT)
    m = map_ident()
    nil_p = PIdent(core.nil(INT))
    map_nil = RewriteRule.make(
        "map_nil",
        [("f", f_ty, False)],
        papp(PIdent(m), PWild("f"), nil_p),
        lambda v: ref(core.nil(INT)),
        priority=0,
    )
    map_cons = RewriteRule.make(
        "map_cons",
        [("f", f_ty, False), ("x", INT, False), ("xs", int_list, False)],
        papp(PIdent(m), PWild("f"), papp(PIdent(core.cons(INT)), PWild("x"), PWild("xs"))),
        lambda v: apps(
            ref(core.cons(INT)),
            core.app(v["f"], v["x"]),
            apps(ref(m), v["f"], v["xs"]),
        ),
        priority=1,
    )
    out = [map_nil, map_cons]
    if with_add_zero:
        out.append(add_zero_rule(priority=2))
    return out


def std_rules() -> list[RewriteRule]:
    rules = [add_zero_rule(), fst_pair_rule(), snd_pair_rule(), div_shift_rule()]
    for i, r in enumerate(rules):
        r.priority = i
    return rules


def std_ruleset() -> RuleSet:
    return RuleSet(std_rules())


def builtin_library_path(name: str):
    """Path of a shipped rule library (std, fold, map, bounds)."""
    from importlib import resources

    res = resources.files("letlift").joinpath("rules_data").joinpath(f"{name}.rules")
    if not res.is_file():
        raise LetLiftError(f"no builtin rule library named {name!r}")
    return res


def load_rules(path_or_name: str, symtab=None):
    """Load a rule file from disk, or a builtin library by bare name."""
    import os

    from .textio import parse_rules_text

    if os.path.exists(path_or_name):
        text = open(path_or_name, encoding="utf-8").read()
    else:
        base = path_or_name[: -len(".rules")] if path_or_name.endswith(".rules") else path_or_name
        text = builtin_library_path(base).read_text(encoding="utf-8")
    return parse_rules_text(text, symtab)
