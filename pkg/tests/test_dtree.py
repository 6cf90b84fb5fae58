"""Decision-tree compilation and evaluation against the naive matcher."""

import random

import pytest

import letlift.core as core
from letlift.conditions import CBin, CInt, CVar
from letlift.core import (
    INT,
    ListT,
    alpha_eq,
    apps,
    arrows,
    fresh_var,
    int_add,
    lit,
    ref,
    var,
)
from letlift.dtree import (
    EmptyRuleSet,
    Failure,
    MalformedTree,
    Swap,
    Switch,
    TryLeaf,
    compile_rules,
    eval_decision_tree,
)
from letlift.patterns import (
    LetLiftError,
    PApp,
    PConstWild,
    PIdent,
    PWild,
    RewriteRule,
    match_pattern,
)
from letlift.rules import RuleSet, map_rules, papp


def two_rule_example():
    """The running example: ?n + 0 -> n and fst (?x, ?y) -> x."""
    r0 = RewriteRule.make(
        "add_zero",
        [("n", INT, False)],
        papp(PIdent(core.add()), PWild("n"), PIdent(core.int_lit(0))),
        lambda v: v["n"],
        priority=0,
    )
    r1 = RewriteRule.make(
        "fst_pair",
        [("x", INT, False), ("y", INT, False)],
        papp(
            PIdent(core.fst(INT, INT)),
            papp(PIdent(core.pair_mk(INT, INT)), PWild("x"), PWild("y")),
        ),
        lambda v: v["x"],
        priority=1,
    )
    return [r0, r1]


def test_compiled_tree_shape_matches_the_running_example():
    tree = compile_rules(two_rule_example())
    # Root switches on the application structure.
    assert isinstance(tree, Switch) and tree.icases == () and tree.app_case is not None
    inner = tree.app_case
    # Next switch dispatches on fst (identifier case) vs + (via app case).
    assert isinstance(inner, Switch)
    assert [i.tag for i, _ in inner.icases] == ["fst"]
    plus_branch = inner.app_case
    assert isinstance(plus_branch, Switch)
    assert [i.tag for i, _ in plus_branch.icases] == ["add"]
    after_plus = plus_branch.icases[0][1]
    # The wildcard column is skipped via a swap before testing literal 0.
    assert isinstance(after_plus, Swap) and after_plus.i == 1
    lit_switch = after_plus.cont
    assert isinstance(lit_switch, Switch)
    assert [i for i, _ in lit_switch.icases] == [core.int_lit(0)]
    leaf0 = lit_switch.icases[0][1]
    assert isinstance(leaf0, TryLeaf) and leaf0.rule_index == 0
    # fst path: two more application splits, then pair, then rule 1.
    fst_branch = inner.icases[0][1]
    node = fst_branch
    for _ in range(2):
        assert isinstance(node, Switch) and node.app_case is not None
        node = node.app_case
    assert isinstance(node, Switch)
    assert [i.tag for i, _ in node.icases] == ["pair"]
    leaf1 = node.icases[0][1]
    assert isinstance(leaf1, TryLeaf) and leaf1.rule_index == 1


def test_empty_rule_set_rejected():
    with pytest.raises(EmptyRuleSet):
        compile_rules([])


def test_bare_wildcard_lhs_rejected_at_compile_time():
    r = RewriteRule.make("anything", [("x", INT, False)], PWild("x"), lambda v: v["x"])
    with pytest.raises(LetLiftError):
        compile_rules([r])


def test_shared_head_rules_build_one_switch_on_the_head():
    rules = map_rules(with_add_zero=False)
    tree = compile_rules(rules)

    map_mentions = 0
    stack = [tree]
    while stack:
        t = stack.pop()
        match t:
            case Switch(icases, app_case, default):
                for i, sub in icases:
                    if i.tag == "opaque" and i.payload[0] == "map":
                        map_mentions += 1
                    stack.append(sub)
                if app_case is not None:
                    stack.append(app_case)
                stack.append(default)
            case TryLeaf(_, _, onf):
                stack.append(onf)
            case Swap(_, cont):
                stack.append(cont)
            case _:
                pass
    assert map_mentions == 1


def accept_all(idx, binds):
    return (idx, binds)


def naive_first_match(rules, e):
    for i, r in enumerate(rules):
        b = match_pattern(r.lhs, e)
        if b is not None:
            return (i, b)
    return None


def test_eval_examples_from_the_running_pair():
    rules = two_rule_example()
    tree = compile_rules(rules)
    a, b = fresh_var(), fresh_var()
    e1 = core.app(
        ref(core.fst(INT, INT)),
        apps(ref(core.pair_mk(INT, INT)), var(a, INT), var(b, INT)),
    )
    got = eval_decision_tree(tree, e1, accept_all)
    assert got is not None and got[0] == 1
    assert got[1]["x"].vid == a and got[1]["y"].vid == b

    e2 = apps(ref(core.mul()), var(a, INT), var(b, INT))
    assert eval_decision_tree(tree, e2, accept_all) is None

    e3 = int_add(int_add(var(a, INT), lit(1)), lit(0))
    got = eval_decision_tree(tree, e3, accept_all)
    assert got is not None and got[0] == 0
    assert alpha_eq(got[1]["n"], int_add(var(a, INT), lit(1)))


def test_decomposition_shared_along_each_path():
    # On the shared-head example, no subterm's head is inspected twice
    # along the root-to-leaf path taken by evaluation.
    rules = map_rules(with_add_zero=False)
    tree = compile_rules(rules)
    f = fresh_var()
    e = apps(
        ref(core.opaque("map", arrows(arrows(INT, INT), ListT(INT), ListT(INT)))),
        var(f, arrows(INT, INT)),
        core.build_list([lit(1)], INT),
    )
    inspected = []
    eval_decision_tree(tree, e, accept_all, on_inspect=inspected.append)
    assert len(inspected) == len({id(x) for x in inspected})


def test_compile_deterministic():
    t1 = compile_rules(two_rule_example())
    t2 = compile_rules(two_rule_example())
    assert repr(t1) == repr(t2)


def test_swap_out_of_range_is_malformed():
    with pytest.raises(MalformedTree):
        eval_decision_tree(Swap(3, Failure()), lit(1), accept_all)


def test_failed_side_condition_falls_through_to_next_rule():
    # Two rules with the same LHS shape; the first's condition rejects.
    r_gate = RewriteRule.make(
        "only_big",
        [("m", INT, True)],
        papp(PIdent(core.add()), PConstWild("m"), PIdent(core.int_lit(0))),
        lambda v: v["m"],
        cond=CBin("<", CInt(100), CVar("m")),
        priority=0,
    )
    r_any = RewriteRule.make(
        "any_add_zero",
        [("n", INT, False)],
        papp(PIdent(core.add()), PWild("n"), PIdent(core.int_lit(0))),
        lambda v: v["n"],
        priority=1,
    )
    rs = RuleSet([r_gate, r_any])
    from letlift.conditions import eval_side_condition

    def with_conditions(idx, binds):
        rule = rs.rules[idx]
        if rule.cond is not None and not eval_side_condition(rule.cond, binds):
            return None
        return (idx, binds)

    small = int_add(lit(7), lit(0))
    big = int_add(lit(700), lit(0))
    assert eval_decision_tree(rs.tree, small, with_conditions)[0] == 1
    assert eval_decision_tree(rs.tree, big, with_conditions)[0] == 0


# --- randomized oracle equivalence -----------------------------------------


class _PatGen:
    """Random left-linear, identifier-headed patterns over a small alphabet."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.counter = 0
        self.g = core.opaque("g", arrows(INT, INT))
        self.h = core.opaque("h", arrows(INT, INT, INT))
        self.wrap = core.opaque("wrap", arrows(ListT(INT), INT))

    def fresh(self) -> str:
        self.counter += 1
        return f"p{self.counter}"

    def pat(self, ty, depth: int, binders, allow_wild=True):
        rng = self.rng
        if allow_wild and (depth <= 0 or rng.random() < 0.3):
            name = self.fresh()
            const = rng.random() < 0.25
            binders.append((name, ty, const))
            return (PConstWild if const else PWild)(name)
        if ty == INT:
            choice = rng.randrange(6)
            if choice == 0:
                return PIdent(core.int_lit(rng.choice([0, 1])))
            if choice == 1:
                return papp(PIdent(self.g), self.pat(INT, depth - 1, binders))
            if choice == 2:
                return papp(
                    PIdent(self.h),
                    self.pat(INT, depth - 1, binders),
                    self.pat(INT, depth - 1, binders),
                )
            if choice == 3:
                return papp(
                    PIdent(core.add()),
                    self.pat(INT, depth - 1, binders),
                    self.pat(INT, depth - 1, binders),
                )
            if choice == 4:
                return papp(
                    PIdent(core.fst(INT, INT)), self.pat(core.PairT(INT, INT), depth - 1, binders)
                )
            return papp(PIdent(self.wrap), self.pat(ListT(INT), depth - 1, binders))
        if ty == ListT(INT):
            if rng.random() < 0.4:
                return PIdent(core.nil(INT))
            return papp(
                PIdent(core.cons(INT)),
                self.pat(INT, depth - 1, binders),
                self.pat(ListT(INT), depth - 1, binders),
            )
        assert ty == core.PairT(INT, INT)
        return papp(
            PIdent(core.pair_mk(INT, INT)),
            self.pat(INT, depth - 1, binders),
            self.pat(INT, depth - 1, binders),
        )

    def term(self, ty, depth: int):
        rng = self.rng
        if ty == INT:
            if depth <= 0 or rng.random() < 0.25:
                if rng.random() < 0.5:
                    return lit(rng.choice([0, 1, 2]))
                return var(fresh_var(), INT)
            choice = rng.randrange(5)
            if choice == 0:
                return core.app(ref(self.g), self.term(INT, depth - 1))
            if choice == 1:
                return apps(ref(self.h), self.term(INT, depth - 1), self.term(INT, depth - 1))
            if choice == 2:
                return int_add(self.term(INT, depth - 1), self.term(INT, depth - 1))
            if choice == 3:
                return core.app(
                    ref(core.fst(INT, INT)), self.term(core.PairT(INT, INT), depth - 1)
                )
            return core.app(ref(self.wrap), self.term(ListT(INT), depth - 1))
        if ty == ListT(INT):
            if depth <= 0 or rng.random() < 0.4:
                return ref(core.nil(INT))
            return apps(
                ref(core.cons(INT)), self.term(INT, depth - 1), self.term(ListT(INT), depth - 1)
            )
        return apps(
            ref(core.pair_mk(INT, INT)), self.term(INT, depth - 1), self.term(INT, depth - 1)
        )

    def rule(self, i: int):
        binders: list = []
        while True:
            binders.clear()
            lhs = self.pat(INT, self.rng.randint(1, 5), binders, allow_wild=False)
            if not isinstance(lhs, (PWild, PConstWild)):
                break
        int_vars = [n for n, t, _ in binders if t == INT]

        def rhs(v):
            if int_vars and self.rng.random() < 0.7:
                return v[self.rng.choice(int_vars)]
            return lit(0)

        return RewriteRule.make(f"r{i}", binders, lhs, rhs, priority=i)


def _bindings_agree(b1, b2):
    if b1.keys() != b2.keys():
        return False
    return all(alpha_eq(b1[k], b2[k]) for k in b1)


def test_oracle_equivalence_on_random_rule_sets(rng):
    checked_hits = 0
    for trial in range(500):
        g = _PatGen(random.Random(rng.random()))
        rules = [g.rule(i) for i in range(g.rng.randint(1, 6))]
        tree = compile_rules(rules)
        for _ in range(6):
            e = g.term(INT, g.rng.randint(1, 5))
            got = eval_decision_tree(tree, e, accept_all)
            want = naive_first_match(rules, e)
            if want is None:
                assert got is None, (trial, e)
            else:
                assert got is not None, (trial, e)
                assert got[0] == want[0]
                assert _bindings_agree(got[1], want[1])
                checked_hits += 1
    assert checked_hits > 200  # the sample actually exercises matches


def test_conditions_agree_with_naive_matcher_randomized(rng):
    # first-match with side conditions: the tree path and the naive path
    # must select the same rule on random constant operands
    from letlift.conditions import eval_side_condition
    from letlift.rules import div_shift_rule

    fallback = RewriteRule.make(
        "div_keep",
        [("a", INT, False), ("b", INT, False)],
        papp(PIdent(core.div()), PWild("a"), PWild("b")),
        lambda v: apps(ref(core.div()), v["a"], v["b"]),
        priority=1,
    )
    rules = [div_shift_rule(), fallback]
    tree = compile_rules(rules)

    def tree_pick(e):
        def try_rule(idx, binds):
            r = rules[idx]
            if r.cond is not None and not eval_side_condition(r.cond, binds):
                return None
            return idx

        return eval_decision_tree(tree, e, try_rule)

    def naive_pick(e):
        for i, r in enumerate(rules):
            b = match_pattern(r.lhs, e)
            if b is None:
                continue
            if r.cond is not None and not eval_side_condition(r.cond, b):
                continue
            return i
        return None

    for _ in range(300):
        a = lit(rng.randint(0, 64))
        b = lit(rng.randint(1, 64))
        e = apps(ref(core.div()), a, b)
        assert tree_pick(e) == naive_pick(e)
