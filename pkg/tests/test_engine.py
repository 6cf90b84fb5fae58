"""The reducer: rewrite chains, let-lifting, recursors, reify/reflect."""

import random

import pytest

import letlift.core as core
from letlift.core import (
    INT,
    Abs,
    Arrow,
    ListT,
    Var,
    alpha_eq,
    app,
    apps,
    arrows,
    binders_unique,
    denote,
    fresh_var,
    int_add,
    lam,
    let_in,
    lit,
    ref,
    term_stats,
    type_check,
    values_equal,
    var,
    VInt,
)
from letlift.engine import (
    BudgetExhausted,
    EngineConfig,
    FuelExhausted,
    RewriteStats,
    reduce_expr,
    reflect,
    reify,
    rewrite_head,
    rewrite_top,
)
from letlift.patterns import PIdent, PWild, RewriteRule
from letlift.randgen import random_term, random_valuation
from letlift.rules import RuleSet, add_zero_rule, map_ident, map_rules, papp, std_ruleset


@pytest.fixture(scope="module")
def std():
    return std_ruleset()


def test_rewrite_head_add_zero(std):
    x = fresh_var()
    out = rewrite_head(int_add(var(x, INT), lit(0)), std)
    assert out is not None and out.vid == x


def test_rewrite_head_div_to_shift(std):
    out = rewrite_head(apps(ref(core.div()), lit(10), lit(4)), std)
    head, args = core.app_spine(out)
    assert head.ident.tag == "shr"
    assert [a.ident.payload[0] for a in args] == [10, 2]


def test_rewrite_head_failing_condition(std):
    assert rewrite_head(apps(ref(core.div()), lit(10), lit(3)), std) is None


def test_rewrite_head_chains_within_fuel():
    a = core.opaque("a_sym", INT)
    b = core.opaque("b_sym", INT)
    r1 = RewriteRule.make("a_to_b", [], PIdent(a), lambda v: ref(b), priority=0)
    r2 = RewriteRule.make("b_to_zero", [], PIdent(b), lambda v: lit(0), priority=1)
    rs = RuleSet([r1, r2])
    out = rewrite_head(ref(a), rs)
    assert out.ident.payload[0] == 0


def test_rewrite_head_fuel_exhausted_on_pingpong():
    a = core.opaque("a_sym", INT)
    b = core.opaque("b_sym", INT)
    r1 = RewriteRule.make("a_to_b", [], PIdent(a), lambda v: ref(b), priority=0)
    r2 = RewriteRule.make("b_to_a", [], PIdent(b), lambda v: ref(a), priority=1)
    rs = RuleSet([r1, r2])
    with pytest.raises(FuelExhausted):
        rewrite_head(ref(a), rs, EngineConfig(fuel=8))


def test_global_budget_exhausted():
    a = core.opaque("a_sym", INT)
    b = core.opaque("b_sym", INT)
    r1 = RewriteRule.make("a_to_b", [], PIdent(a), lambda v: ref(b), priority=0)
    r2 = RewriteRule.make("b_to_a", [], PIdent(b), lambda v: ref(a), priority=1)
    rs = RuleSet([r1, r2])
    with pytest.raises(BudgetExhausted):
        rewrite_top(ref(a), rs, EngineConfig(fuel=10**9, budget=100))


def test_reduce_higher_order_application_fires_rule(std):
    # (\f x y. f x y) (+) z 0  ~~>  z
    f, a, b, z = (fresh_var() for _ in range(4))
    fty = arrows(INT, INT, INT)
    t = apps(
        lam(f, fty, lam(a, INT, lam(b, INT, apps(var(f, fty), var(a, INT), var(b, INT))))),
        ref(core.add()),
        var(z, INT),
        lit(0),
    )
    out, stats = rewrite_top(t, std)
    assert isinstance(out, Var) and out.vid == z
    assert stats.rule_applications == {"add_zero": 1}


def test_reduce_map_example_with_let_lifting():
    # map (\x. y+x) (let z := a*a in [0; 1; z+1])
    #   ~~>  let z := a*a in [y; y+1; y+(z+1)]
    rs = RuleSet(map_rules())
    y, z, a, xv = (fresh_var() for _ in range(4))
    fn = lam(xv, INT, int_add(var(y, INT), var(xv, INT)))
    payload = core.build_list([lit(0), lit(1), int_add(var(z, INT), lit(1))], INT)
    t = apps(
        ref(map_ident()),
        fn,
        let_in(z, apps(ref(core.mul()), var(a, INT), var(a, INT)), payload),
    )
    out, stats = rewrite_top(t, rs)
    z2 = fresh_var()
    expected = let_in(
        z2,
        apps(ref(core.mul()), var(a, INT), var(a, INT)),
        core.build_list(
            [
                var(y, INT),
                int_add(var(y, INT), lit(1)),
                int_add(var(y, INT), int_add(var(z2, INT), lit(1))),
            ],
            INT,
        ),
    )
    assert alpha_eq(out, expected)
    assert stats.rule_applications == {"map_cons": 3, "map_nil": 1, "add_zero": 1}
    assert stats.lets_lifted == 1


def test_list_rect_on_nil_takes_zero_case(std):
    h, t, r = fresh_var(), fresh_var(), fresh_var()
    step = lam(h, INT, lam(t, ListT(INT), lam(r, INT, lit(0))))
    e = apps(ref(core.list_rect(INT, INT)), lit(42), step, ref(core.nil(INT)))
    out, _ = rewrite_top(e, std)
    assert out.ident.payload[0] == 42


def test_residual_recursor_on_opaque_scrutinee(std):
    # list_rect over a free list variable stays residual but is well typed
    xs = fresh_var()
    h, t, r = fresh_var(), fresh_var(), fresh_var()
    step = lam(h, INT, lam(t, ListT(INT), lam(r, INT, int_add(var(h, INT), var(r, INT)))))
    e = apps(ref(core.list_rect(INT, INT)), lit(0), step, var(xs, ListT(INT)))
    out, _ = rewrite_top(e, std)
    assert type_check(out, {xs: ListT(INT)}) == INT
    rho = {xs: core.VList((VInt(3), VInt(4)))}
    assert values_equal(denote(out, rho), denote(e, rho))


def test_reify_reflect_eta_expansion(std):
    f = fresh_var()
    sem = reflect(var(f, Arrow(INT, INT)), Arrow(INT, INT), std)
    out = reify(sem, Arrow(INT, INT), std)
    x2 = fresh_var()
    assert alpha_eq(out, lam(x2, INT, app(var(f, Arrow(INT, INT)), var(x2, INT))))


def test_reflect_rewrites_under_the_eta_binder():
    g = core.opaque("g", Arrow(INT, INT))
    strip = RewriteRule.make(
        "strip_g",
        [("x", INT, False)],
        papp(PIdent(g), PWild("x")),
        lambda v: v["x"],
    )
    rs = RuleSet([strip])
    sem = reflect(ref(g), Arrow(INT, INT), rs)
    out = reify(sem, Arrow(INT, INT), rs)
    x = fresh_var()
    assert alpha_eq(out, lam(x, INT, var(x, INT)))


def test_reify_base_payload_unchanged_and_telescope_flush():
    x = fresh_var()
    w = reduce_expr(var(x, INT))
    assert w.lets == [] and w.payload.vid == x

    v = fresh_var()
    t = let_in(v, apps(ref(core.mul()), var(x, INT), var(x, INT)), int_add(var(v, INT), var(v, INT)))
    out, _ = rewrite_top(t)
    assert isinstance(out, core.LetIn)
    assert term_stats(out)["let_count"] == 1


def test_rewrite_top_benchmark_singletons(std):
    from letlift.bench import gen_liftlets_map, gen_plus0tree, gen_underlets_plus0

    g = gen_underlets_plus0(3)
    out, _ = rewrite_top(g.expr, std)
    assert alpha_eq(out, g.expected_nf)

    g = gen_plus0tree(1, 2)
    out, _ = rewrite_top(g.expr, std)
    x = g.free["x"][0]
    assert alpha_eq(out, int_add(var(x, INT), var(x, INT)))

    g = gen_liftlets_map(1, 1)
    out, _ = rewrite_top(g.expr, RuleSet(map_rules()))
    v = g.free["v"][0]
    y = fresh_var()
    expected = let_in(
        y, int_add(var(v, INT), var(v, INT)), core.build_list([var(y, INT)], INT)
    )
    assert alpha_eq(out, expected)


def test_semantics_and_type_preservation_random(std, rng):
    for _ in range(150):
        e, free = random_term(rng, max_size=18)
        ty = type_check(e, dict(free))
        out, _ = rewrite_top(e, std)
        assert type_check(out, dict(free)) == ty
        assert binders_unique(out)
        for _ in range(5):
            rho = random_valuation(free, rng)
            assert values_equal(denote(e, rho), denote(out, rho))


def test_sharing_preserved_with_heuristics_disabled():
    from letlift.bench import gen_underlets_plus0

    n = 12
    g = gen_underlets_plus0(n)
    cfg = EngineConfig(inline_constants=False, inline_vars=False)
    out, stats = rewrite_top(g.expr, std_ruleset(), cfg)
    assert term_stats(out)["let_count"] == n
    assert stats.lets_lifted == n
    rho = {g.free["x"][0]: VInt(11)}
    assert values_equal(denote(out, rho), VInt(11))


def test_constant_rhs_inlined_by_default(std):
    v = fresh_var()
    t = let_in(v, int_add(lit(2), lit(3)), int_add(var(v, INT), lit(0)))
    out, stats = rewrite_top(t, std)
    # 2+3 is residual (std has no folding), so the let is kept; with folding
    # the rhs becomes a constant and is inlined.
    assert term_stats(out)["let_count"] == 1
    from letlift.rules import fold_rules, std_rules

    rs = RuleSet(std_rules() + fold_rules())
    out2, stats2 = rewrite_top(t, rs)
    assert term_stats(out2)["let_count"] == 0
    assert out2.ident.payload[0] == 5


def test_cons_chain_rhs_names_each_element():
    # let l = [a*a; b] in wrap l: each compound element gets its own binder
    wrap = core.opaque("wrap", Arrow(ListT(INT), INT))
    a, b, l = fresh_var(), fresh_var(), fresh_var()
    chain = core.build_list([apps(ref(core.mul()), var(a, INT), var(a, INT)), var(b, INT)], INT)
    t = let_in(l, chain, app(ref(wrap), var(l, ListT(INT))))
    out, stats = rewrite_top(t)
    assert term_stats(out)["let_count"] == 1  # one compound element named
    head, args = core.app_spine(out.body if isinstance(out, core.LetIn) else out)
    assert head.ident == wrap
    assert core.list_spine(args[0]) is not None


def test_dataflow_order_rewrite_head_after_subterms(std):
    x, y, z = fresh_var(), fresh_var(), fresh_var()
    t = int_add(int_add(var(x, INT), var(y, INT)), var(z, INT))
    events = []
    rewrite_top(t, std, on_event=lambda kind, payload: events.append((kind, payload)))
    first_rw = next(i for i, (k, _) in enumerate(events) if k == "rewrite_head")
    reduced_vars = {
        p.vid for k, p in events[:first_rw] if k == "reduced" and isinstance(p, Var)
    }
    # the innermost spine (x + y) is rewritten only once x and y are values
    assert {x, y} <= reduced_vars


def test_engine_rejects_nonpositive_fuel():
    with pytest.raises(ValueError):
        EngineConfig(fuel=0)


def test_stats_text_block(std):
    from letlift.bench import gen_plus0tree

    _, stats = rewrite_top(gen_plus0tree(2, 2).expr, std)
    text = stats.as_text()
    assert "rule.add_zero=8" in text
    assert "nodes_visited=" in text


def test_recursor_steps_through_literal_prefix_of_opaque_tail(std):
    # list_rect over (5 :: xs): one computation step, residual recursion
    xs, h, t, r = (fresh_var() for _ in range(4))
    il = ListT(INT)
    step = lam(h, INT, lam(t, il, lam(r, INT, int_add(var(h, INT), var(r, INT)))))
    scrut = apps(core.ref(core.cons(INT)), lit(5), var(xs, il))
    e = apps(core.ref(core.list_rect(INT, INT)), lit(0), step, scrut)
    out, stats = rewrite_top(e, std)
    assert stats.elim_steps == 1
    for items in ((), (VInt(1),), (VInt(2), VInt(-3))):
        rho = {xs: core.VList(items)}
        assert values_equal(denote(out, rho), denote(e, rho))
