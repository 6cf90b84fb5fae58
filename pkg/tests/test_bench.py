"""Generators, timed runs, scaling fits, CSV schema."""

import math

import pytest

import letlift.core as core
from letlift.core import INT, VInt, alpha_eq, denote, term_stats, values_equal, var
from letlift.bench import (
    CSV_HEADER,
    eq_nil_impl,
    fit_loglog,
    fit_scaling,
    gen_liftlets_map,
    gen_plus0tree,
    gen_underlets_plus0,
    generate,
    read_csv,
    run_family,
    write_csv,
)


def test_plus0tree_examples():
    g = gen_plus0tree(0, 1)
    x = g.free["x"][0]
    assert alpha_eq(g.expr, core.int_add(var(x, INT), core.lit(0)))
    assert alpha_eq(g.expected_nf, var(x, INT))

    g = gen_plus0tree(1, 2)
    leaf = core.int_add(core.int_add(var(g.free["x"][0], INT), core.lit(0)), core.lit(0))
    assert alpha_eq(g.expr, core.int_add(leaf, leaf))


def test_plus0tree_node_count_closed_form():
    for n in (0, 1, 2, 4):
        for m in (0, 1, 3, 6):
            g = gen_plus0tree(n, m)
            assert term_stats(g.expr)["node_count"] == 2**n * (2 * m + 1) + 2**n - 1


def test_underlets_examples():
    g = gen_underlets_plus0(1)
    x = g.free["x"][0]
    v = g.expr.bound
    assert alpha_eq(
        g.expr, core.let_in(v, core.int_add(var(x, INT), core.lit(0)), var(v, INT))
    )
    assert term_stats(gen_underlets_plus0(7).expr)["let_count"] == 7


def test_liftlets_examples():
    g = gen_liftlets_map(1, 0)
    # no rounds: the recursor immediately returns [v]
    from letlift.engine import rewrite_top
    from letlift.rules import RuleSet, map_rules

    out, _ = rewrite_top(g.expr, RuleSet(map_rules()))
    assert alpha_eq(out, core.build_list([var(g.free["v"][0], INT)], INT))
    # output let counts are n*m by construction of the expected form
    for n, m in [(1, 1), (2, 3), (3, 2)]:
        g = gen_liftlets_map(n, m)
        assert term_stats(g.expected_nf)["let_count"] == n * m


def test_generate_dispatch_and_denote_sanity(rng):
    for fam, n, m in [("plus0tree", 2, 2), ("underlets_plus0", 4, 0), ("liftlets_map", 2, 2)]:
        g = generate(fam, n, m)
        rho = {vid: VInt(rng.randint(-9, 9)) for _, (vid, _) in g.free.items()}
        assert values_equal(denote(g.expr, rho), denote(g.expected_nf, rho))


def test_fit_loglog_synthetic_linear_and_quadratic():
    xs = [100.0, 200.0, 400.0, 800.0]
    lin = fit_loglog(xs, [3.0 * x for x in xs])
    assert abs(lin["exponent"] - 1.0) < 0.01 and lin["r_squared"] > 0.999
    quad = fit_loglog(xs, [0.5 * x * x for x in xs])
    assert abs(quad["exponent"] - 2.0) < 0.01


def test_fit_loglog_insufficient_data():
    with pytest.raises(ValueError):
        fit_loglog([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        fit_loglog([1.0, 2.0, 0.0, 3.0], [1.0, 2.0, 3.0, 4.0])


def test_run_family_records_and_csv(tmp_path):
    recs = run_family("underlets_plus0", "nbe", [(4, 0), (8, 0)], repetitions=2, seed=5)
    assert all(r.status == "ok" for r in recs)
    assert [r.rule_apps for r in recs] == [4, 8]
    assert all(r.output_lets == 0 for r in recs)
    out = tmp_path / "b.csv"
    write_csv(str(out), recs)
    rows = read_csv(str(out))
    assert list(rows[0].keys()) == CSV_HEADER
    assert rows[0]["family"] == "underlets_plus0"
    assert rows[0]["trace_steps"] == ""  # not applicable for the nbe engine


def test_csv_deterministic_modulo_time(tmp_path):
    def snapshot(seed):
        recs = run_family("liftlets_map", "naive-bottomup", [(2, 2)], repetitions=1, seed=seed)
        p = tmp_path / f"s{seed}.csv"
        write_csv(str(p), recs)
        rows = read_csv(str(p))
        for r in rows:
            r.pop("wall_time_s")
        return rows

    assert snapshot(1) == snapshot(1)


def test_budget_exhaustion_marks_record_not_crash():
    recs = run_family("liftlets_map", "naive-bottomup", [(3, 3), (1, 1)], repetitions=1,
                      app_budget=4)
    assert recs[0].status.startswith("failed-budget")
    assert recs[1].status.startswith("failed-budget")
    assert math.isnan(recs[0].wall_time_s)


def test_verification_gates_timing(monkeypatch):
    # if the engine produced a wrong answer, the record must be marked and
    # carry no admitted time
    import letlift.bench as bench

    def broken_run(engine, gen, ruleset, app_budget, collect=True):
        return core.lit(0), None, []

    monkeypatch.setattr(bench, "_run_engine", broken_run)
    recs = bench.run_family("underlets_plus0", "naive-bottomup", [(3, 0)], repetitions=1)
    assert recs[0].status.startswith("failed-verify")


def test_nbe_rule_breakdown_recorded():
    recs = run_family("liftlets_map", "nbe", [(2, 2)], repetitions=1)
    assert recs[0].status == "ok"
    assert recs[0].rule_breakdown == {}  # recursors do the work; no rule fires
    assert recs[0].elim_steps == 2 + 2 * 2
    assert recs[0].output_lets == 4
