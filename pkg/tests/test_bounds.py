"""Interval analysis, clip insertion, and the bounds-conditioned pipeline."""

import random

import pytest

import letlift.core as core
from letlift.bounds import (
    UNKNOWN,
    Interval,
    NonStraightlineInput,
    PairAbs,
    UnsupportedOp,
    abstract_eval,
    analyze_and_clip,
    clip_semantics,
    interval_op,
    parse_bounds_flag,
)
from letlift.core import (
    INT,
    VInt,
    alpha_eq,
    app_spine,
    apps,
    denote,
    fresh_var,
    int_add,
    lam,
    let_in,
    lit,
    ref,
    values_equal,
    var,
)
from letlift.engine import rewrite_top
from letlift.rules import RuleSet, awc_clip_rule

TWO64 = 2**64


def test_interval_invariant():
    with pytest.raises(ValueError):
        Interval(3, 3)


def test_interval_op_add_example():
    assert interval_op(core.add(), [Interval(0, 8), Interval(0, 8)]) == Interval(0, 15)


def test_interval_op_zero_annihilates_mul():
    assert interval_op(core.mul(), [Interval(0, 1), Interval(-100, 100)]) == Interval(0, 1)


def test_interval_op_literal_singleton():
    assert interval_op(core.int_lit(5), []) == Interval(5, 6)


def test_interval_op_sub_and_shr():
    assert interval_op(core.sub(), [Interval(0, 4), Interval(1, 3)]) == Interval(-2, 3)
    # a in {8..16}, b in {1,2}: min 8>>2 = 2, max 16>>1 = 8
    assert interval_op(core.shr(), [Interval(8, 17), Interval(1, 3)]) == Interval(2, 9)
    assert interval_op(core.shr(), [Interval(0, 4), Interval(-1, 3)]) is UNKNOWN


def test_interval_op_addcarry64():
    out = interval_op(core.add_with_carry64(), [Interval(0, TWO64), Interval(0, 2)])
    assert isinstance(out, PairAbs)
    assert out.fst == Interval(0, 2)
    assert out.snd == Interval(0, TWO64)
    # no carry possible when the sum stays below 2^64
    small = interval_op(core.add_with_carry64(), [Interval(0, 8), Interval(0, 8)])
    assert small.fst == Interval(0, 1)
    assert small.snd == Interval(0, 15)


def test_interval_op_unsupported():
    with pytest.raises(UnsupportedOp):
        interval_op(core.div(), [Interval(0, 4), Interval(1, 2)])


def test_monotone_in_each_argument(rng):
    for _ in range(200):
        lo1 = rng.randint(-50, 50)
        a = Interval(lo1, lo1 + rng.randint(1, 20))
        lo2 = rng.randint(-50, 50)
        b = Interval(lo2, lo2 + rng.randint(1, 20))
        wider = Interval(a.lo - 3, a.hi + 3)
        for op in (core.add(), core.sub(), core.mul()):
            r1 = interval_op(op, [a, b])
            r2 = interval_op(op, [wider, b])
            assert r1.subset(r2)


def test_analyze_and_clip_golden_shape():
    x, y = fresh_var(), fresh_var()
    prog = let_in(y, int_add(var(x, INT), lit(0)), var(y, INT))
    out = analyze_and_clip(prog, {x: Interval(0, TWO64)})
    cl = lambda e: apps(ref(core.clip()), lit(0), lit(TWO64), e)
    expected = let_in(y, int_add(cl(var(x, INT)), lit(0)), cl(var(y, INT)))
    assert alpha_eq(out, expected)


def test_unknown_bounds_leave_occurrence_unwrapped():
    x, y = fresh_var(), fresh_var()
    prog = let_in(y, int_add(var(x, INT), lit(1)), var(y, INT))
    out = analyze_and_clip(prog, {x: UNKNOWN})
    assert isinstance(out.rhs, core.App)
    head, args = app_spine(out.rhs)
    assert head.ident.tag == "add"
    assert isinstance(args[0], core.Var)  # x stayed bare


def test_non_straightline_rejected():
    x, f = fresh_var(), fresh_var()
    prog = let_in(f, lam(x, INT, var(x, INT)), lit(0))
    with pytest.raises(NonStraightlineInput):
        analyze_and_clip(prog, {})


def test_soundness_and_identity_on_random_straightline(rng):
    ops = [core.add(), core.sub(), core.mul()]
    for _ in range(60):
        x = fresh_var()
        bounds = {x: Interval(0, 100)}
        body_vars = [(x, bounds[x])]
        lets = []
        env_vals = {}
        for _ in range(rng.randint(1, 6)):
            op = rng.choice(ops)
            a_vid = rng.choice(body_vars)[0]
            b = rng.randint(-5, 5)
            v = fresh_var()
            rhs = apps(ref(op), var(a_vid, INT), lit(b))
            lets.append((v, rhs))
            body_vars.append((v, None))
        body = var(body_vars[-1][0], INT)
        prog = body
        for v, rhs in reversed(lets):
            prog = let_in(v, rhs, prog)
        clipped = analyze_and_clip(prog, dict(bounds))
        # identity on semantics within bounds, and every inferred interval
        # contains the concrete value
        for _ in range(10):
            rho = {x: VInt(rng.randint(0, 99))}
            assert values_equal(denote(prog, rho), denote(clipped, rho))
        # concretely execute each let and compare against abstract_eval
        env_abs = dict(bounds)
        concrete = {x: rng.randint(0, 99)}
        for v, rhs in lets:
            val = denote(rhs, {k: VInt(n) for k, n in concrete.items()})
            iv = abstract_eval(rhs, env_abs)
            env_abs[v] = iv
            concrete[v] = val.v
            if isinstance(iv, Interval):
                assert iv.contains(val.v)


def test_pipeline_clip_then_awc_rule():
    # analysis inserts constant clip parameters; the rule's side condition
    # is then decided purely on those constants
    rs = RuleSet([awc_clip_rule()])
    x, y, p = fresh_var(), fresh_var(), fresh_var()
    prog = let_in(
        y,
        int_add(var(x, INT), lit(0)),
        apps(ref(core.add_with_carry64()), var(y, INT), lit(0)),
    )
    clipped = analyze_and_clip(prog, {x: Interval(0, TWO64)})
    out, stats = rewrite_top(clipped, rs)
    assert stats.rule_applications == {"awc_clip": 1}
    head, args = app_spine(out if not isinstance(out, core.LetIn) else out.body)
    assert head.ident.tag == "pair"
    # and with looser input bounds the inferred u exceeds 2^64: no fire
    clipped2 = analyze_and_clip(prog, {x: Interval(0, TWO64 + 1)})
    _, stats2 = rewrite_top(clipped2, rs)
    assert stats2.total_applications() == 0


def test_clip_semantics_examples():
    assert clip_semantics(0, TWO64, 7) == 7
    assert clip_semantics(0, 4, 4) == 0
    assert clip_semantics(2, 10, 2) == 2


def test_parse_bounds_flag():
    name, iv = parse_bounds_flag("x=0..16")
    assert name == "x" and iv == Interval(0, 16)
    with pytest.raises(core.LetLiftError):
        parse_bounds_flag("nonsense")
