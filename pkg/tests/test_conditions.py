"""Side-condition evaluation: totality and the power-of-two gate."""

import pytest

from letlift.conditions import (
    CBin,
    CInt,
    CLog2,
    CNot,
    CVar,
    NonConstantBinding,
    eval_arith,
    eval_side_condition,
)
from letlift.core import INT, fresh_var, lit, var

POW2_GATE = CBin("==", CBin("^", CInt(2), CLog2(CVar("m"))), CVar("m"))


def test_power_of_two_gate():
    assert eval_side_condition(POW2_GATE, {"m": lit(4)}) is True
    assert eval_side_condition(POW2_GATE, {"m": lit(3)}) is False


def test_u_below_word_bound():
    c = CBin("<", CVar("u"), CBin("^", CInt(2), CInt(64)))
    assert eval_side_condition(c, {"u": lit(2**64 - 1)}) is True
    assert eval_side_condition(c, {"u": lit(2**64)}) is False


def test_log2_of_nonpositive_makes_condition_false_not_error():
    assert eval_side_condition(POW2_GATE, {"m": lit(0)}) is False
    assert eval_side_condition(POW2_GATE, {"m": lit(-8)}) is False
    # even under negation: the whole condition is false when undefined
    assert eval_side_condition(CNot(POW2_GATE), {"m": lit(0)}) is False


def test_zero_to_the_zero_is_one():
    c = CBin("==", CBin("^", CInt(0), CInt(0)), CInt(1))
    assert eval_side_condition(c, {}) is True


def test_negative_exponent_is_false():
    c = CBin("==", CBin("^", CInt(2), CInt(-1)), CInt(0))
    assert eval_side_condition(c, {}) is False


def test_boolean_connectives():
    t = CBin("<", CInt(1), CInt(2))
    f = CBin("<", CInt(2), CInt(1))
    assert eval_side_condition(CBin("&&", t, t), {})
    assert not eval_side_condition(CBin("&&", t, f), {})
    assert eval_side_condition(CBin("||", f, t), {})
    assert eval_side_condition(CNot(f), {})


def test_non_constant_binding_is_an_engine_bug_signal():
    x = fresh_var()
    with pytest.raises(NonConstantBinding):
        eval_side_condition(POW2_GATE, {"m": var(x, INT)})


def test_eval_arith_splice_values():
    assert eval_arith(CLog2(CVar("m")), {"m": lit(8)}) == 3
    assert eval_arith(CLog2(CVar("m")), {"m": lit(0)}) is None
    assert eval_arith(CBin("+", CVar("a"), CInt(1)), {"a": lit(41)}) == 42


def test_purity():
    binds = {"m": lit(16)}
    assert eval_side_condition(POW2_GATE, binds) == eval_side_condition(POW2_GATE, binds)
