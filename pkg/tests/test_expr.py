import math

import numpy as np
import pytest

from app.cli import expr
from app.cli.expr import BinOp, Neg, Num, Pos, Var, compile_expr, evaluate, parse_expr, to_source
from app.errors import ExprError


def _at(source: str, **env) -> float:
    return float(evaluate(parse_expr(source), {k: np.asarray(v) for k, v in env.items()}))


def test_sin_pi_x():
    assert _at("sin(pi*x)", x=0.5) == pytest.approx(1.0, abs=1e-15)


def test_gammafn_power():
    assert _at("t^0.5/ gammafn(1.5)", t=1.0) == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-15)
    assert _at("t^0.5/ gammafn(1.5)", t=1.0) == pytest.approx(1.1283792, abs=1e-7)


def test_unary_minus_after_operator():
    assert parse_expr("2*-x") == BinOp("*", Num(2.0), Neg(Var("x")))
    assert _at("2*-x", x=3.0) == -6.0


def test_power_binds_tighter_than_unary_minus():
    assert parse_expr("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))
    assert _at("-x^2", x=3.0) == -9.0


def test_power_is_right_associative():
    assert _at("2^3^2") == 512.0
    assert _at("2^-1") == 0.5


def test_precedence_and_associativity():
    assert _at("1 - 2 - 3") == -4.0
    assert _at("8 / 4 / 2") == 1.0
    assert _at("1 + 2 * 3") == 7.0
    assert _at("pow(2, 10) + abs(-1) + sqrt(4) + exp(0) + cos(0)") == 1024.0 + 1.0 + 2.0 + 1.0 + 1.0
    assert _at("e") == math.e


@pytest.mark.parametrize(
    "source",
    ["sin(pi*x)", "-x^2", "(-x)^2", "2^3^2", "(2^3)^2", "1 - (2 - 3)", "x - -t", "pow(x, 1e-05) / (t + 1)"],
)
def test_print_parse_round_trip(source: str):
    ast = parse_expr(source)
    assert parse_expr(to_source(ast)) == ast


def test_unknown_identifier_position():
    with pytest.raises(ExprError) as err:
        parse_expr("sin(y)")
    assert err.value.line == 1
    assert err.value.col == 5
    assert "unknown identifier" in str(err.value)


def test_syntax_error_position_with_origin():
    with pytest.raises(ExprError) as err:
        parse_expr("1 + * 2", origin=Pos(4, 7))
    assert (err.value.line, err.value.col) == (4, 11)
    assert str(err.value).startswith("4:11:")


@pytest.mark.parametrize("source", ["", "(1 + 2", "1 2", "sin 1", "pow(1)", "1 $ 2", "1.2.3"])
def test_malformed(source: str):
    with pytest.raises(ExprError):
        parse_expr(source)


def test_variable_not_allowed_for_field():
    with pytest.raises(ExprError) as err:
        parse_expr("sin(x)", variables=("t",))
    assert "not available" in str(err.value)


def test_sqrt_of_negative_is_domain_error():
    with pytest.raises(ExprError):
        _at("sqrt(x)", x=-1.0)


def test_compiled_function_broadcasts():
    fn = compile_expr(parse_expr("t + 0*x + 1"), ("t", "x"))
    t, x = np.meshgrid(np.linspace(0, 1, 3), np.linspace(0, 1, 4), indexing="ij")
    out = fn(t, x)
    assert out.shape == (3, 4)
    assert np.allclose(out[:, 0], [1.0, 1.5, 2.0])
    const = compile_expr(parse_expr("2"), ("x",))
    assert const(np.zeros(5)).shape == (5,)


def test_compiled_function_rejects_non_real_values(monkeypatch):
    monkeypatch.setitem(expr.FUNCTIONS, "exp", (1, lambda a: np.exp(1j * a)))
    fn = compile_expr(parse_expr("exp(x)"), ("x",))
    with pytest.raises(ExprError) as err:
        fn(np.linspace(0.0, 1.0, 5))
    assert "non-real" in str(err.value)
    assert (err.value.line, err.value.col) == (1, 1)
    assert np.allclose(compile_expr(parse_expr("exp(0*x)"), ("x",))(np.zeros(3)), 1.0)
