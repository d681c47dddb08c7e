import math

import numpy as np
import pytest

from fkdv_symmetry import expr as expr_module
from fkdv_symmetry.expr import (
    Add, Const, ExprDomainError, ExprSyntaxError, Func, Mul, Neg, Pow, QuadratureError, Sub,
    TIME, ZERO, antiderivative, differentiate, evaluate, exp, integral, inverse, ln,
    nth_derivative, parse, substitute, to_string,
)

TIGHT = 1e-12

SAMPLE_TEXTS = [
    "t^2", "1/t", "exp(t)", "sin(t) + 2", "-t^2", "2*t - 3/t", "(t+1)^(-0.5)",
    "exp(-2*ln(t))", "sqrt(t)*cos(t)", "t^2^3", "abs(t - 3)/(1 + t)", "-(t + 1)*t",
    "tanh(t) - -t", "t*-t",
]


class TestParse:
    def test_power_binds_tighter_than_unary_minus(self):
        assert parse("-t^2") == Neg(Pow(TIME, Const(2.0)))

    def test_power_is_right_associative(self):
        assert parse("t^2^3") == Pow(TIME, Pow(Const(2.0), Const(3.0)))

    def test_products_before_sums(self):
        assert parse("1 + 2*t") == Add(Const(1.0), Mul(Const(2.0), TIME))
        assert parse("t - 1 - 2") == Sub(Sub(TIME, Const(1.0)), Const(2.0))

    def test_functions(self):
        assert parse("ln(t)") == Func("ln", TIME)

    def test_scientific_numbers(self):
        assert parse("1.5e-3") == Const(1.5e-3)

    @pytest.mark.parametrize("text, offset", [("t +", 3), ("2 * * t", 4), ("(t", 2), ("", 0)])
    def test_syntax_errors_report_offset(self, text, offset):
        with pytest.raises(ExprSyntaxError) as info:
            parse(text)
        assert info.value.offset == offset

    def test_unknown_identifier_suggests_function(self):
        with pytest.raises(ExprSyntaxError, match="did you mean 'exp'"):
            parse("expp(t)")

    def test_unexpected_character(self):
        with pytest.raises(ExprSyntaxError, match="unexpected character"):
            parse("t $ 2")

    @pytest.mark.parametrize("text", SAMPLE_TEXTS)
    def test_print_parse_keeps_tree(self, text):
        tree = parse(text)
        assert parse(to_string(tree)) == tree


class TestEvaluate:
    def test_scalar_in_scalar_out(self):
        value = evaluate(parse("t^2 + 1"), 2.0)
        assert isinstance(value, float)
        assert value == 5.0

    def test_vectorized(self):
        t = np.linspace(1.0, 2.0, 5)
        np.testing.assert_allclose(evaluate(parse("exp(t)*sin(t)"), t), np.exp(t) * np.sin(t))

    def test_constants_broadcast(self):
        assert evaluate(Const(3.0), np.zeros(4)).shape == (4,)

    @pytest.mark.parametrize("text, t", [("1/t", 0.0), ("ln(t)", -1.0), ("sqrt(t)", -2.0),
                                         ("t^0.5", -1.0), ("t^(-1)", 0.0)])
    def test_domain_errors(self, text, t):
        with pytest.raises(ExprDomainError):
            evaluate(parse(text), t)

    def test_integer_power_of_negative_base(self):
        assert evaluate(parse("t^3"), -2.0) == -8.0


class TestDifferentiate:
    @pytest.mark.parametrize("text, exact", [
        ("t^3", lambda t: 3 * t ** 2),
        ("exp(2*t)", lambda t: 2 * np.exp(2 * t)),
        ("ln(t)", lambda t: 1 / t),
        ("sin(t)*cos(t)", lambda t: np.cos(2 * t)),
        ("tanh(t)", lambda t: 1 - np.tanh(t) ** 2),
        ("sqrt(t)", lambda t: 0.5 / np.sqrt(t)),
        ("t^t", lambda t: t ** t * (np.log(t) + 1)),
        ("2^t", lambda t: np.log(2) * 2 ** t),
        ("1/(1+t^2)", lambda t: -2 * t / (1 + t ** 2) ** 2),
    ])
    def test_against_closed_forms(self, text, exact):
        t = np.linspace(1.1, 2.3, 7)
        np.testing.assert_allclose(evaluate(differentiate(parse(text)), t), exact(t), rtol=TIGHT)

    def test_constant_folding(self):
        assert differentiate(Const(4.0)) == ZERO
        assert differentiate(parse("3*t")) == Const(3.0)

    def test_second_derivative(self):
        second = nth_derivative(parse("t^4"), 2)
        assert evaluate(second, 2.0) == pytest.approx(48.0, rel=TIGHT)

    def test_integral_node(self):
        F = integral(parse("exp(-t)"), 1.0)
        assert evaluate(differentiate(F), 1.5) == pytest.approx(math.exp(-1.5), rel=TIGHT)

    def test_inverse_node(self):
        G = inverse(parse("t^3 + t"), 0.0, 2.0)
        y = 1.7
        t = evaluate(G, y)
        assert t ** 3 + t == pytest.approx(y, abs=1e-10)
        assert evaluate(differentiate(G), y) == pytest.approx(1.0 / (3 * t ** 2 + 1), rel=1e-9)


class TestAntiderivative:
    def test_matches_closed_form(self):
        assert antiderivative(parse("1/t"), 1.0, 3.0) == pytest.approx(math.log(3.0), abs=TIGHT)

    def test_zero_width(self):
        assert antiderivative(parse("exp(t)"), 2.0, 2.0) == 0.0

    def test_integral_node_evaluates_by_quadrature(self):
        F = integral(parse("cos(t)"), 0.0)
        np.testing.assert_allclose(evaluate(F, np.array([0.5, 1.0])),
                                   np.sin([0.5, 1.0]), atol=1e-12)

    def test_constant_integrand_closed_form(self):
        assert integral(Const(2.0), 1.0) == Const(2.0) * (TIME - Const(1.0))

    def test_singular_integrand(self):
        with pytest.raises(QuadratureError):
            antiderivative(parse("1/t"), -1.0, 1.0)


class TestSubstitute:
    def test_composition(self):
        composed = substitute(parse("t^2 + 1"), exp(TIME))
        assert evaluate(composed, 0.5) == pytest.approx(math.exp(1.0) + 1.0, rel=TIGHT)

    def test_log_of_exp(self):
        assert evaluate(substitute(ln(TIME), exp(TIME)), 0.7) == pytest.approx(0.7, rel=TIGHT)


class TestCalculusLaws:
    @pytest.mark.parametrize("seed", range(12))
    def test_differentiate_is_linear(self, seed):
        rng = np.random.default_rng(seed)
        f, g = (parse(str(text)) for text in rng.choice(SAMPLE_TEXTS, size=2, replace=False))
        a, b = rng.uniform(-3.0, 3.0, size=2)
        t = np.linspace(1.1, 2.3, 7)
        combined = differentiate(Const(a) * f + Const(b) * g)
        separate = Const(a) * differentiate(f) + Const(b) * differentiate(g)
        np.testing.assert_allclose(evaluate(combined, t), evaluate(separate, t),
                                   rtol=1e-10, atol=1e-10)

    @pytest.mark.parametrize("text", ["exp(t)", "1/t", "sin(t) + 2", "sqrt(t)*cos(t)"])
    @pytest.mark.parametrize("t", [1.2, 1.4, 2.1])
    def test_antiderivative_differentiates_back(self, text, t):
        f, h = parse(text), 1e-4
        slope = (antiderivative(f, 1.0, t + h) - antiderivative(f, 1.0, t - h)) / (2 * h)
        assert slope == pytest.approx(evaluate(f, t), rel=1e-6, abs=1e-7)


class TestNodeCache:
    def test_integral_cache_stays_bounded(self, monkeypatch):
        monkeypatch.setattr(expr_module, "CACHE_LIMIT", 16)
        F = integral(parse("cos(t)"), 0.0)
        t = np.linspace(0.1, 1.5, 200)
        np.testing.assert_allclose(evaluate(F, t), np.sin(t), atol=1e-12)
        assert len(F._cache) <= 16
        # evicted points are recomputed
        assert evaluate(F, 0.1) == pytest.approx(math.sin(0.1), abs=1e-12)

    def test_inverse_cache_keeps_table(self, monkeypatch):
        monkeypatch.setattr(expr_module, "CACHE_LIMIT", 16)
        G = inverse(parse("t^3 + t"), 0.0, 2.0)
        y = np.linspace(0.2, 9.5, 200)
        t = evaluate(G, y)
        np.testing.assert_allclose(t ** 3 + t, y, atol=1e-10)
        assert len(G._cache) <= 16
        assert "table" in G._cache
