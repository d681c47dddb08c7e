import numpy as np
import pytest

from fkdv_symmetry.algebra import (
    AlgebraError, StructureConstants, antisymmetry_defect, bracket, identify_algebra,
    is_closed, jacobi_defect, make_subalgebra, optimal_system, parse_subalgebra,
    structure_constants, Subalgebra,
)
from fkdv_symmetry.classify import D_T, D_X, classify, symmetry_basis, vector_field
from fkdv_symmetry.expr import TIME, evaluate
from fkdv_symmetry.gauge import EquationSpec

DEFECT_TOL = 1e-12


def classified(beta, n=2):
    return classify(EquationSpec.from_strings(n, "0", beta, (1.0, 2.0)))


class TestBracket:
    def test_translation_with_scaling(self):
        w = vector_field(tau=10.0 * TIME, xi1=6.0, eta1=-2.0)
        v = bracket(D_X, w)
        assert evaluate(v.xi0, 1.3) == pytest.approx(6.0)
        assert evaluate(v.tau, 1.3) == pytest.approx(0.0)

    def test_time_translation_with_scaling(self):
        w = vector_field(tau=10.0 * TIME, xi1=2.0, eta1=-4.0)
        v = bracket(D_T, w)
        assert evaluate(v.tau, 0.7) == pytest.approx(10.0)
        assert evaluate(v.xi1, 0.7) == pytest.approx(0.0)

    def test_rejects_other_objects(self):
        with pytest.raises(AlgebraError):
            bracket(D_X, "d/dx")


class TestStructureConstants:
    @pytest.mark.parametrize("beta, n, name", [
        ("t^2", 2, "A2"),
        ("1/t", 2, "2A1"),
        ("exp(t)", 3, "A2"),
        ("1 + t^2", 2, "A1"),
    ])
    def test_case_algebras(self, beta, n, name):
        c = classified(beta, n)
        s = structure_constants(symmetry_basis(c, float(n)))
        assert identify_algebra(s).name == name

    @pytest.mark.parametrize("n", [2.0, 3.0, 0.5])
    def test_constant_case_is_a35_with_one_fifth(self, n):
        s = structure_constants(symmetry_basis(classified("1"), n))
        label = identify_algebra(s)
        assert label.name == "A3.5"
        assert label.a == pytest.approx(0.2, abs=1e-10)
        assert str(label).startswith("A3.5^0.2")

    @pytest.mark.parametrize("beta", ["t^2", "exp(t)", "1", "t^-1"])
    def test_defects_vanish(self, beta):
        s = structure_constants(symmetry_basis(classified(beta), 2.0))
        assert antisymmetry_defect(s) <= DEFECT_TOL
        assert jacobi_defect(s) <= DEFECT_TOL

    def test_scaling_acts_on_translations(self):
        s = structure_constants([D_X, D_T, vector_field(tau=10.0 * TIME, xi1=2.0, eta1=-4.0)])
        np.testing.assert_allclose(s.c[0, 2], [2.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(s.c[1, 2], [0.0, 10.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(s.c[0, 1], [0.0, 0.0, 0.0], atol=1e-12)

    def test_dependent_generators(self):
        with pytest.raises(AlgebraError, match="linearly dependent"):
            structure_constants([D_X, vector_field(xi0=2.0)])

    def test_bracket_leaving_the_span(self):
        with pytest.raises(AlgebraError, match="leaves the span"):
            structure_constants([D_T, vector_field(tau=TIME * TIME)])

    def test_unknown_algebra_lists_brackets(self):
        label = identify_algebra(StructureConstants(3, np.zeros((3, 3, 3))))
        assert label.name == "UNKNOWN"
        assert "[e1, e2] = 0" in label.offending


class TestSubalgebras:
    def test_parse_with_parameter(self):
        assert parse_subalgebra("g2.2:-0.5") == ("g2.2", -0.5)
        assert parse_subalgebra("g4.1") == ("g4.1", None)

    def test_parse_bad_parameter(self):
        with pytest.raises(AlgebraError, match="must be a number"):
            parse_subalgebra("g4.1:abc")

    def test_unknown_name_suggests_nearest(self):
        with pytest.raises(AlgebraError, match="did you mean 'g4.1'"):
            parse_subalgebra("g41")

    def test_wrong_case(self):
        with pytest.raises(AlgebraError, match="does not belong to case CONSTANT"):
            make_subalgebra("g2.1", classified("1"), 2.0)

    def test_g22_needs_rho_minus_one(self):
        with pytest.raises(AlgebraError, match="rho = -1"):
            make_subalgebra("g2.2", classified("t^2"), 2.0)

    def test_g21_excludes_rho_minus_one(self):
        with pytest.raises(AlgebraError, match="g2.2"):
            make_subalgebra("g2.1", classified("1/t"), 2.0)

    def test_g22_parameter(self):
        sub = make_subalgebra("g2.2", classified("1/t"), 2.0, 0.3)
        assert sub.params == {"a": 0.3}
        assert evaluate(sub.basis[0].xi0, 1.0) == pytest.approx(0.3)

    def test_two_dimensional_constant_subalgebra(self):
        sub = make_subalgebra("g4.alg", classified("1"), 2.0)
        assert is_closed(sub)
        assert identify_algebra(structure_constants(sub.basis)).name == "A2"

    def test_open_span_is_not_closed(self):
        assert not is_closed(Subalgebra("test", (D_T, vector_field(tau=TIME * TIME))))


class TestOptimalSystem:
    def test_constant_case(self):
        system = optimal_system(classified("1"), 2.0)
        assert [s.name for s in system] == ["g0", "g4.1", "g4.1", "g4.1", "g4.2"]
        assert [s.params.get("sigma") for s in system[1:4]] == [-1.0, 0.0, 1.0]

    def test_power_case(self):
        assert [s.name for s in optimal_system(classified("t^2"), 2.0)] == ["g0", "g2.1"]

    def test_power_minus_one_carries_parameter(self):
        system = optimal_system(classified("1/t"), 2.0, a=0.7)
        assert system[1].name == "g2.2"
        assert system[1].params["a"] == 0.7

    def test_exponential_case(self):
        assert [s.name for s in optimal_system(classified("exp(t)"), 2.0)] == ["g0", "g3"]

    def test_generic_case(self):
        with pytest.raises(AlgebraError, match="GENERIC"):
            optimal_system(classified("1 + t^2"), 2.0)

    def test_members_are_closed(self):
        assert all(is_closed(s) for s in optimal_system(classified("1"), 3.0))
