import math

import numpy as np
import pandas as pd
import pytest

from fkdv_symmetry.algebra import make_subalgebra
from fkdv_symmetry.classify import (
    D_T, D_X, classify, symmetry_basis, symmetry_basis_original, vector_field,
)
from fkdv_symmetry.expr import Const, TIME, parse
from fkdv_symmetry.gauge import (
    EquationSpec, EquivTransform, apply_equiv, equation_from_gauged, invert, restricted_transform,
)
from fkdv_symmetry.reduce import (
    SolutionField, exact_catalog, integrate_reduced, lift, lift_rectangle, lifted_equation,
    reduction_for,
)
from fkdv_symmetry.verify import (
    DomainError, Grid, finite_difference_jet, flow_transform, grid_residual, pde_residual,
    residual_table, symmetry_check, transform_field,
)

EXACT = 1e-9


@pytest.fixture
def kdv5():
    """u_t + u^2 u_x - u_xxxxx = 0 on t in [0, 1]."""
    return EquationSpec.from_strings(2, "0", "-1", (0.0, 1.0))


@pytest.fixture
def stationary():
    return exact_catalog(2.0, -1)[0]


@pytest.fixture
def wave():
    return exact_catalog(2.0, -1)[1]


def scaled(s, factor):
    return SolutionField(f"{s.label} scaled", "test", s.t_range, s.x_range,
                         lambda t, x: factor * s.derivatives(t, x))


def value_only(s):
    return SolutionField(s.label, "test", s.t_range, s.x_range, value=s.u)


class TestGrid:
    def test_infinite_range(self):
        with pytest.raises(DomainError, match="finite"):
            Grid((0.0, math.inf), (0.0, 1.0))

    def test_steps_follow_span(self):
        assert Grid((0.0, 2.0), (1.0, 1.0)).steps == pytest.approx((0.02, 0.01))

    def test_mesh_layout(self):
        t, x = Grid((0.0, 1.0), (2.0, 3.0), 3, 4).mesh()
        assert t.shape == (3, 4)
        assert t[:, 0].tolist() == [0.0, 0.5, 1.0]
        assert x[0, -1] == 3.0


class TestResidual:
    def test_zero_field(self, kdv5):
        zero = SolutionField("zero", "test", (0.0, 1.0), (-1.0, 1.0),
                             lambda t, x: np.zeros((7,) + t.shape))
        report = pde_residual(zero, kdv5, Grid((0.0, 1.0), (-1.0, 1.0)), tolerance=EXACT)
        assert report.max_rel == 0.0
        assert report.passed

    def test_denominator_is_largest_term(self):
        e = EquationSpec.from_strings(2, "0.5", "-1", (0.0, 1.0))

        def jet(t, x):
            # u = 2 with u_t = 3: terms (3, 0, 1, 0)
            ones = np.ones_like(t)
            return np.stack([2.0 * ones, 3.0 * ones] + [0.0 * ones] * 5)
        inconsistent = SolutionField("inconsistent", "test", (0.0, 1.0), (0.0, 1.0), jet)
        report = pde_residual(inconsistent, e, Grid((0.0, 1.0), (0.0, 1.0), 5, 5))
        assert report.max_rel == pytest.approx(4.0 / (1.0 + 3.0), rel=EXACT)
        assert report.mean_rel == pytest.approx(1.0, rel=EXACT)

    def test_stationary(self, kdv5, stationary):
        report = pde_residual(stationary, kdv5, Grid((0.0, 1.0), (1.0, 3.0)), tolerance=EXACT)
        assert report.passed
        assert report.method == "analytic"

    def test_perturbed_stationary_fails(self, kdv5, stationary):
        report = pde_residual(scaled(stationary, 1.001), kdv5, Grid((0.0, 1.0), (1.0, 3.0)))
        assert report.max_rel >= 1e-5
        assert report.passed is None

    def test_finite_differences(self, kdv5, stationary):
        report = pde_residual(value_only(stationary), kdv5, Grid((0.0, 1.0), (2.0, 3.0), 10, 10))
        assert report.method == "finite-difference"
        assert report.max_rel <= 1e-4

    def test_finite_difference_jet_of_polynomial(self):
        t, x = np.meshgrid([0.5, 1.0], [0.3, 0.7], indexing="ij")
        jet = finite_difference_jet(lambda t, x: t ** 2 * x ** 5, t, x, 1e-2, 1e-2)
        np.testing.assert_allclose(jet[1], 2 * t * x ** 5, rtol=1e-8)
        np.testing.assert_allclose(jet[3], 20 * t ** 2 * x ** 3, rtol=1e-6)
        np.testing.assert_allclose(jet[6], 120 * t ** 2, rtol=1e-4)

    def test_grid_outside_field(self, kdv5, stationary):
        with pytest.raises(DomainError, match="field domain"):
            pde_residual(stationary, kdv5, Grid((0.0, 1.0), (-1.0, 1.0)))

    def test_grid_outside_window(self, kdv5, wave):
        with pytest.raises(DomainError, match="equation window"):
            pde_residual(wave, kdv5, Grid((0.0, 2.0), (-1.0, 1.0)))

    def test_residual_table(self, kdv5, stationary):
        frame = residual_table(stationary, kdv5, Grid((0.0, 1.0), (1.0, 3.0), 4, 5))
        assert list(frame.columns) == ["t", "x", "u", "residual"]
        assert len(frame) == 20
        assert frame["residual"].max() <= EXACT


class TestGridResidual:
    @staticmethod
    def sampled(field, extra=None):
        t, x = np.meshgrid(np.linspace(0.0, 0.02, 9), np.linspace(-1.0, 1.0, 161), indexing="ij")
        u = field.u(t, x)
        if extra is not None:
            u = u + extra(x)
        return pd.DataFrame({"t": t.ravel(), "x": x.ravel(), "u": u.ravel()})

    def test_travelling_wave_samples(self, kdv5, wave):
        report = grid_residual(self.sampled(wave), kdv5, tolerance=1e-2)
        assert report.method == "grid-difference"
        assert report.passed, report.describe()

    def test_perturbed_samples(self, kdv5, wave):
        report = grid_residual(self.sampled(wave, lambda x: 5.0 * np.sin(3.0 * x)), kdv5)
        assert report.max_rel >= 5e-2

    def test_missing_column(self, kdv5):
        with pytest.raises(DomainError, match="lacks columns"):
            grid_residual(pd.DataFrame({"t": [0.0], "x": [0.0]}), kdv5)

    def test_uneven_spacing(self, kdv5, wave):
        frame = self.sampled(wave)
        frame.loc[frame["x"] == 1.0, "x"] = 1.5
        with pytest.raises(DomainError, match="evenly spaced"):
            grid_residual(frame, kdv5)

    def test_too_few_points(self, kdv5):
        t, x = np.meshgrid([0.0, 0.1, 0.2], np.linspace(0.0, 1.0, 9), indexing="ij")
        frame = pd.DataFrame({"t": t.ravel(), "x": x.ravel(), "u": 0.0})
        with pytest.raises(DomainError, match="at least 5"):
            grid_residual(frame, kdv5)


class TestTransformField:
    def test_restricted_image(self, kdv5, stationary):
        g = restricted_transform(2.0, 1.5, 0.5, domain=kdv5.interval)
        image = transform_field(g, stationary, 2.0)
        assert image.provenance == "transformed"
        report = pde_residual(image, apply_equiv(g, kdv5), Grid((0.5, 2.0), (2.0, 6.0), 10, 10),
                              tolerance=EXACT)
        assert report.passed, report.describe()

    def test_nonlinear_time_map(self, kdv5, wave):
        g = EquivTransform(parse("exp(t)"), 1.0, 0.0, kdv5.interval)
        image = transform_field(g, wave, 2.0)
        report = pde_residual(image, apply_equiv(g, kdv5), Grid((1.0, math.e), (-3.0, 3.0), 8, 8),
                              tolerance=1e-8)
        assert report.passed, report.describe()

    def test_needs_finite_window(self, wave):
        g = restricted_transform(1.0, 2.0, 0.0)
        with pytest.raises(DomainError, match="finite time window"):
            transform_field(g, wave, 2.0)


class TestFlows:
    def test_zero_parameter(self, wave):
        assert flow_transform(D_X, 0.0, wave) is wave

    def test_space_translation(self, kdv5, wave):
        flowed = flow_transform(D_X, 0.5, wave)
        t, x = np.array([0.2, 0.7]), np.array([-1.0, 2.0])
        np.testing.assert_allclose(flowed.u(t, x + 0.5), wave.u(t, x), rtol=1e-14)
        report = pde_residual(flowed, kdv5, Grid((0.0, 1.0), (-5.0, 5.0)), tolerance=EXACT)
        assert report.passed

    def test_group_property(self, stationary):
        v = vector_field(tau=10.0 * TIME, xi1=2.0, eta1=-4.0)
        twice = flow_transform(v, 0.05, flow_transform(v, 0.1, stationary))
        once = flow_transform(v, 0.15, stationary)
        t, x = np.array([0.3, 0.9]), np.array([1.5, 2.5])
        np.testing.assert_allclose(twice.u(t, x), once.u(t, x), rtol=1e-12)

    def test_no_explicit_flow(self, wave):
        with pytest.raises(ValueError, match="no explicit flow"):
            flow_transform(vector_field(tau=TIME * TIME), 0.1, wave)

    def test_scaling_symmetry_of_stationary(self, kdv5, stationary):
        c = classify(kdv5)
        reports = symmetry_check(symmetry_basis(c, 2.0)[2], stationary, kdv5, [-0.1, 0.1],
                                 Grid((0.2, 1.0), (1.0, 3.0), 12, 12), tolerance=EXACT)
        assert len(reports) == 2
        assert all(r.passed for r in reports)
        assert reports[0].label.endswith("at eps = -0.1")

    def test_flow_off_the_grid(self, kdv5, stationary):
        with pytest.raises(DomainError, match="off the grid"):
            symmetry_check(D_X, stationary, kdv5, [10.0], Grid((0.0, 1.0), (1.0, 3.0)))


class TestPowerLawSymmetries:
    @pytest.fixture
    def lifted(self):
        e = EquationSpec.from_strings(2, "0", "-t^2", (1.0, 2.0))
        c = classify(e)
        r = reduction_for(make_subalgebra("g2.1", c, 2.0), c, 2.0)
        traj = integrate_reduced(r.ode, [3.0, 0.0, 0.0, 0.0, 0.0], (0.0, 2.0))
        x_range = lift_rectangle(r, traj, (1.0, 2.0))
        return e, c, lift(r, traj, (1.0, 2.0), x_range)

    def test_scaling_is_a_symmetry(self, lifted):
        e, c, s = lifted
        reports = symmetry_check(symmetry_basis(c, 2.0)[1], s, e, [-0.02, 0.02],
                                 Grid(s.t_range, s.x_range, 12, 12), tolerance=1e-6)
        assert all(r.passed for r in reports), [r.describe() for r in reports]

    def test_time_translation_is_not(self, lifted):
        e, _, s = lifted
        reports = symmetry_check(D_T, s, e, [0.3], Grid(s.t_range, s.x_range, 12, 12))
        assert reports[0].max_rel >= 1e-2


class TestConjugatedFlows:
    def test_scaling_in_original_variables(self):
        alpha = Const(0.3)
        e = lifted_equation(2.0, -1, alpha, (1.0, 2.0))
        c = classify(e, auto_gauge=True)
        s = exact_catalog(2.0, -1, alpha, (1.0, 2.0))[0]
        scaling = symmetry_basis_original(e, c)[2]
        reports = symmetry_check(scaling, s, e, [-0.05, 0.05],
                                 Grid((1.0, 2.0), (1.0, 3.0), 10, 10), tolerance=1e-6)
        assert all(r.passed for r in reports), [r.describe() for r in reports]


class TestExtensionSymmetries:
    @pytest.mark.parametrize("beta, n, name, param", [
        ("t^2", 2.0, "g2.1", None),
        ("1/t", 2.0, "g2.2", 0.4),
        ("exp(t)", 2.0, "g3", None),
        ("-exp(t)", 3.0, "g3", None),
    ])
    def test_lifted_solutions_flow_to_solutions(self, beta, n, name, param):
        e = EquationSpec.from_strings(n, "0", beta, (1.0, 2.0))
        c = classify(e)
        r = reduction_for(make_subalgebra(name, c, n, param), c, n)
        traj = integrate_reduced(r.ode, [1.0, 0.1, 0.0, 0.0, 0.0], (0.0, 3.0))
        s = lift(r, traj, (1.0, 2.0), lift_rectangle(r, traj, (1.0, 2.0)))
        reports = symmetry_check(symmetry_basis(c, n)[1], s, e, [-0.01, 0.01],
                                 Grid(s.t_range, s.x_range, 10, 10), tolerance=1e-6)
        assert all(r.passed for r in reports), [r.describe() for r in reports]


class TestOriginalVariableSymmetries:
    @pytest.mark.parametrize("beta_gauged, alpha, name", [
        ("-(t + 1)^2", "0.3", "g2.1"),
        ("-exp(t)", "0.3", "g3"),
        ("-exp(t)", "1/t", "g3"),
    ])
    def test_pulled_back_solutions_flow_to_solutions(self, beta_gauged, alpha, name):
        e = equation_from_gauged(parse(beta_gauged), parse(alpha), 2.0, (1.0, 2.0))
        c = classify(e, auto_gauge=True)
        window = c.normalizer.image(c.gauge.image(e.interval))
        r = reduction_for(make_subalgebra(name, c, 2.0), c, 2.0)
        traj = integrate_reduced(r.ode, [1.0, 0.1, 0.0, 0.0, 0.0], (0.0, 3.0))
        canonical = lift(r, traj, window, lift_rectangle(r, traj, window))
        gauged = transform_field(invert(c.normalizer), canonical, 2.0)
        s = transform_field(invert(c.gauge), gauged, 2.0)
        grid = Grid(s.t_range, s.x_range, 10, 10)
        assert pde_residual(s, e, grid, tolerance=1e-6).passed
        reports = symmetry_check(symmetry_basis_original(e, c)[1], s, e, [-0.01, 0.01], grid,
                                 tolerance=1e-6)
        assert all(r.passed for r in reports), [r.describe() for r in reports]
