#!/usr/bin/env python
# coding: utf-8
"""
Module: reduce
Description: Similarity reductions, reduced-ODE integration, ansatz lifting and
the exact-solution catalog.

Every reduction of the canonical equations has the form

    omega = x A(t) + B(t),    u = mu(t) phi(omega),

    eps phi''''' + (phi^n - k omega - s) phi' + r phi = 0,

so one data type covers all five rows. Lifting a trajectory back to a PDE
solution uses the chain rule through A, B and mu, and takes phi''''' from the
ODE itself.

Configuration:
    ODE_TOL, OVERFLOW_GUARD, LIFT_CHECK_POINTS, TABLE_SAMPLES
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp

from fkdv_symmetry.algebra import Subalgebra
from fkdv_symmetry.classify import Case, ClassificationResult
from fkdv_symmetry.expr import (
    Const, Expr, ExprDomainError, ONE, TIME, ZERO, differentiate, evaluate, exp,
    integral, ln, to_string,
)
from fkdv_symmetry.gauge import EquationSpec

# ==============================
# CONFIGURATION SECTION
# ==============================

ODE_TOL = 1e-10             # Local relative tolerance of the reduced-ODE integrator
OVERFLOW_GUARD = 1e8        # |phi| above this truncates the trajectory
LIFT_CHECK_POINTS = 25      # Per-side resolution of the lift-domain check
LIFT_MARGIN = 0.02          # Share of the omega-span kept clear at each end
TABLE_SAMPLES = 201         # Rows of exported trajectory tables

LOGGER = logging.getLogger(__name__)

Jet = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ReductionError(ValueError):
    """No reduction exists for the request, or the lift domain is invalid."""


class IntegrationError(RuntimeError):
    """The reduced ODE could not be integrated over the requested span."""


# ==============================
# DATA TYPES
# ==============================

@dataclass(frozen=True)
class ReducedODE:
    """eps phi''''' + (phi^n - k omega - s) phi' + r phi = 0."""
    epsilon: int
    n: float
    k: float
    s: float
    r: float

    @property
    def integer_power(self) -> bool:
        return float(self.n).is_integer()

    def rhs(self, omega, state) -> np.ndarray:
        """phi''''' from omega and (phi, phi', phi'', phi''', phi'''')."""
        phi, dphi = state[0], state[1]
        base = phi if self.integer_power else np.maximum(phi, 0.0)
        return -((np.power(base, self.n) - self.k * omega - self.s) * dphi
                 + self.r * phi) / self.epsilon

    def describe(self) -> str:
        return (f"{self.epsilon:+d}*phi''''' + (phi^{self.n:g} - ({self.k:.12g})*omega "
                f"- ({self.s:.12g}))*phi' + ({self.r:.12g})*phi = 0")


@dataclass(frozen=True)
class Reduction:
    name: str
    omega_scale: Expr
    omega_shift: Expr
    mu: Expr
    ode: ReducedODE
    params: Dict[str, float] = field(default_factory=dict, hash=False)

    def omega(self, t, x) -> np.ndarray:
        return x * evaluate(self.omega_scale, t) + evaluate(self.omega_shift, t)

    def describe(self) -> Dict[str, object]:
        return {
            "subalgebra": self.name,
            "params": dict(self.params),
            "omega": f"x*({to_string(self.omega_scale)}) + ({to_string(self.omega_shift)})",
            "ansatz": f"u = ({to_string(self.mu)})*phi(omega)",
            "ode": self.ode.describe(),
        }


@dataclass(frozen=True)
class Trajectory:
    ode: ReducedODE
    omega0: float
    omega_end: float
    requested: Tuple[float, float]
    solution: object = field(compare=False, repr=False)
    truncated: bool = False
    tol: float = ODE_TOL

    @property
    def span(self) -> Tuple[float, float]:
        return (min(self.omega0, self.omega_end), max(self.omega0, self.omega_end))

    def state(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        lo, hi = self.span
        if np.any(omega < lo) or np.any(omega > hi):
            raise ReductionError(f"omega outside the integrated span [{lo:.6g}, {hi:.6g}]")
        return np.asarray(self.solution(omega))

    def table(self, samples: int = TABLE_SAMPLES) -> pd.DataFrame:
        omega = np.linspace(self.omega0, self.omega_end, samples)
        state = self.state(omega)
        frame = pd.DataFrame({"omega": omega})
        for order in range(5):
            frame[f"phi_{order}"] = state[order]
        frame["phi_5"] = self.ode.rhs(omega, state)
        return frame

    def describe(self) -> Dict[str, object]:
        return {"omega0": self.omega0, "omega_end": self.omega_end,
                "requested": list(self.requested), "truncated": self.truncated,
                "tolerance": self.tol}


@dataclass(frozen=True)
class SolutionField:
    """
    Candidate solution u(t, x) on a rectangle.

    `jet(t, x)` returns the stacked array (u, u_t, u_x, u_xx, u_xxx, u_xxxx,
    u_xxxxx); fields without a jet provide `value(t, x)` only.
    """
    label: str
    provenance: str
    t_range: Tuple[float, float]
    x_range: Tuple[float, float]
    jet: Optional[Jet] = field(default=None, compare=False, repr=False)
    value: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(
        default=None, compare=False, repr=False)

    def u(self, t, x) -> np.ndarray:
        if self.value is not None:
            return np.asarray(self.value(t, x))
        return self.derivatives(t, x)[0]

    def derivatives(self, t, x) -> np.ndarray:
        if self.jet is None:
            raise ValueError(f"field '{self.label}' has no analytic derivatives")
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        return np.asarray(self.jet(t, x))


# ==============================
# REDUCTIONS
# ==============================

_SUBALGEBRA_CASE = {"g2.1": Case.POWER, "g2.2": Case.POWER, "g3": Case.EXPONENTIAL,
                    "g4.1": Case.CONSTANT, "g4.2": Case.CONSTANT, "g4.alg": Case.CONSTANT}


def reduction_for(sub: Subalgebra, c: ClassificationResult, n: float) -> Reduction:
    """
    Similarity reduction generated by a subalgebra of the optimal system.

    Raises:
        ReductionError: g0 (constants only), the two-dimensional subalgebra
            (algebraic reduction, served by exact_catalog), a subalgebra of a
            different case, or an unknown name.
    """
    if sub.name == "g0":
        raise ReductionError("reduction yields constants only")
    if sub.name not in _SUBALGEBRA_CASE:
        raise ReductionError(f"unknown subalgebra '{sub.name}'")
    if sub.name == "g4.alg":
        raise ReductionError("the two-dimensional subalgebra gives an algebraic equation; "
                             "its solution is the stationary catalog entry")
    if _SUBALGEBRA_CASE[sub.name] is not c.case:
        raise ReductionError(f"subalgebra {sub.name} is not in the optimal system "
                             f"of case {c.case.value}")
    eps = c.epsilon
    if sub.name == "g2.1":
        rho = c.rho
        return Reduction(sub.name, TIME ** Const(-(rho + 1.0) / 5.0), ZERO,
                         TIME ** Const((rho - 4.0) / (5.0 * n)),
                         ReducedODE(eps, n, (rho + 1.0) / 5.0, 0.0, (rho - 4.0) / (5.0 * n)),
                         {"rho": rho})
    if sub.name == "g2.2":
        a = sub.params.get("a", 0.0)
        return Reduction(sub.name, ONE, Const(-a / n) * ln(TIME), TIME ** Const(-1.0 / n),
                         ReducedODE(eps, n, 0.0, a / n, -1.0 / n), {"a": a})
    if sub.name == "g3":
        return Reduction(sub.name, exp(Const(-0.2) * TIME), ZERO,
                         exp(Const(1.0 / (5.0 * n)) * TIME),
                         ReducedODE(eps, n, 0.2, 0.0, 1.0 / (5.0 * n)))
    if sub.name == "g4.1":
        sigma = sub.params.get("sigma", 0.0)
        return Reduction(sub.name, ONE, Const(-sigma) * TIME, ONE,
                         ReducedODE(eps, n, 0.0, sigma, 0.0), {"sigma": sigma})
    return Reduction(sub.name, TIME ** Const(-0.2), ZERO, TIME ** Const(-4.0 / (5.0 * n)),
                     ReducedODE(eps, n, 0.2, 0.0, -4.0 / (5.0 * n)))


# ==============================
# INTEGRATION
# ==============================

def integrate_reduced(ode: ReducedODE, ic: Sequence[float], span: Tuple[float, float],
                      tol: float = ODE_TOL, guard: float = OVERFLOW_GUARD,
                      max_step: float = np.inf) -> Trajectory:
    """
    Integrate the reduced ODE with an embedded Runge-Kutta 5(4) pair and dense output.

    Args:
        ode: Reduced equation.
        ic: (phi, phi', phi'', phi''', phi'''') at span[0].
        span: (omega0, omega1); omega1 < omega0 integrates backwards.
        tol: Local relative tolerance.
        guard: |phi| above this stops the integration; the trajectory is
            returned with truncated=True.
        max_step: Upper bound on the step size; with a loose tol the steps stay
            at this bound.

    Raises:
        IntegrationError: step-size underflow, or phi reaching zero when n is
            not an integer.
    """
    ic = np.asarray(ic, dtype=float)
    if ic.shape != (5,):
        raise ValueError(f"five initial values are required, got {ic.size}")
    if not ode.integer_power and ic[0] <= 0.0:
        raise IntegrationError("phi must start positive for a non-integer exponent")

    def system(omega, y):
        return np.array([y[1], y[2], y[3], y[4], ode.rhs(omega, y)])

    def overflow(omega, y):
        return guard - abs(y[0])
    overflow.terminal = True

    def positivity(omega, y):
        return y[0]
    positivity.terminal = True
    positivity.direction = -1

    events = [overflow] if ode.integer_power else [overflow, positivity]
    result = solve_ivp(system, span, ic, method="RK45", dense_output=True,
                       rtol=tol, atol=tol, max_step=max_step, events=events)
    if result.status == -1:
        raise IntegrationError(f"integration failed near omega = {result.t[-1]:.6g}: "
                               f"{result.message}")
    truncated = False
    if result.status == 1:
        if not ode.integer_power and result.t_events[1].size:
            raise IntegrationError(f"phi reached zero at omega = {result.t_events[1][0]:.6g} "
                                   f"(n = {ode.n:g} is not an integer)")
        truncated = True
        LOGGER.warning("trajectory truncated at omega = %.6g: |phi| reached %.1e",
                       result.t[-1], guard)
    LOGGER.info("integrated %s over [%.6g, %.6g] in %d steps", ode.describe(),
                span[0], result.t[-1], result.t.size - 1)
    return Trajectory(ode, float(span[0]), float(result.t[-1]),
                      (float(span[0]), float(span[1])), result.sol, truncated, tol)


# ==============================
# LIFTING
# ==============================

def lift(r: Reduction, traj: Trajectory, t_range: Tuple[float, float],
         x_range: Tuple[float, float]) -> SolutionField:
    """
    PDE solution u = mu(t) phi(x A(t) + B(t)) on the rectangle t_range x x_range.

    Raises:
        ReductionError: the rectangle maps outside the trajectory's omega-span
            or outside the domain of A, B, mu.
    """
    t_check, x_check = np.meshgrid(np.linspace(*t_range, LIFT_CHECK_POINTS),
                                   np.linspace(*x_range, LIFT_CHECK_POINTS))
    try:
        omega = r.omega(t_check, x_check)
        evaluate(r.mu, t_check)
    except ExprDomainError as error:
        raise ReductionError(f"ansatz undefined on t in {t_range}: {error}") from error
    lo, hi = traj.span
    if np.min(omega) < lo or np.max(omega) > hi:
        raise ReductionError(f"rectangle maps to omega in [{np.min(omega):.6g}, "
                             f"{np.max(omega):.6g}], outside the span [{lo:.6g}, {hi:.6g}]")

    scale, shift, amplitude = r.omega_scale, r.omega_shift, r.mu
    d_scale, d_shift, d_amplitude = (differentiate(scale), differentiate(shift),
                                     differentiate(amplitude))

    def jet(t, x):
        A, dA = evaluate(scale, t), evaluate(d_scale, t)
        dB = evaluate(d_shift, t)
        mu, dmu = evaluate(amplitude, t), evaluate(d_amplitude, t)
        w = x * A + evaluate(shift, t)
        state = traj.state(w.ravel()).reshape((5,) + w.shape)
        phi5 = r.ode.rhs(w, state)
        derivs = [mu * state[0], dmu * state[0] + mu * state[1] * (x * dA + dB)]
        derivs += [mu * A ** order * state[order] for order in range(1, 5)]
        derivs.append(mu * A ** 5 * phi5)
        return np.stack(derivs)

    return SolutionField(f"lifted {r.name}", "lifted", tuple(t_range), tuple(x_range), jet)


def lift_rectangle(r: Reduction, traj: Trajectory, t_range: Tuple[float, float],
                   margin: float = LIFT_MARGIN) -> Tuple[float, float]:
    """
    Widest x-range whose rectangle with t_range maps into the trajectory's omega-span.

    The span is shrunk by `margin` of its width at both ends first, so a
    truncated trajectory shrinks the lift domain accordingly.
    """
    t = np.linspace(*t_range, 4 * LIFT_CHECK_POINTS)
    try:
        scale = np.asarray(evaluate(r.omega_scale, t)) * np.ones_like(t)
        shift = np.asarray(evaluate(r.omega_shift, t)) * np.ones_like(t)
    except ExprDomainError as error:
        raise ReductionError(f"ansatz undefined on t in {t_range}: {error}") from error
    lo, hi = traj.span
    lo, hi = lo + margin * (hi - lo), hi - margin * (hi - lo)
    x_lo = float(np.max((lo - shift) / scale))
    x_hi = float(np.min((hi - shift) / scale))
    if not x_lo < x_hi:
        raise ReductionError(f"omega-span [{lo:.6g}, {hi:.6g}] is too short to cover "
                             f"t in {t_range}")
    return x_lo, x_hi


# ==============================
# EXACT SOLUTIONS
# ==============================

def stationary_constant(n: float, epsilon: int) -> float:
    """C with u = C x^(-4/n) stationary: C^n = -8 eps (n+1)(n+2)(n+4)(3n+4) / n^4."""
    radicand = -8.0 * epsilon * (n + 1.0) * (n + 2.0) * (n + 4.0) * (3.0 * n + 4.0) / n ** 4
    if radicand > 0.0:
        return radicand ** (1.0 / n)
    if float(n).is_integer() and int(n) % 2 == 1:
        return -((-radicand) ** (1.0 / n))
    raise ReductionError(f"-8*eps*(n+1)(n+2)(n+4)(3n+4) = {radicand * n ** 4:.6g} "
                         f"has no real {n:g}-th root")


def _falling(k: float, order: int) -> float:
    return math.prod(-k - j for j in range(order))


def _time_factor(alpha: Optional[Expr], t0: float) -> Tuple[Expr, Expr]:
    """exp(-int alpha) and its derivative, or 1 and 0 without alpha."""
    if alpha is None or alpha == ZERO:
        return ONE, ZERO
    factor = exp(-integral(alpha, t0))
    return factor, differentiate(factor)


def _stationary(n: float, epsilon: int, alpha: Optional[Expr], t0: float,
                t_range) -> SolutionField:
    C = stationary_constant(n, epsilon)
    k = 4.0 / n
    factor, d_factor = _time_factor(alpha, t0)

    def jet(t, x):
        if np.any(x <= 0.0):
            raise ExprDomainError("stationary solution needs x > 0", "x")
        f, df = evaluate(factor, t), evaluate(d_factor, t)
        profile = C * x ** -k
        derivs = [f * profile, df * profile]
        derivs += [f * C * _falling(k, order) * x ** (-k - order) for order in range(1, 6)]
        return np.stack(derivs)

    lifted = alpha is not None and alpha != ZERO
    label = "stationary (alpha-lifted)" if lifted else "stationary"
    return SolutionField(label, "exact", t_range, (0.0, math.inf), jet)


def _tanh_polynomials() -> List[Polynomial]:
    """tanh^2 and its first five z-derivatives as polynomials in tanh."""
    chain = Polynomial([1.0, 0.0, -1.0])
    polys = [Polynomial([0.0, 0.0, 1.0])]
    for _ in range(5):
        polys.append(chain * polys[-1].deriv())
    return polys


def _travelling(sign: int, epsilon: int, alpha: Optional[Expr], t0: float,
                t_range) -> SolutionField:
    amplitude = sign * 2.0 * math.sqrt(-10.0 * epsilon)
    speed = 24.0 * epsilon
    polys = _tanh_polynomials()
    factor, d_factor = _time_factor(alpha, t0)
    clock = TIME if factor == ONE else integral(factor ** Const(2.0), t0)
    d_clock = differentiate(clock)

    def jet(t, x):
        f, df = evaluate(factor, t), evaluate(d_factor, t)
        z = x + speed * evaluate(clock, t)
        tanh = np.tanh(z)
        shape = [amplitude * (3.0 * polys[0](tanh) - 2.0)]
        shape += [3.0 * amplitude * polys[order](tanh) for order in range(1, 6)]
        u_t = df * shape[0] + f * shape[1] * speed * evaluate(d_clock, t)
        return np.stack([f * shape[0], u_t] + [f * s for s in shape[1:]])

    lifted = factor != ONE
    label = f"travelling wave ({'+' if sign > 0 else '-'}){' (alpha-lifted)' if lifted else ''}"
    return SolutionField(label, "exact", t_range, (-math.inf, math.inf), jet)


def exact_catalog(n: float, epsilon: int, alpha: Optional[Expr] = None,
                  interval: Optional[Tuple[float, float]] = None) -> List[SolutionField]:
    """
    Closed-form solutions of u_t + u^n u_x + alpha u + eps exp(-n int alpha) u_xxxxx = 0.

    Args:
        n: Exponent of the nonlinearity.
        epsilon: Sign of beta.
        alpha: Damping coefficient; None or 0 gives the constant-coefficient equation.
        interval: Time window of the alpha-lifted solutions; int alpha starts at
            its left end.

    Returns:
        The stationary solution C x^(-4/n) and, for n = 2 with eps = -1, the two
        travelling waves +-2 sqrt(-10 eps)(3 tanh^2(x + 24 eps t) - 2); all with
        the factor exp(-int alpha) and the travelling clock int exp(-2 int alpha)
        when alpha is given.

    Raises:
        ReductionError: the stationary constant has no real root.
    """
    lifted = alpha is not None and alpha != ZERO
    if lifted and interval is None:
        raise ValueError("alpha-lifted solutions need a time interval")
    t0 = interval[0] if lifted else 0.0
    t_range = tuple(interval) if lifted else (-math.inf, math.inf)
    fields = [_stationary(n, epsilon, alpha, t0, t_range)]
    if n == 2.0 and epsilon == -1:
        fields += [_travelling(sign, epsilon, alpha, t0, t_range) for sign in (1, -1)]
    else:
        LOGGER.info("travelling waves need n = 2 and eps = -1; skipped for n = %g, eps = %d",
                    n, epsilon)
    return fields


def lifted_equation(n: float, epsilon: int, alpha: Expr,
                    interval: Tuple[float, float]) -> EquationSpec:
    """The equation solved by the alpha-lifted catalog: beta = eps exp(-n int alpha)."""
    beta = Const(float(epsilon)) * exp(Const(-n) * integral(alpha, interval[0]))
    return EquationSpec(float(n), alpha, beta, tuple(interval))


__all__ = [
    "IntegrationError", "ReducedODE", "Reduction", "ReductionError", "SolutionField",
    "Trajectory", "exact_catalog", "integrate_reduced", "lift", "lift_rectangle",
    "lifted_equation", "reduction_for", "stationary_constant",
]
