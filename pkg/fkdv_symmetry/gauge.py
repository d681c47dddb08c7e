#!/usr/bin/env python
# coding: utf-8
"""
Module: gauge
Description: Equations of the class

        u_t + u^n u_x + alpha(t) u + beta(t) u_xxxxx = 0

and the point transformations acting on it,

        t~ = T(t),  x~ = delta1 x + delta2,  u~ = (delta1 / T_t)^(1/n) u,
        alpha~ = alpha / T_t + T_tt / (n T_t^2),  beta~ = delta1^5 beta / T_t,

with delta1 T_t > 0. The module applies, composes and inverts these
transformations, removes alpha by the gauge T = int exp(-n int alpha), tests
the reducibility criterion n (alpha/beta)_t = (1/beta)_tt and builds the
transformation that makes both coefficients constant.

Time maps without a closed-form inverse produce a *parametric* equation: its
coefficients are stored as expressions in the source time s together with a
clock t = C(s). Sampling such an equation never needs the inverse; pointwise
evaluation at a given t inverts the clock numerically.

Configuration:
    VALIDATION_SAMPLES, REDUCIBILITY_SAMPLES, CONSTANTIZE_TOL, GAUGE_CHECK_TOL
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np

from fkdv_symmetry.expr import (
    Add, Const, Div, Expr, ExprDomainError, Func, Inverse, Mul, Neg, ONE, Pow,
    QuadratureError, Sub, TIME, Var, ZERO, contains_var, differentiate,
    evaluate, exp, integral, inverse, ln, parse, power, substitute, to_string,
)

# ==============================
# CONFIGURATION SECTION
# ==============================

DEFAULT_INTERVAL = (1.0, 2.0)   # Working window when none is given
VALIDATION_SAMPLES = 50         # Points used to check sign and monotonicity conditions
REDUCIBILITY_SAMPLES = 41       # Points used by the reducibility criterion
CONSTANTIZE_TOL = 1e-8          # Constancy required of the constantized coefficients
GAUGE_CHECK_TOL = 1e-9          # Largest |alpha~| accepted after gauging
INVERSE_CHECK_TOL = 1e-9        # Acceptance of a symbolic inverse on sampled points

LOGGER = logging.getLogger(__name__)

Interval = Tuple[float, float]


class TransformError(ValueError):
    """An equivalence transformation violates its conditions on the working window."""


class CriterionError(ValueError):
    """The reducibility criterion does not hold (or cannot be evaluated)."""


# ==============================
# EQUATIONS
# ==============================

@dataclass(frozen=True)
class EquationSpec:
    """
    One equation of the class, (n, alpha, beta) on a working window.

    When `clock` is set, `alpha` and `beta` are expressions in a source time s
    ranging over `source`, and the equation's own time is t = clock(s);
    `interval` is always the window in the equation's own time.
    """
    n: float
    alpha: Expr
    beta: Expr
    interval: Interval = DEFAULT_INTERVAL
    clock: Optional[Expr] = None
    source: Optional[Interval] = None

    def __post_init__(self):
        if self.n in (0.0, 1.0):
            raise ValueError(f"exponent n must differ from 0 and 1, got {self.n}")
        lo, hi = self.interval
        if not lo < hi:
            raise ValueError(f"interval must satisfy t_min < t_max, got {self.interval}")
        if self.clock is not None and self.source is None:
            raise ValueError("a clocked equation needs its source window")
        try:
            values = np.asarray(evaluate(self.beta, self.sample_parameters(VALIDATION_SAMPLES)))
        except ExprDomainError as error:
            raise ValueError(f"beta cannot be evaluated on the window: {error}") from error
        if np.any(values == 0.0) or np.any(np.sign(values) != np.sign(values[0])):
            raise ValueError(f"beta = {to_string(self.beta)} vanishes or changes sign "
                             f"on {self.interval}")

    @classmethod
    def from_strings(cls, n: float, alpha: str, beta: str,
                     interval: Interval = DEFAULT_INTERVAL) -> "EquationSpec":
        return cls(float(n), parse(alpha), parse(beta), tuple(map(float, interval)))

    @property
    def parameter_window(self) -> Interval:
        return self.source if self.clock is not None else self.interval

    @property
    def epsilon(self) -> int:
        return int(np.sign(evaluate(self.beta, self.parameter_window[0])))

    def sample_parameters(self, count: int) -> np.ndarray:
        lo, hi = self.parameter_window
        return np.linspace(lo, hi, count)

    def times(self, s: np.ndarray) -> np.ndarray:
        """Equation time at source parameters s."""
        if self.clock is None:
            return np.asarray(s, dtype=float)
        return np.asarray(evaluate(self.clock, s))

    def time_derivative(self, f: Expr) -> Expr:
        """d f / dt in the equation's own time, as an expression in the parameter."""
        if self.clock is None:
            return differentiate(f)
        return differentiate(f) / differentiate(self.clock)

    def in_own_time(self, f: Expr) -> Expr:
        """Rewrite a parameter expression as an expression in the equation's time."""
        if self.clock is None:
            return f
        lo, hi = self.source
        return substitute(f, inverse(self.clock, lo, hi))

    def coefficients_at(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """alpha(t), beta(t) at equation times t."""
        return (np.asarray(evaluate(self.in_own_time(self.alpha), t)),
                np.asarray(evaluate(self.in_own_time(self.beta), t)))

    def is_gauged(self, tol: float = GAUGE_CHECK_TOL) -> bool:
        if self.alpha == ZERO:
            return True
        values = np.asarray(evaluate(self.alpha, self.sample_parameters(VALIDATION_SAMPLES)))
        return bool(np.max(np.abs(values)) <= tol)

    def describe(self) -> Dict[str, object]:
        summary = {
            "n": self.n,
            "alpha": to_string(self.alpha),
            "beta": to_string(self.beta),
            "interval": list(self.interval),
        }
        if self.clock is not None:
            summary["clock"] = to_string(self.clock)
            summary["source"] = list(self.source)
        return summary


# ==============================
# TRANSFORMATIONS
# ==============================

@dataclass(frozen=True)
class EquivTransform:
    """t~ = T(t), x~ = delta1 x + delta2, u~ = (delta1 / T_t)^(1/n) u."""
    T: Expr
    delta1: float = 1.0
    delta2: float = 0.0
    domain: Optional[Interval] = None
    label: str = ""

    @cached_property
    def rate(self) -> Expr:
        return differentiate(self.T)

    @cached_property
    def curvature(self) -> Expr:
        return differentiate(self.rate)

    def amplitude(self, n: float) -> Expr:
        """U(t) = (delta1 / T_t)^(1/n)."""
        return power(Const(self.delta1) / self.rate, Const(1.0 / n))

    @property
    def is_identity(self) -> bool:
        return self.T == TIME and self.delta1 == 1.0 and self.delta2 == 0.0

    def image(self, window: Interval) -> Interval:
        ends = np.asarray(evaluate(self.T, np.asarray(window, dtype=float)))
        return (float(np.min(ends)), float(np.max(ends)))

    def check(self, window: Interval, samples: int = VALIDATION_SAMPLES) -> None:
        """Raise TransformError unless delta1 T_t > 0 on the window."""
        if self.delta1 == 0.0:
            raise TransformError("delta1 must be nonzero")
        grid = np.linspace(window[0], window[1], samples)
        try:
            rates = np.asarray(evaluate(self.rate, grid))
        except ExprDomainError as error:
            raise TransformError(f"T_t undefined on {window}: {error}") from error
        if np.any(self.delta1 * rates <= 0.0):
            worst = grid[int(np.argmin(self.delta1 * rates))]
            raise TransformError(f"delta1*T_t <= 0 at t={worst:.6g} for T = {to_string(self.T)}")

    def describe(self) -> Dict[str, object]:
        summary = {"T": to_string(self.T), "delta1": self.delta1, "delta2": self.delta2}
        if self.label:
            summary["label"] = self.label
        return summary


def identity_transform(domain: Optional[Interval] = None) -> EquivTransform:
    return EquivTransform(TIME, 1.0, 0.0, domain, "identity")


def restricted_transform(delta1: float, delta3: float, delta4: float, delta2: float = 0.0,
                         domain: Optional[Interval] = None) -> EquivTransform:
    """Element of the restricted group: T = delta3 t + delta4 with delta1 delta3 > 0."""
    if delta1 * delta3 <= 0.0:
        raise TransformError(f"delta1*delta3 must be positive, got {delta1}*{delta3}")
    return EquivTransform(Const(delta3) * TIME + Const(delta4), float(delta1), float(delta2),
                          domain, "restricted")


# ==============================
# INVERSION OF TIME MAPS
# ==============================

def _peel(e: Expr, y: Expr) -> Optional[Expr]:
    """Solve e(t) = y for t when t occurs once and every step is invertible."""
    if isinstance(e, Var):
        return y
    if isinstance(e, Const):
        return None
    if isinstance(e, Neg):
        return _peel(e.arg, -y)
    if isinstance(e, Func):
        rewrites = {"exp": ln, "ln": exp, "sqrt": lambda a: power(a, Const(2.0))}
        if e.name not in rewrites:
            return None
        return _peel(e.arg, rewrites[e.name](y))
    if isinstance(e, Inverse):
        return _peel(e.arg, substitute(e.func, y))
    if isinstance(e, Pow):
        in_base, in_exponent = contains_var(e.base), contains_var(e.exponent)
        if in_base and not in_exponent:
            return _peel(e.base, power(y, ONE / e.exponent))
        if in_exponent and not in_base:
            return _peel(e.exponent, ln(y) / ln(e.base))
        return None
    if not isinstance(e, (Add, Sub, Mul, Div)):
        return None
    in_left, in_right = contains_var(e.left), contains_var(e.right)
    if in_left == in_right:
        return None
    if isinstance(e, Add):
        return _peel(e.left, y - e.right) if in_left else _peel(e.right, y - e.left)
    if isinstance(e, Sub):
        return _peel(e.left, y + e.right) if in_left else _peel(e.right, e.left - y)
    if isinstance(e, Mul):
        return _peel(e.left, y / e.right) if in_left else _peel(e.right, y / e.left)
    return _peel(e.left, y * e.right) if in_left else _peel(e.right, e.left / y)


def symbolic_inverse(T: Expr, domain: Interval) -> Optional[Expr]:
    """Closed-form inverse of T on the domain, checked on sampled image points."""
    candidate = _peel(T, TIME)
    if candidate is None:
        return None
    grid = np.linspace(domain[0], domain[1], 7)
    try:
        images = np.asarray(evaluate(T, grid))
        recovered = np.asarray(evaluate(candidate, images))
    except (ExprDomainError, QuadratureError):
        return None
    if np.max(np.abs(recovered - grid)) > INVERSE_CHECK_TOL * max(1.0, float(np.max(np.abs(grid)))):
        return None
    return candidate


def invert_map(T: Expr, domain: Optional[Interval]) -> Expr:
    """Inverse time map: closed form from the invertible catalog, else a numeric inverse."""
    if T == TIME:
        return TIME
    if domain is None:
        candidate = _peel(T, TIME)
        if candidate is None:
            raise TransformError(f"no closed-form inverse of {to_string(T)} and no domain given")
        return candidate
    candidate = symbolic_inverse(T, domain)
    if candidate is not None:
        return candidate
    LOGGER.debug("numeric inverse for T = %s on %s", to_string(T), domain)
    return inverse(T, domain[0], domain[1])


# ==============================
# GROUP OPERATIONS
# ==============================

def invert(g: EquivTransform) -> EquivTransform:
    """Two-sided inverse of g."""
    domain = g.image(g.domain) if g.domain is not None else None
    return EquivTransform(invert_map(g.T, g.domain), 1.0 / g.delta1, -g.delta2 / g.delta1,
                          domain, f"inverse of {g.label}" if g.label else "inverse")


def compose(g2: EquivTransform, g1: EquivTransform) -> EquivTransform:
    """The transformation g2 after g1."""
    if g1.domain is not None and g2.domain is not None:
        lo, hi = g1.image(g1.domain)
        slack = 1e-9 * max(1.0, abs(lo), abs(hi))
        if lo < g2.domain[0] - slack or hi > g2.domain[1] + slack:
            raise TransformError(f"image {(lo, hi)} of the first map leaves the domain "
                                 f"{g2.domain} of the second")
    return EquivTransform(substitute(g2.T, g1.T), g2.delta1 * g1.delta1,
                          g2.delta1 * g1.delta2 + g2.delta2, g1.domain, "composite")


def apply_equiv(g: EquivTransform, e: EquationSpec) -> EquationSpec:
    """
    Image of e under g.

    Args:
        g: Transformation; delta1 T_t > 0 must hold on e.interval.
        e: Equation to transform.

    Returns:
        The transformed equation on the image window, with the same n.
        Coefficients are re-expressed in the new time when the composite clock
        has a closed-form inverse; otherwise the result is parametric.

    Raises:
        TransformError: the sign condition fails, or the image coefficients
            are inconsistent.
    """
    if g.is_identity:
        return e
    g.check(e.interval)

    def pulled(f: Expr) -> Expr:
        return f if e.clock is None else substitute(f, e.clock)

    clock = pulled(g.T)
    rate, curvature = pulled(g.rate), pulled(g.curvature)
    alpha = e.alpha / rate + curvature / (Const(e.n) * power(rate, Const(2.0)))
    beta = Const(g.delta1 ** 5) * e.beta / rate
    source = e.parameter_window
    ends = np.asarray(evaluate(clock, np.asarray(source)))
    interval = (float(np.min(ends)), float(np.max(ends)))
    try:
        if clock == TIME:
            return EquationSpec(e.n, alpha, beta, interval)
        back = symbolic_inverse(clock, source)
        if back is not None:
            return EquationSpec(e.n, substitute(alpha, back), substitute(beta, back), interval)
        return EquationSpec(e.n, alpha, beta, interval, clock=clock, source=source)
    except ValueError as error:
        raise TransformError(f"transformed equation is inconsistent: {error}") from error


# ==============================
# GAUGE AND REDUCIBILITY
# ==============================

def gauge_time_map(alpha: Expr, n: float, t0: float) -> Expr:
    """T(t) = int_{t0}^{t} exp(-n int_{t0}^{s} alpha)."""
    return integral(exp(Const(-n) * integral(alpha, t0)), t0)


def gauge_to_zero_alpha(e: EquationSpec) -> Tuple[EquivTransform, EquationSpec]:
    """
    Remove alpha: t~ = int exp(-n int alpha), x~ = x, u~ = exp(int alpha) u.

    Both antiderivatives start at t_min, so the gauged window starts at 0.
    """
    if e.alpha == ZERO or np.all(np.asarray(
            evaluate(e.alpha, e.sample_parameters(VALIDATION_SAMPLES))) == 0.0):
        return identity_transform(e.interval), replace(e, alpha=ZERO)
    if e.clock is not None:
        raise TransformError("gauge needs an equation in its own time (no clock)")
    t0 = e.interval[0]
    g = EquivTransform(gauge_time_map(e.alpha, e.n, t0), 1.0, 0.0, e.interval, "gauge")
    try:
        gauged = apply_equiv(g, e)
        residual = np.asarray(evaluate(gauged.alpha, gauged.sample_parameters(VALIDATION_SAMPLES)))
    except (ExprDomainError, QuadratureError) as error:
        raise QuadratureError(f"gauge of alpha = {to_string(e.alpha)} failed: {error}") from error
    scale = 1.0 + float(np.max(np.abs(evaluate(e.alpha, e.sample_parameters(VALIDATION_SAMPLES)))))
    if np.max(np.abs(residual)) > GAUGE_CHECK_TOL * scale:
        raise TransformError(f"gauge left |alpha~| = {np.max(np.abs(residual)):.3e}")
    LOGGER.info("gauged alpha = %s onto window %s", to_string(e.alpha), gauged.interval)
    return g, replace(gauged, alpha=ZERO)


def equation_from_gauged(beta_gauged: Expr, alpha: Expr, n: float,
                         interval: Interval = DEFAULT_INTERVAL) -> EquationSpec:
    """
    Equation with the given alpha whose gauge is u_t + u^n u_x + beta_gauged(t~) u_xxxxx = 0.

    beta(t) = T_t(t) beta_gauged(T(t)) with T the gauge time map based at t_min.
    """
    t0 = interval[0]
    rate = exp(Const(-n) * integral(alpha, t0))
    T = integral(rate, t0)
    return EquationSpec(float(n), alpha, rate * substitute(beta_gauged, T), tuple(interval))


def _criterion_terms(e: EquationSpec, samples: int) -> Tuple[np.ndarray, np.ndarray]:
    lhs = Const(e.n) * e.time_derivative(e.alpha / e.beta)
    rhs = e.time_derivative(e.time_derivative(ONE / e.beta))
    points = e.sample_parameters(samples)
    try:
        return np.asarray(evaluate(lhs, points)), np.asarray(evaluate(rhs, points))
    except ExprDomainError as error:
        raise CriterionError(f"criterion cannot be evaluated: {error}") from error


def reducibility_residual(e: EquationSpec, samples: int = REDUCIBILITY_SAMPLES) -> float:
    """max |n (alpha/beta)_t - (1/beta)_tt| / (1 + |(1/beta)_tt|) over the window."""
    lhs, rhs = _criterion_terms(e, samples)
    return float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(rhs))))


def constantize(e: EquationSpec, tol: float = CONSTANTIZE_TOL
                ) -> Tuple[EquivTransform, float, float]:
    """
    Transformation making both coefficients constant.

    Returns:
        (g, A, B) with T_t = beta / B, B = sign(beta), delta1 = 1 and A the
        constant value of alpha~.

    Raises:
        CriterionError: the criterion fails on the window, or the transformed
            coefficients are not constant within tol.
    """
    residual = reducibility_residual(e)
    if residual > tol:
        raise CriterionError(f"equation is not reducible to constant coefficients "
                             f"(criterion residual {residual:.3e})")
    if e.clock is not None:
        raise TransformError("constantize needs an equation in its own time (no clock)")
    B = float(e.epsilon)
    if isinstance(e.beta, Const):
        T = Const(e.beta.value / B) * TIME
    else:
        T = integral(e.beta / Const(B), e.interval[0])
    g = EquivTransform(T, 1.0, 0.0, e.interval, "constantizing")
    image = apply_equiv(g, e)
    points = image.sample_parameters(REDUCIBILITY_SAMPLES)
    alphas = np.asarray(evaluate(image.alpha, points)) * np.ones_like(points)
    betas = np.asarray(evaluate(image.beta, points)) * np.ones_like(points)
    A = float(np.mean(alphas))
    if np.max(np.abs(alphas - A)) > tol * (1.0 + abs(A)) or np.max(np.abs(betas - B)) > tol:
        raise CriterionError("constantized coefficients are not constant within "
                             f"{tol:.1e} (alpha spread {np.ptp(alphas):.3e})")
    LOGGER.info("constantized: T = %s, A = %.6g, B = %g", to_string(T), A, B)
    return g, A, B


__all__ = [
    "CriterionError", "EquationSpec", "EquivTransform", "TransformError", "apply_equiv",
    "compose", "constantize", "equation_from_gauged", "gauge_time_map", "gauge_to_zero_alpha",
    "identity_transform", "invert", "invert_map", "reducibility_residual",
    "restricted_transform", "symbolic_inverse",
]
