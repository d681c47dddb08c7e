#!/usr/bin/env python
# coding: utf-8
"""
Module: classify
Description: Group classification of gauged equations u_t + u^n u_x + beta(t) u_xxxxx = 0.

An equation admits more than the kernel symmetry d/dx exactly when beta
solves a classifying equation (p t + q) beta_t = r beta. The classifier
samples g = beta / beta_t on the window and fits it by an affine function:

    beta_t == 0              -> CONSTANT     (beta = eps)
    g constant (slope 0)     -> EXPONENTIAL  (beta = lam exp(m t))
    g affine                 -> POWER        (beta = lam (t + kappa)^rho)
    anything else            -> GENERIC      (kernel only)

The normalizer is the restricted transformation t~ = delta3 t + delta4,
x~ = delta1 x that carries beta to eps t^rho, eps e^t or eps.

Configuration:
    DEFAULT_TOL          relative decision tolerance
    FIT_SAMPLES          uniform samples of beta on the window
    MIN_USABLE_SAMPLES   samples left after discarding beta_t ~ 0
    OUTLIER_FRACTION     |beta_t| below this share of max|beta_t| is discarded
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from fkdv_symmetry.expr import Const, Expr, TIME, ZERO, as_expr, evaluate, exp, to_string
from fkdv_symmetry.gauge import (
    CriterionError, EquationSpec, EquivTransform, TransformError, constantize,
    gauge_to_zero_alpha, identity_transform, restricted_transform,
)

# ==============================
# CONFIGURATION SECTION
# ==============================

DEFAULT_TOL = 1e-7           # Relative tolerance of every classification decision
FIT_SAMPLES = 60             # Uniform samples of beta used for the fit
MIN_USABLE_SAMPLES = 10      # Fewer usable samples means the window is too short
OUTLIER_FRACTION = 1e-6      # Samples with |beta_t| * window / |beta| below this are dropped

LOGGER = logging.getLogger(__name__)


class ClassificationError(ValueError):
    """The equation cannot be classified on its window."""


class Case(enum.Enum):
    GENERIC = "GENERIC"
    POWER = "POWER"
    EXPONENTIAL = "EXPONENTIAL"
    CONSTANT = "CONSTANT"


# ==============================
# DATA TYPES
# ==============================

@dataclass(frozen=True)
class ClassifyingFit:
    """Coefficients of (p t + q) beta_t = r beta, scaled so max(|p|, |q|, |r|) = 1."""
    p: float
    q: float
    r: float
    residual: float

    def describe(self) -> Dict[str, float]:
        return {"p": self.p, "q": self.q, "r": self.r, "residual": self.residual}


@dataclass(frozen=True)
class VectorField:
    """
    tau(t) d/dt + (xi1(t) x + xi0(t)) d/dx + eta1(t) u d/du.

    `conjugate` carries, for fields written in original variables, the gauge
    transformation and the field it becomes in gauged variables; flows of
    such fields are computed there.
    """
    tau: Expr = ZERO
    xi1: Expr = ZERO
    xi0: Expr = ZERO
    eta1: Expr = ZERO
    conjugate: Optional["Conjugation"] = None

    def coefficients(self, t) -> Tuple[np.ndarray, ...]:
        ones = np.ones_like(np.asarray(t, dtype=float))
        return tuple(np.asarray(evaluate(c, t)) * ones
                     for c in (self.tau, self.xi1, self.xi0, self.eta1))

    def describe(self) -> Dict[str, str]:
        return {"tau": to_string(self.tau), "xi_x": to_string(self.xi1),
                "xi_0": to_string(self.xi0), "eta_u": to_string(self.eta1)}

    def __str__(self) -> str:
        terms = []
        if self.tau != ZERO:
            terms.append(f"({to_string(self.tau)}) d/dt")
        if self.xi1 != ZERO or self.xi0 != ZERO:
            terms.append(f"({to_string(self.xi1)}*x + {to_string(self.xi0)}) d/dx")
        if self.eta1 != ZERO:
            terms.append(f"({to_string(self.eta1)})*u d/du")
        return " + ".join(terms) if terms else "0"


@dataclass(frozen=True)
class Conjugation:
    """A field in original variables equals `transform`^-1 . `field` . `transform`."""
    transform: EquivTransform
    field: VectorField
    n: float


def vector_field(tau=0.0, xi1=0.0, xi0=0.0, eta1=0.0,
                 conjugate: Optional[Conjugation] = None) -> VectorField:
    return VectorField(as_expr(tau), as_expr(xi1), as_expr(xi0), as_expr(eta1), conjugate)


D_X = vector_field(xi0=1.0)
D_T = vector_field(tau=1.0)


@dataclass(frozen=True)
class ClassificationResult:
    """
    Detected case with its canonical parameters.

    lam, kappa, rate describe the gauged beta before normalization:
    POWER beta = lam (t + kappa)^rho, EXPONENTIAL beta = lam exp(rate t),
    CONSTANT beta = lam.
    """
    case: Case
    epsilon: int
    rho: Optional[float]
    normalizer: EquivTransform
    fit: ClassifyingFit
    lam: Optional[float] = None
    kappa: Optional[float] = None
    rate: Optional[float] = None
    gauge: Optional[EquivTransform] = None
    tol: float = DEFAULT_TOL

    @property
    def canonical_beta(self) -> Expr:
        eps = Const(float(self.epsilon))
        if self.case is Case.POWER:
            return eps * TIME ** Const(self.rho)
        if self.case is Case.EXPONENTIAL:
            return eps * exp(TIME)
        return eps

    def describe(self) -> Dict[str, object]:
        summary = {"case": self.case.value, "epsilon": self.epsilon}
        if self.rho is not None:
            summary["rho"] = self.rho
        for name in ("lam", "kappa", "rate"):
            value = getattr(self, name)
            if value is not None:
                summary[name] = value
        summary["fit"] = self.fit.describe()
        summary["normalizer"] = self.normalizer.describe()
        summary["tolerance"] = self.tol
        return summary


# ==============================
# CLASSIFICATION
# ==============================

def _normalized_fit(p: float, q: float, r: float, residual: float) -> ClassifyingFit:
    scale = max(abs(p), abs(q), abs(r))
    return ClassifyingFit(p / scale, q / scale, r / scale, residual)


def _samples(e: EquationSpec, count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = e.sample_parameters(count)
    ones = np.ones_like(s)
    beta = np.asarray(evaluate(e.beta, s)) * ones
    beta_t = np.asarray(evaluate(e.time_derivative(e.beta), s)) * ones
    return e.times(s) * ones, beta, beta_t


def fit_classifying_equation(e: EquationSpec, samples: int = FIT_SAMPLES
                             ) -> Tuple[ClassifyingFit, float, float]:
    """
    Least-squares fit of g = beta / beta_t by slope * t + intercept.

    Returns:
        (fit, slope, intercept); fit.residual is max|g - fit| / max|g|.

    Raises:
        ClassificationError: fewer than MIN_USABLE_SAMPLES points with beta_t
            away from zero.
    """
    t, beta, beta_t = _samples(e, samples)
    window = float(np.max(t) - np.min(t))
    # relative to each sample's own beta
    usable = np.abs(beta_t) * window > OUTLIER_FRACTION * np.abs(beta)
    if np.count_nonzero(usable) < MIN_USABLE_SAMPLES:
        raise ClassificationError(f"window {e.interval} too short: only "
                                  f"{np.count_nonzero(usable)} usable samples")
    g = beta[usable] / beta_t[usable]
    slope, intercept = np.polyfit(t[usable], g, 1)
    residual = float(np.max(np.abs(g - (slope * t[usable] + intercept))) / np.max(np.abs(g)))
    LOGGER.debug("classifying fit: slope %.12g, intercept %.12g, residual %.3e",
                 slope, intercept, residual)
    slope, intercept = float(slope), float(intercept)
    return _normalized_fit(slope, intercept, 1.0, residual), slope, intercept


def classify(e: EquationSpec, tol: float = DEFAULT_TOL, auto_gauge: bool = False,
             samples: int = FIT_SAMPLES) -> ClassificationResult:
    """
    Decide the case of e and build its normalizer.

    Args:
        e: Equation; alpha must vanish unless auto_gauge is set.
        tol: Relative decision tolerance.
        auto_gauge: Gauge alpha away first.
        samples: Uniform samples of beta (at least 50 recommended).

    Returns:
        ClassificationResult; `gauge` holds the gauge that was applied.

    Raises:
        ClassificationError: alpha nonzero without auto_gauge, or the window
            is too short.
    """
    gauge = identity_transform(e.interval)
    if not e.is_gauged():
        if not auto_gauge:
            raise ClassificationError("alpha is not zero; gauge the equation first "
                                      "or request auto_gauge")
        gauge, e = gauge_to_zero_alpha(e)

    t, beta, beta_t = _samples(e, samples)
    epsilon = int(np.sign(beta[0]))
    window = float(np.max(t) - np.min(t))
    variation = float(np.max(np.abs(beta_t)) * window / np.max(np.abs(beta)))

    if variation <= tol:
        lam = float(np.mean(beta))
        normalizer = restricted_transform(abs(lam) ** -0.2, 1.0, 0.0, domain=e.interval)
        result = ClassificationResult(Case.CONSTANT, epsilon, None, normalizer,
                                      ClassifyingFit(0.0, 1.0, 0.0, variation),
                                      lam=lam, gauge=gauge, tol=tol)
        LOGGER.info("case CONSTANT, eps = %d", epsilon)
        return result

    fit, slope, intercept = fit_classifying_equation(e, samples)
    if fit.residual > tol:
        LOGGER.warning("beta = %s fits no classifying equation (residual %.3e); case GENERIC",
                       to_string(e.beta), fit.residual)
        return ClassificationResult(Case.GENERIC, epsilon, None, identity_transform(e.interval),
                                    fit, gauge=gauge, tol=tol)

    if abs(slope) <= tol:
        rate = 1.0 / intercept
        lam = float(np.mean(beta * np.exp(-rate * t)))
        delta1 = np.sign(rate) * (abs(rate) / abs(lam)) ** 0.2
        normalizer = restricted_transform(delta1, rate, 0.0, domain=e.interval)
        LOGGER.info("case EXPONENTIAL, eps = %d, rate = %.12g", epsilon, rate)
        return ClassificationResult(Case.EXPONENTIAL, epsilon, None, normalizer, fit,
                                    lam=lam, rate=rate, gauge=gauge, tol=tol)

    rho = 1.0 / slope
    kappa = intercept / slope
    if abs(rho) < tol:
        lam = float(np.mean(beta))
        normalizer = restricted_transform(abs(lam) ** -0.2, 1.0, 0.0, domain=e.interval)
        return ClassificationResult(Case.CONSTANT, epsilon, None, normalizer, fit,
                                    lam=lam, gauge=gauge, tol=tol)
    shifted = t + kappa
    if np.any(shifted == 0.0) or np.any(np.sign(shifted) != np.sign(shifted[0])):
        raise ClassificationError(f"t + kappa changes sign on the window (kappa = {kappa:.6g})")
    sigma = float(np.sign(shifted[0]))
    lam = float(np.mean(beta / np.abs(shifted) ** rho))
    normalizer = restricted_transform(sigma * abs(lam) ** -0.2, sigma, sigma * kappa,
                                      domain=e.interval)
    LOGGER.info("case POWER, eps = %d, rho = %.12g, kappa = %.12g", epsilon, rho, kappa)
    return ClassificationResult(Case.POWER, epsilon, rho, normalizer, fit,
                                lam=lam, kappa=kappa, gauge=gauge, tol=tol)


def is_constant_coefficient_equivalent(e: EquationSpec, tol: float = DEFAULT_TOL) -> bool:
    """True when e maps to u_t + u^n u_x + eps u_xxxxx = 0 (reducible with removable alpha~)."""
    try:
        _, A, _ = constantize(e, tol)
    except (CriterionError, TransformError):
        return False
    return abs(A) <= tol


# ==============================
# SYMMETRY BASES
# ==============================

def symmetry_basis(c: ClassificationResult, n: float) -> List[VectorField]:
    """Lie symmetry generators in canonical variables for the detected case."""
    if c.case is Case.POWER:
        return [D_X, vector_field(tau=5.0 * n * TIME, xi1=(c.rho + 1.0) * n, eta1=c.rho - 4.0)]
    if c.case is Case.EXPONENTIAL:
        return [D_X, vector_field(tau=5.0 * n, xi1=n, eta1=1.0)]
    if c.case is Case.CONSTANT:
        return [D_X, D_T, vector_field(tau=5.0 * n * TIME, xi1=n, eta1=-4.0)]
    return [D_X]


def symmetry_basis_original(e: EquationSpec, c: ClassificationResult) -> List[VectorField]:
    """
    Generators of the original (alpha != 0) equation, written with the gauge map.

    With T the gauge time map and the gauged beta = lam (T + kappa)^rho,
    lam exp(m T) or lam, the extension generators are

        5n (T+kappa)/T_t d/dt + n(rho+1) x d/dx + (rho - 4 - 5n alpha (T+kappa)/T_t) u d/du
        5n/T_t d/dt + m n x d/dx + (m - 5n alpha/T_t) u d/du
        (d/dt - alpha u d/du)/T_t  and  5n T/T_t d/dt + n x d/dx - (4 + 5n alpha T/T_t) u d/du

    Raises:
        ClassificationError: alpha is nonzero but c carries no gauge map.
    """
    n = e.n
    if e.is_gauged():
        gauge = identity_transform(e.interval)
        alpha = ZERO
    else:
        if c.gauge is None or c.gauge.is_identity:
            raise ClassificationError("gauge map not available; classify with auto_gauge")
        gauge = c.gauge
        alpha = e.alpha
    T, rate = gauge.T, gauge.rate
    big = Const(5.0 * n)

    def original(tau: Expr, xi1: float, eta1: Expr, canonical: VectorField) -> VectorField:
        return VectorField(tau, Const(xi1), ZERO, eta1, Conjugation(gauge, canonical, n))

    if c.case is Case.POWER:
        shifted = T + Const(c.kappa)
        field = original(big * shifted / rate, n * (c.rho + 1.0),
                         Const(c.rho - 4.0) - big * alpha * shifted / rate,
                         vector_field(tau=big * (TIME + Const(c.kappa)),
                                      xi1=n * (c.rho + 1.0), eta1=c.rho - 4.0))
        return [D_X, field]
    if c.case is Case.EXPONENTIAL:
        m = c.rate
        field = original(big / rate, m * n, Const(m) - big * alpha / rate,
                         vector_field(tau=5.0 * n, xi1=m * n, eta1=m))
        return [D_X, field]
    if c.case is Case.CONSTANT:
        shift = original(Const(1.0) / rate, 0.0, -alpha / rate, D_T)
        scaling = original(big * T / rate, n,
                           -(Const(4.0) + big * alpha * T / rate),
                           vector_field(tau=5.0 * n * TIME, xi1=n, eta1=-4.0))
        return [D_X, shift, scaling]
    return [D_X]


__all__ = [
    "Case", "ClassificationError", "ClassificationResult", "ClassifyingFit", "Conjugation",
    "D_T", "D_X", "VectorField", "classify", "fit_classifying_equation",
    "is_constant_coefficient_equivalent", "symmetry_basis", "symmetry_basis_original",
    "vector_field",
]
