#!/usr/bin/env python
# coding: utf-8
"""
Module: verify
Description: PDE residuals of candidate solutions and symmetry checks by finite
group flows.

A candidate u is scored pointwise by

    |u_t + u^n u_x + alpha u + beta u_xxxxx| / (1 + max |term|),

using the field's analytic derivatives when it has them and Richardson-
extrapolated central differences otherwise. Symmetries are verified by
pushing a solution through the explicit flow of an affine generator and
scoring the image.

Configuration:
    DEFAULT_COUNTS, STEP_FRACTION, RICHARDSON_WARN, DOMAIN_SLACK, PASS_FACTOR
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from fkdv_symmetry.classify import VectorField
from fkdv_symmetry.expr import (
    ExprDomainError, QuadratureError, ZERO, constant_value, differentiate, evaluate,
)
from fkdv_symmetry.gauge import EquationSpec, EquivTransform, TransformError, invert, invert_map
from fkdv_symmetry.reduce import SolutionField

# ==============================
# CONFIGURATION SECTION
# ==============================

DEFAULT_COUNTS = (40, 40)    # Grid points in t and x
STEP_FRACTION = 1e-2         # Finite-difference step as a share of the grid span
RICHARDSON_WARN = 1e-3       # Relative gap between step sizes that triggers a warning
DOMAIN_SLACK = 1e-12         # Relative slack when comparing rectangles
PASS_FACTOR = 10.0           # Flowed residuals may exceed the original by this factor

LOGGER = logging.getLogger(__name__)

Interval = Tuple[float, float]


class DomainError(ValueError):
    """The grid leaves the region where the field or the equation is defined."""


# Central stencils on offsets -m..m, with the order of their truncation error.
_STENCILS = {
    1: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, 4),
    2: (np.array([1.0, -2.0, 1.0]), 2),
    3: (np.array([-0.5, 1.0, 0.0, -1.0, 0.5]), 2),
    4: (np.array([1.0, -4.0, 6.0, -4.0, 1.0]), 2),
    5: (np.array([-0.5, 2.0, -2.5, 0.0, 2.5, -2.0, 0.5]), 2),
}


# ==============================
# DATA TYPES
# ==============================

@dataclass(frozen=True)
class Grid:
    t_range: Interval
    x_range: Interval
    nt: int = DEFAULT_COUNTS[0]
    nx: int = DEFAULT_COUNTS[1]

    def __post_init__(self):
        for name, (lo, hi) in (("t", self.t_range), ("x", self.x_range)):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise DomainError(f"{name}-range must be finite with lo <= hi, got {(lo, hi)}")
        if self.nt < 1 or self.nx < 1:
            raise DomainError(f"grid counts must be positive, got {self.nt}x{self.nx}")

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        t = np.linspace(*self.t_range, self.nt)
        x = np.linspace(*self.x_range, self.nx)
        return np.meshgrid(t, x, indexing="ij")

    @property
    def steps(self) -> Tuple[float, float]:
        return (STEP_FRACTION * ((self.t_range[1] - self.t_range[0]) or 1.0),
                STEP_FRACTION * ((self.x_range[1] - self.x_range[0]) or 1.0))

    def describe(self) -> Dict[str, object]:
        return {"t_range": list(self.t_range), "x_range": list(self.x_range),
                "counts": [self.nt, self.nx]}


@dataclass(frozen=True)
class ResidualReport:
    grid: Grid
    max_rel: float
    mean_rel: float
    worst_point: Tuple[float, float]
    method: str = "analytic"
    tolerance: Optional[float] = None
    label: str = ""

    @property
    def passed(self) -> Optional[bool]:
        return None if self.tolerance is None else self.max_rel <= self.tolerance

    def describe(self) -> Dict[str, object]:
        summary = {"label": self.label, "grid": self.grid.describe(), "method": self.method,
                   "max_rel": self.max_rel, "mean_rel": self.mean_rel,
                   "worst_point": list(self.worst_point)}
        if self.tolerance is not None:
            summary["tolerance"] = self.tolerance
            summary["passed"] = self.passed
        return summary


# ==============================
# DERIVATIVES
# ==============================

def _richardson(coarse: np.ndarray, fine: np.ndarray, accuracy: int) -> np.ndarray:
    factor = 2.0 ** accuracy
    return (factor * fine - coarse) / (factor - 1.0)


def _stencil(samples: Dict[int, np.ndarray], order: int, h: float, unit: int) -> np.ndarray:
    """Apply the order-th stencil with spacing unit*(h/2) to samples keyed by half-step offset."""
    weights, _ = _STENCILS[order]
    half = len(weights) // 2
    total = sum(w * samples[unit * (k - half)] for k, w in enumerate(weights) if w != 0.0)
    return total / (unit * h / 2.0) ** order


def finite_difference_jet(value: Callable[[np.ndarray, np.ndarray], np.ndarray],
                          t: np.ndarray, x: np.ndarray, h_t: float, h_x: float) -> np.ndarray:
    """
    (u, u_t, u_x, ..., u_xxxxx) by central differences at steps h and h/2, Richardson-combined.

    u_t and u_x use the five-point fourth-order stencil; u_xxxxx the seven-point
    stencil (-1/2, 2, -5/2, 0, 5/2, -2, 1/2) / h^5.
    """
    t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    along_x = {k: np.asarray(value(t, x + k * h_x / 2.0)) for k in range(-6, 7)}
    along_t = {k: np.asarray(value(t + k * h_t / 2.0, x)) for k in range(-4, 5) if k != 0}
    along_t[0] = along_x[0]

    jet = [along_x[0]]
    worst = 0.0
    for order, samples, h in [(1, along_t, h_t)] + [(k, along_x, h_x) for k in range(1, 6)]:
        coarse, fine = _stencil(samples, order, h, 2), _stencil(samples, order, h, 1)
        extrapolated = _richardson(coarse, fine, _STENCILS[order][1])
        gap = np.max(np.abs(extrapolated - fine) / (1.0 + np.abs(extrapolated)))
        worst = max(worst, float(gap))
        jet.append(extrapolated)
    if worst > RICHARDSON_WARN:
        LOGGER.warning("Richardson check: step sizes disagree by %.3e; refine the grid", worst)
    return np.stack(jet)


# ==============================
# RESIDUALS
# ==============================

def _inside(inner: Interval, outer: Interval) -> bool:
    slack = DOMAIN_SLACK * max(1.0, abs(inner[0]), abs(inner[1]))
    return outer[0] - slack <= inner[0] and inner[1] <= outer[1] + slack


def _relative(e: EquationSpec, t: np.ndarray, derivs: np.ndarray) -> np.ndarray:
    alpha, beta = e.coefficients_at(t)
    u, u_t, u_x, u5 = derivs[0], derivs[1], derivs[2], derivs[6]
    with np.errstate(all="ignore"):
        terms = np.stack(np.broadcast_arrays(u_t, np.power(u, e.n) * u_x, alpha * u, beta * u5))
        rel = np.abs(np.sum(terms, axis=0)) / (1.0 + np.max(np.abs(terms), axis=0))
    return rel


def _report(grid: Grid, t: np.ndarray, x: np.ndarray, rel: np.ndarray, method: str,
            tolerance: Optional[float], label: str) -> ResidualReport:
    if not np.all(np.isfinite(rel)):
        index = np.unravel_index(int(np.argmin(np.isfinite(rel))), rel.shape)
        raise DomainError(f"candidate is not finite at t={t[index]:.6g}, x={x[index]:.6g}")
    index = np.unravel_index(int(np.argmax(rel)), rel.shape)
    return ResidualReport(grid, float(np.max(rel)), float(np.mean(rel)),
                          (float(t[index]), float(x[index])), method, tolerance, label)


def pointwise_residual(s: SolutionField, e: EquationSpec, grid: Grid
                       ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, str]:
    """(t, x, u, relative residual, method) on the grid."""
    if not (_inside(grid.t_range, s.t_range) and _inside(grid.x_range, s.x_range)):
        raise DomainError(f"grid {grid.t_range} x {grid.x_range} leaves the field domain "
                          f"{s.t_range} x {s.x_range}")
    if not _inside(grid.t_range, e.interval):
        raise DomainError(f"grid t-range {grid.t_range} leaves the equation window {e.interval}")
    t, x = grid.mesh()
    try:
        if s.jet is not None:
            derivs, method = s.derivatives(t, x), "analytic"
        else:
            derivs, method = finite_difference_jet(s.u, t, x, *grid.steps), "finite-difference"
        rel = _relative(e, t, derivs)
    except (ExprDomainError, QuadratureError) as error:
        raise DomainError(f"field '{s.label}' undefined on the grid: {error}") from error
    return t, x, derivs[0], rel, method


def pde_residual(s: SolutionField, e: EquationSpec, grid: Grid,
                 tolerance: Optional[float] = None) -> ResidualReport:
    """
    Relative residual statistics of s in e on the grid.

    At each point the residual u_t + u^n u_x + alpha u + beta u_xxxxx is divided
    by 1 + max(|u_t|, |u^n u_x|, |alpha u|, |beta u_xxxxx|), the largest of the
    four equation terms; the residual itself is not part of the denominator.

    Raises:
        DomainError: the grid leaves the field's validity domain or the
            equation's window, or the field is not finite on it.
    """
    t, x, _, rel, method = pointwise_residual(s, e, grid)
    report = _report(grid, t, x, rel, method, tolerance, s.label)
    LOGGER.info("residual of %s: max %.3e, mean %.3e (%s)", s.label or "field",
                report.max_rel, report.mean_rel, method)
    return report


def residual_table(s: SolutionField, e: EquationSpec, grid: Grid) -> pd.DataFrame:
    """Field samples with columns t, x, u, residual."""
    t, x, u, rel, _ = pointwise_residual(s, e, grid)
    return pd.DataFrame({"t": t.ravel(), "x": x.ravel(), "u": u.ravel(), "residual": rel.ravel()})


def grid_residual(frame: pd.DataFrame, e: EquationSpec,
                  tolerance: Optional[float] = None) -> ResidualReport:
    """
    Residual of sampled data (columns t, x, u on a regular grid) at interior points.

    Derivatives use the fixed grid spacing, so they are second-order accurate
    (fourth-order for u_t and u_x); expect residuals at that level.

    Raises:
        DomainError: missing columns, an irregular or incomplete grid, or too
            few points for the stencils.
    """
    missing = {"t", "x", "u"} - set(frame.columns)
    if missing:
        raise DomainError(f"solution table lacks columns {sorted(missing)}")
    table = frame.pivot_table(index="t", columns="x", values="u", aggfunc="mean")
    if table.isna().to_numpy().any():
        raise DomainError("solution table does not fill a rectangular grid")
    ts, xs, u = table.index.to_numpy(float), table.columns.to_numpy(float), table.to_numpy(float)
    if ts.size < 5 or xs.size < 7:
        raise DomainError(f"need at least 5 t-values and 7 x-values, got {ts.size}x{xs.size}")
    for name, axis in (("t", ts), ("x", xs)):
        steps = np.diff(axis)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
            raise DomainError(f"{name}-values are not evenly spaced")
    h_t, h_x = ts[1] - ts[0], xs[1] - xs[0]

    rows, cols = u.shape
    derivs = [u[2:-2, 3:-3]]
    weights, _ = _STENCILS[1]
    derivs.append(sum(w * u[k:rows - 4 + k, 3:-3] for k, w in enumerate(weights)) / h_t)
    for order in range(1, 6):
        weights, _ = _STENCILS[order]
        half = len(weights) // 2
        derivs.append(sum(w * u[2:-2, 3 - half + k:cols - 3 - half + k]
                          for k, w in enumerate(weights)) / h_x ** order)
    t, x = np.meshgrid(ts[2:-2], xs[3:-3], indexing="ij")
    grid = Grid((float(ts[2]), float(ts[-3])), (float(xs[3]), float(xs[-4])),
                t.shape[0], t.shape[1])
    if not _inside(grid.t_range, e.interval):
        raise DomainError(f"data t-range {grid.t_range} leaves the equation window {e.interval}")
    rel = _relative(e, t, np.stack(derivs))
    return _report(grid, t, x, rel, "grid-difference", tolerance, "sampled data")


# ==============================
# TRANSFORMATIONS OF SOLUTIONS
# ==============================

def _intersect(a: Interval, b: Optional[Interval]) -> Interval:
    if b is None:
        return a
    return (max(a[0], b[0]), min(a[1], b[1]))


def transform_field(g: EquivTransform, s: SolutionField, n: float) -> SolutionField:
    """
    Image of a solution under an equivalence transformation.

    u~(T(t), delta1 x + delta2) = (delta1 / T_t)^(1/n) u(t, x), so a solution of
    e becomes a solution of apply_equiv(g, e).

    Raises:
        DomainError: the time window of s and the domain of g do not overlap
            in a finite interval.
        TransformError: delta1 T_t > 0 fails there.
    """
    if g.is_identity:
        return s
    window = _intersect(s.t_range, g.domain)
    if not (math.isfinite(window[0]) and math.isfinite(window[1])) or window[0] >= window[1]:
        raise DomainError(f"transformation needs a finite time window, got {window}")
    g.check(window)
    T_inverse = invert_map(g.T, window)
    amplitude, rate, curvature = g.amplitude(n), g.rate, g.curvature
    d1, d2 = g.delta1, g.delta2

    def source(t_new, x_new):
        return np.asarray(evaluate(T_inverse, t_new)), (x_new - d2) / d1

    def value(t_new, x_new):
        t, x = source(t_new, x_new)
        return evaluate(amplitude, t) * s.u(t, x)

    def jet(t_new, x_new):
        t, x = source(t_new, x_new)
        derivs = s.derivatives(t, x)
        U, T_t, T_tt = evaluate(amplitude, t), evaluate(rate, t), evaluate(curvature, t)
        out = [U * derivs[0], U / T_t * (derivs[1] - T_tt / (n * T_t) * derivs[0])]
        out += [U * d1 ** -order * derivs[order + 1] for order in range(1, 6)]
        return np.stack(out)

    x_ends = sorted((d1 * s.x_range[0] + d2, d1 * s.x_range[1] + d2))
    return SolutionField(f"{s.label} transformed", "transformed", g.image(window),
                         tuple(x_ends), jet if s.jet is not None else None,
                         None if s.jet is not None else value)


def _affine_parameters(v: VectorField) -> Tuple[float, float, float, float, float]:
    """(p, q, a, b, c) of (p t + q) d/dt + (a x + b) d/dx + c u d/du."""
    p = constant_value(differentiate(v.tau))
    a, b, c = constant_value(v.xi1), constant_value(v.xi0), constant_value(v.eta1)
    if p is None or None in (a, b, c):
        raise ValueError(f"no explicit flow for {v}: coefficients must be affine in t "
                         "and constant otherwise, or the field must carry its conjugation")
    q = float(evaluate(v.tau, 0.0)) if v.tau != ZERO else 0.0
    return p, q, a, b, c


def _growth(rate: float, eps: float) -> float:
    """(exp(rate eps) - 1) / rate, continuous at rate = 0."""
    return eps if rate == 0.0 else math.expm1(rate * eps) / rate


def _canonical_flow(v: VectorField, eps: float, s: SolutionField) -> SolutionField:
    p, q, a, b, c = _affine_parameters(v)
    t_stretch, x_stretch, gain = math.exp(p * eps), math.exp(a * eps), math.exp(c * eps)
    t_shift, x_shift = q * _growth(p, eps), b * _growth(a, eps)

    def source(t_new, x_new):
        return (t_new - t_shift) / t_stretch, (x_new - x_shift) / x_stretch

    def value(t_new, x_new):
        return gain * s.u(*source(t_new, x_new))

    def jet(t_new, x_new):
        derivs = s.derivatives(*source(t_new, x_new))
        scales = [gain, gain / t_stretch] + [gain / x_stretch ** k for k in range(1, 6)]
        return np.stack([w * d for w, d in zip(scales, derivs)])

    def forward(ends, stretch, shift):
        return tuple(stretch * end + shift for end in ends)

    return SolutionField(f"{s.label} flowed", "flow-transformed",
                         forward(s.t_range, t_stretch, t_shift),
                         forward(s.x_range, x_stretch, x_shift),
                         jet if s.jet is not None else None,
                         None if s.jet is not None else value)


def flow_transform(v: VectorField, eps: float, s: SolutionField) -> SolutionField:
    """
    Image of s under exp(eps v).

    Canonical fields with constant coefficients (tau affine) flow explicitly:
    (t, x, u) -> (e^{p eps} t + q (e^{p eps} - 1)/p, e^{a eps} x + ..., e^{c eps} u).
    Fields in original variables are flowed through their gauge conjugation.

    Raises:
        DomainError: the conjugated flow leaves the gauge domain.
        ValueError: v has no explicit flow.
    """
    if eps == 0.0:
        return s
    if v.conjugate is None:
        return _canonical_flow(v, eps, s)
    g, field_gauged, n = v.conjugate.transform, v.conjugate.field, v.conjugate.n
    if g.is_identity:
        return _canonical_flow(field_gauged, eps, s)
    try:
        flowed = _canonical_flow(field_gauged, eps, transform_field(g, s, n))
        image = transform_field(invert(g), flowed, n)
    except TransformError as error:
        raise DomainError(f"flow leaves the gauge domain: {error}") from error
    return replace(image, label=f"{s.label} flowed", provenance="flow-transformed")


def symmetry_check(v: VectorField, s: SolutionField, e: EquationSpec,
                   eps_list: Sequence[float], grid: Grid,
                   tolerance: Optional[float] = None) -> List[ResidualReport]:
    """
    Residual reports of flow_transform(v, eps, s) in e for each eps.

    Each report covers the part of the grid rectangle where the flowed field
    is defined. With a tolerance, each report's pass flag uses
    PASS_FACTOR * tolerance.

    Raises:
        DomainError: the flowed domain misses the grid (eps too large).
    """
    reports = []
    for eps in eps_list:
        flowed = flow_transform(v, eps, s)
        t_range = _intersect(_intersect(grid.t_range, flowed.t_range), e.interval)
        x_range = _intersect(grid.x_range, flowed.x_range)
        if t_range[0] >= t_range[1] or x_range[0] >= x_range[1]:
            raise DomainError(f"flow by eps = {eps:g} moves the field off the grid "
                              f"(t {t_range}, x {x_range})")
        sub_grid = Grid(t_range, x_range, grid.nt, grid.nx)
        report = pde_residual(flowed, e, sub_grid,
                              None if tolerance is None else PASS_FACTOR * tolerance)
        reports.append(replace(report, label=f"{v} at eps = {eps:g}"))
    return reports


__all__ = [
    "DomainError", "Grid", "ResidualReport", "finite_difference_jet", "flow_transform",
    "grid_residual", "pde_residual", "pointwise_residual", "residual_table",
    "symmetry_check", "transform_field",
]
