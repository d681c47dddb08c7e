#!/usr/bin/env python
# coding: utf-8
"""
Module: algebra
Description: Lie brackets of the symmetry generators, structure constants,
identification of the low-dimensional algebras that occur (A1, 2A1, A2 and
A3.5^a) and the optimal systems of one-dimensional subalgebras per case.

Structure constants are read off numerically: each generator is represented
by its coefficient functions sampled at a few generic times, and every bracket
is expanded in the basis by least squares.

Configuration:
    STRUCTURE_POINTS   generic times at which coefficients are sampled
    CLOSURE_TOL        largest least-squares misfit accepted for a bracket
    IDENTIFY_TOL       zero threshold when reading structure constants
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from rapidfuzz import fuzz, process

from fkdv_symmetry.classify import (
    Case, ClassificationResult, D_T, D_X, VectorField, vector_field,
)
from fkdv_symmetry.expr import TIME, differentiate

# ==============================
# CONFIGURATION SECTION
# ==============================

STRUCTURE_POINTS = (0.61, 1.37, 2.03)  # Sample times for coefficient vectors
CLOSURE_TOL = 1e-12                    # Relative misfit allowed when expanding a bracket
IDENTIFY_TOL = 1e-9                    # Zero threshold for structure constants
RHO_MINUS_ONE_TOL = 1e-6               # |rho + 1| below this selects the rho = -1 branch

SUBALGEBRA_NAMES = ("g0", "g2.1", "g2.2", "g3", "g4.1", "g4.2", "g4.alg")

LOGGER = logging.getLogger(__name__)


class AlgebraError(ValueError):
    """Ill-formed generator, non-closed basis or unavailable subalgebra."""


# ==============================
# DATA TYPES
# ==============================

@dataclass(frozen=True)
class StructureConstants:
    """c[i, j, k] with [e_i, e_j] = sum_k c[i, j, k] e_k."""
    dim: int
    c: np.ndarray = field(compare=False)

    def bracket_table(self) -> List[List[List[float]]]:
        return self.c.tolist()


@dataclass(frozen=True)
class AlgebraLabel:
    name: str
    a: Optional[float] = None
    offending: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.name}^{self.a:.12g}" if self.a is not None else self.name


@dataclass(frozen=True)
class Subalgebra:
    name: str
    basis: Tuple[VectorField, ...]
    params: Dict[str, float] = field(default_factory=dict, hash=False)

    def describe(self) -> Dict[str, object]:
        return {"name": self.name, "params": dict(self.params),
                "basis": [str(v) for v in self.basis]}


# ==============================
# BRACKETS AND STRUCTURE CONSTANTS
# ==============================

def bracket(v: VectorField, w: VectorField) -> VectorField:
    """[v, w] for fields tau(t) d/dt + (xi1(t) x + xi0(t)) d/dx + eta1(t) u d/du."""
    if not isinstance(v, VectorField) or not isinstance(w, VectorField):
        raise AlgebraError("bracket needs two affine generators")
    tau = v.tau * differentiate(w.tau) - w.tau * differentiate(v.tau)
    xi1 = v.tau * differentiate(w.xi1) - w.tau * differentiate(v.xi1)
    xi0 = (v.tau * differentiate(w.xi0) + v.xi0 * w.xi1
           - w.tau * differentiate(v.xi0) - w.xi0 * v.xi1)
    eta1 = v.tau * differentiate(w.eta1) - w.tau * differentiate(v.eta1)
    return VectorField(tau, xi1, xi0, eta1)


def _features(v: VectorField, points: Sequence[float]) -> np.ndarray:
    return np.concatenate(v.coefficients(np.asarray(points, dtype=float)))


def structure_constants(basis: Sequence[VectorField],
                        points: Sequence[float] = STRUCTURE_POINTS) -> StructureConstants:
    """
    Expand every bracket of the basis in the basis.

    Raises:
        AlgebraError: the basis is linearly dependent or some bracket leaves its span.
    """
    dim = len(basis)
    matrix = np.column_stack([_features(v, points) for v in basis])
    if np.linalg.matrix_rank(matrix) < dim:
        raise AlgebraError("generators are linearly dependent at the sample points")
    c = np.zeros((dim, dim, dim))
    for i in range(dim):
        for j in range(i + 1, dim):
            target = _features(bracket(basis[i], basis[j]), points)
            solution, *_ = np.linalg.lstsq(matrix, target, rcond=None)
            misfit = np.max(np.abs(matrix @ solution - target))
            if misfit > CLOSURE_TOL * (1.0 + np.max(np.abs(target))):
                raise AlgebraError(f"[e{i + 1}, e{j + 1}] leaves the span "
                                   f"(misfit {misfit:.3e})")
            c[i, j] = solution
            c[j, i] = -solution
    return StructureConstants(dim, c)


def antisymmetry_defect(s: StructureConstants) -> float:
    return float(np.max(np.abs(s.c + np.transpose(s.c, (1, 0, 2))))) if s.dim else 0.0


def jacobi_defect(s: StructureConstants) -> float:
    """max |[[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j]| over all triples."""
    if s.dim < 3:
        return 0.0
    total = (np.einsum("ijl,lkm->ijkm", s.c, s.c)
             + np.einsum("jkl,lim->ijkm", s.c, s.c)
             + np.einsum("kil,ljm->ijkm", s.c, s.c))
    return float(np.max(np.abs(total)))


def _offending(s: StructureConstants) -> Tuple[str, ...]:
    lines = []
    for i in range(s.dim):
        for j in range(i + 1, s.dim):
            terms = [f"{value:+.6g} e{k + 1}" for k, value in enumerate(s.c[i, j])
                     if abs(value) > IDENTIFY_TOL]
            lines.append(f"[e{i + 1}, e{j + 1}] = {' '.join(terms) if terms else '0'}")
    return tuple(lines)


def identify_algebra(s: StructureConstants) -> AlgebraLabel:
    """
    Name the algebra: A1, 2A1, A2 or A3.5^a ([e1,e2]=0, [e1,e3]=a e1, [e2,e3]=e2, 0<|a|<1).

    Anything else is labelled UNKNOWN together with its bracket table.
    """
    if s.dim == 1:
        return AlgebraLabel("A1")
    if s.dim == 2:
        return AlgebraLabel("2A1" if np.max(np.abs(s.c)) <= IDENTIFY_TOL else "A2")
    if s.dim != 3:
        return AlgebraLabel("UNKNOWN", offending=_offending(s))

    rows = np.array([s.c[i, j] for i in range(3) for j in range(i + 1, 3)])
    _, singular, vt = np.linalg.svd(rows)
    rank = int(np.sum(singular > IDENTIFY_TOL * max(1.0, singular[0])))
    if rank != 2:
        return AlgebraLabel("UNKNOWN", offending=_offending(s))
    derived, complement = vt[:2], vt[2]

    def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, s.c)

    if np.max(np.abs(commutator(derived[0], derived[1]))) > IDENTIFY_TOL:
        return AlgebraLabel("UNKNOWN", offending=_offending(s))
    action = np.array([derived @ commutator(d, complement) for d in derived]).T
    eigenvalues, eigenvectors = np.linalg.eig(action)
    if (np.any(np.abs(eigenvalues.imag) > IDENTIFY_TOL)
            or np.any(np.abs(eigenvalues) <= IDENTIFY_TOL)):
        return AlgebraLabel("UNKNOWN", offending=_offending(s))
    eigenvalues = eigenvalues.real
    order = np.argsort(np.abs(eigenvalues))
    small, big = eigenvalues[order[0]], eigenvalues[order[1]]
    a = float(small / big)
    if not 0.0 < abs(a) < 1.0 - IDENTIFY_TOL:
        return AlgebraLabel("UNKNOWN", offending=_offending(s))
    LOGGER.debug("A3.5 canonical basis: e3 scaled by 1/%.12g, eigenvectors %s",
                 big, eigenvectors.real.tolist())
    return AlgebraLabel("A3.5", a=a)


# ==============================
# SUBALGEBRAS AND OPTIMAL SYSTEMS
# ==============================

def _require(c: ClassificationResult, name: str, *cases: Case) -> None:
    if c.case not in cases:
        raise AlgebraError(f"subalgebra {name} does not belong to case {c.case.value}")


def _scaling(c: ClassificationResult, n: float) -> VectorField:
    if c.case is Case.POWER:
        return vector_field(tau=5.0 * n * TIME, xi1=(c.rho + 1.0) * n, eta1=c.rho - 4.0)
    return vector_field(tau=5.0 * n * TIME, xi1=n, eta1=-4.0)


def make_subalgebra(name: str, c: ClassificationResult, n: float,
                    param: Optional[float] = None) -> Subalgebra:
    """Build the named subalgebra (optionally with its parameter a or sigma) for the case of c."""
    if name == "g0":
        return Subalgebra("g0", (D_X,))
    if name in ("g2.1", "g2.2"):
        _require(c, name, Case.POWER)
        minus_one = abs(c.rho + 1.0) <= RHO_MINUS_ONE_TOL
        if name == "g2.1":
            if minus_one:
                raise AlgebraError("g2.1 needs rho != -1; use g2.2:a")
            return Subalgebra(name, (_scaling(c, n),))
        if not minus_one:
            raise AlgebraError(f"g2.2 needs rho = -1, got rho = {c.rho:.6g}")
        a = 0.0 if param is None else float(param)
        return Subalgebra(name, (vector_field(tau=n * TIME, xi0=a, eta1=-1.0),), {"a": a})
    if name == "g3":
        _require(c, name, Case.EXPONENTIAL)
        return Subalgebra(name, (vector_field(tau=5.0 * n, xi1=n, eta1=1.0),))
    if name == "g4.1":
        _require(c, name, Case.CONSTANT)
        sigma = 0.0 if param is None else float(param)
        return Subalgebra(name, (vector_field(tau=1.0, xi0=sigma),), {"sigma": sigma})
    if name == "g4.2":
        _require(c, name, Case.CONSTANT)
        return Subalgebra(name, (_scaling(c, n),))
    if name == "g4.alg":
        _require(c, name, Case.CONSTANT)
        return Subalgebra(name, (D_T, _scaling(c, n)))
    raise AlgebraError(_unknown_name(name))


def _unknown_name(name: str) -> str:
    message = f"unknown subalgebra '{name}'"
    match = process.extractOne(name, SUBALGEBRA_NAMES, scorer=fuzz.ratio, score_cutoff=50)
    if match is not None:
        message += f"; did you mean '{match[0]}'?"
    return message


def parse_subalgebra(text: str) -> Tuple[str, Optional[float]]:
    """Split 'NAME[:param]' as given on the command line."""
    name, _, param = text.partition(":")
    name = name.strip()
    if name not in SUBALGEBRA_NAMES:
        raise AlgebraError(_unknown_name(name))
    if not param:
        return name, None
    try:
        return name, float(param)
    except ValueError as error:
        raise AlgebraError(f"subalgebra parameter must be a number, got '{param}'") from error


def optimal_system(c: ClassificationResult, n: float, a: float = 0.0) -> List[Subalgebra]:
    """
    Optimal system of one-dimensional subalgebras for an extension case.

    Raises:
        AlgebraError: GENERIC case, where only g0 exists and reductions give constants.
    """
    if c.case is Case.GENERIC:
        raise AlgebraError("GENERIC case: only g0 = <d/dx> exists; its reduction "
                           "yields constants only")
    system = [make_subalgebra("g0", c, n)]
    if c.case is Case.POWER:
        if abs(c.rho + 1.0) <= RHO_MINUS_ONE_TOL:
            system.append(make_subalgebra("g2.2", c, n, a))
        else:
            system.append(make_subalgebra("g2.1", c, n))
    elif c.case is Case.EXPONENTIAL:
        system.append(make_subalgebra("g3", c, n))
    else:
        system.extend(make_subalgebra("g4.1", c, n, sigma) for sigma in (-1.0, 0.0, 1.0))
        system.append(make_subalgebra("g4.2", c, n))
    return system


def is_closed(sub: Subalgebra) -> bool:
    try:
        structure_constants(sub.basis)
    except AlgebraError:
        return False
    return True


__all__ = [
    "AlgebraError", "AlgebraLabel", "StructureConstants", "Subalgebra", "antisymmetry_defect",
    "bracket", "identify_algebra", "is_closed", "jacobi_defect", "make_subalgebra",
    "optimal_system", "parse_subalgebra", "structure_constants",
]
