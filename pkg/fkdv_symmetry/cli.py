#!/usr/bin/env python
# coding: utf-8
"""
Command-line front end for the fKdV symmetry toolkit.

Usage:
    python -m fkdv_symmetry classify  --n 2 --alpha 0 --beta "t^2"
    python -m fkdv_symmetry reduce    --n 2 --beta -1 --subalgebra g4.1:24 --t-range 0:0.05 \
        --ic=-12.6491106407,0,37.9473319220,0,-303.578655376
    python -m fkdv_symmetry criterion --n 2 --alpha 0 --beta "1/t"
    python -m fkdv_symmetry catalog   --n 2 --epsilon -1 --alpha 0.3
    python -m fkdv_symmetry verify    --n 2 --beta -1 [--solution samples.csv]

Reports are JSON (schema "fkdv5-report/1") on stdout or in --json PATH;
tables go to --csv PATH and --xlsx PATH. Logging goes to stderr.

Exit codes: 0 success, 1 input or numerical error, 2 GENERIC case.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from openpyxl import load_workbook
from openpyxl.styles import Font

from fkdv_symmetry.algebra import (
    AlgebraError, antisymmetry_defect, identify_algebra, jacobi_defect, make_subalgebra,
    optimal_system, parse_subalgebra, structure_constants,
)
from fkdv_symmetry.classify import (
    Case, ClassificationResult, classify, symmetry_basis, symmetry_basis_original,
)
from fkdv_symmetry.expr import ZERO, Const, parse
from fkdv_symmetry.gauge import (
    CriterionError, EquationSpec, constantize, reducibility_residual,
)
from fkdv_symmetry.reduce import (
    ReductionError, SolutionField, exact_catalog, integrate_reduced, lift, lift_rectangle,
    lifted_equation, reduction_for,
)
from fkdv_symmetry.verify import (
    Grid, grid_residual, pde_residual, residual_table, symmetry_check,
)

# ==============================
# CONFIGURATION SECTION
# ==============================

SCHEMA = "fkdv5-report/1"
DEFAULT_T_RANGE = "1:2"
DEFAULT_OMEGA_SPAN = "0:3"
DEFAULT_GRID = "40x40"
DEFAULT_TOL = 1e-7             # Classification tolerance
CRITERION_TOL = 1e-8           # Reducibility verdict
ODE_TOL = 1e-10
LIFTED_RESIDUAL_TOL = 1e-6
EXACT_RESIDUAL_TOL = 1e-9
LIFTED_EXACT_RESIDUAL_TOL = 1e-8
RESIDUAL_FLOOR = 1e-12         # Smallest baseline used for symmetry pass thresholds
DEFAULT_FLOW_EPS = "-0.01,0.01"  # Scaling flows stretch t by exp(5 n eps)
STATIONARY_X_RANGE = (1.0, 3.0)
TRAVELLING_X_RANGE = (-5.0, 5.0)
FLOAT_MARK = "@@"              # Brackets float placeholders while the JSON is rendered
FLOAT_TOKEN = re.compile(r'"@@(\d+)@@"')
DASH_VALUE_FLAGS = ("--alpha", "--beta", "--ic", "--eps", "--t-range", "--omega-span", "--param")

LOG_FORMAT = '[%(levelname)s] %(asctime)s - %(message)s'
LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'

LOGGER = logging.getLogger(__name__)

Outcome = Tuple[Dict[str, object], Dict[str, pd.DataFrame], int]


# =============================================================================
# ARGUMENT PARSING
# =============================================================================

def _pair(text: str) -> Tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"expected a:b, got '{text}'") from error
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"range must satisfy a < b, got '{text}'")
    return lo, hi


def _counts(text: str) -> Tuple[int, int]:
    try:
        nt, nx = (int(part) for part in text.lower().split("x"))
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"expected NtxNx, got '{text}'") from error
    if nt < 1 or nx < 1:
        raise argparse.ArgumentTypeError(f"grid counts must be positive, got '{text}'")
    return nt, nx


def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as error:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got '{text}'") from error


def _five(text: str) -> List[float]:
    values = _floats(text)
    if len(values) != 5:
        raise argparse.ArgumentTypeError(f"--ic needs five values, got {len(values)}")
    return values


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=float, required=True, help="Exponent of the nonlinearity")
    common.add_argument("--alpha", default="0", help="alpha(t), expression in t (default 0)")
    common.add_argument("--t-range", type=_pair, default=_pair(DEFAULT_T_RANGE),
                        help=f"Working window a:b (default {DEFAULT_T_RANGE})")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help=f"Classification tolerance (default {DEFAULT_TOL:g})")
    common.add_argument("--grid", type=_counts, default=_counts(DEFAULT_GRID),
                        help=f"Residual grid NtxNx (default {DEFAULT_GRID})")
    common.add_argument("--json", type=Path, help="Write the report here instead of stdout")
    common.add_argument("--csv", type=Path, help="Write sample tables as CSV")
    common.add_argument("--xlsx", type=Path, help="Write report and tables as an Excel workbook")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Log numeric detail")
    verbosity.add_argument("--quiet", action="store_true", help="Log warnings and errors only")

    with_beta = argparse.ArgumentParser(add_help=False, parents=[common])
    with_beta.add_argument("--beta", required=True, help="beta(t), expression in t")

    parser = argparse.ArgumentParser(
        prog="fkdv_symmetry",
        description="Lie symmetries, reductions and exact solutions of "
                    "u_t + u^n u_x + alpha(t) u + beta(t) u_xxxxx = 0",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    classify_parser = subparsers.add_parser("classify", parents=[with_beta],
                                            help="Gauge, classify and list symmetries")
    classify_parser.add_argument("--param", type=float, default=0.0,
                                 help="Parameter a of g2.2 in the optimal system (default 0)")
    classify_parser.set_defaults(handler=cmd_classify)

    for name in ("reduce", "solve"):
        reduce_parser = subparsers.add_parser(name, parents=[with_beta],
                                              help="Integrate and lift a similarity reduction")
        reduce_parser.add_argument("--subalgebra", required=True,
                                   help="NAME[:param], e.g. g2.1, g2.2:0.5, g4.1:1")
        reduce_parser.add_argument("--ic", type=_five, required=True,
                                   help="phi, phi', phi'', phi''', phi'''' at the span start")
        reduce_parser.add_argument("--omega-span", type=_pair, default=_pair(DEFAULT_OMEGA_SPAN),
                                   help=f"Integration span a:b (default {DEFAULT_OMEGA_SPAN})")
        reduce_parser.add_argument("--ode-tol", type=float, default=ODE_TOL,
                                   help=f"Reduced-ODE tolerance (default {ODE_TOL:g})")
        reduce_parser.set_defaults(handler=cmd_reduce)

    criterion_parser = subparsers.add_parser("criterion", parents=[with_beta],
                                             help="Test reducibility to constant coefficients")
    criterion_parser.set_defaults(handler=cmd_criterion)

    catalog_parser = subparsers.add_parser("catalog", parents=[common],
                                           help="Exact solutions with their residuals")
    catalog_parser.add_argument("--epsilon", type=int, choices=(-1, 1), default=-1,
                                help="Sign of beta (default -1)")
    catalog_parser.add_argument("--sign", type=int, choices=(-1, 1),
                                help="Keep only this travelling-wave sign")
    catalog_parser.set_defaults(handler=cmd_catalog)

    verify_parser = subparsers.add_parser("verify", parents=[with_beta],
                                          help="Residual of sampled data or symmetry flows")
    verify_parser.add_argument("--solution", type=Path,
                               help="CSV with columns t, x, u on a regular grid")
    verify_parser.add_argument("--eps", type=_floats, default=_floats(DEFAULT_FLOW_EPS),
                               help=f"Flow parameters (default {DEFAULT_FLOW_EPS})")
    verify_parser.add_argument("--ic", type=_five, default=[1.0, 0.0, 0.0, 0.0, 0.0],
                               help="Initial values for the reference reduction")
    verify_parser.add_argument("--omega-span", type=_pair, default=_pair(DEFAULT_OMEGA_SPAN),
                               help=f"Reference integration span (default {DEFAULT_OMEGA_SPAN})")
    verify_parser.set_defaults(handler=cmd_verify)
    return parser


def _attach_dash_values(argv: Sequence[str]) -> List[str]:
    """Rewrite `--beta -t^2` as `--beta=-t^2`; argparse reads a leading '-' as a new option."""
    out: List[str] = []
    pending = False
    for token in argv:
        if pending and token.startswith("-") and not token.startswith("--"):
            out[-1] = f"{out[-1]}={token}"
        else:
            out.append(token)
        pending = token in DASH_VALUE_FLAGS
    return out


def _parse_args(argv: Optional[Sequence[str]]) -> argparse.Namespace:
    argv = sys.argv[1:] if argv is None else argv
    return _build_parser().parse_args(_attach_dash_values(argv))


# =============================================================================
# REPORT PIECES
# =============================================================================

def _equation(args: argparse.Namespace) -> EquationSpec:
    return EquationSpec.from_strings(args.n, args.alpha, args.beta, args.t_range)


def _canonical_equation(c: ClassificationResult, n: float) -> EquationSpec:
    window = c.normalizer.image(c.normalizer.domain)
    return EquationSpec(n, ZERO, c.canonical_beta, window)


def _classification_sections(e: EquationSpec, c: ClassificationResult,
                             param: float = 0.0) -> Dict[str, object]:
    sections: Dict[str, object] = {
        "gauge": {"applied": c.gauge is not None and not c.gauge.is_identity,
                  "transform": c.gauge.describe() if c.gauge is not None else None},
        "classification": c.describe(),
    }
    canonical = symmetry_basis(c, e.n)
    sections["symmetries"] = {
        "canonical": [v.describe() for v in canonical],
        "original": [v.describe() for v in symmetry_basis_original(e, c)],
    }
    s = structure_constants(canonical)
    label = identify_algebra(s)
    sections["algebra"] = {"label": str(label), "name": label.name, "a": label.a,
                           "structure_constants": s.bracket_table(),
                           "antisymmetry_defect": antisymmetry_defect(s),
                           "jacobi_defect": jacobi_defect(s)}
    if c.case is Case.GENERIC:
        sections["optimal_system"] = [{"name": "g0", "params": {},
                                       "basis": [str(v) for v in canonical]}]
        sections["reductions"] = []
        return sections
    system = optimal_system(c, e.n, param)
    sections["optimal_system"] = [sub.describe() for sub in system]
    reductions = []
    for sub in system[1:]:
        reductions.append(reduction_for(sub, c, e.n).describe())
    if c.case is Case.CONSTANT:
        reductions.append({"subalgebra": "g4.alg",
                           "ansatz": f"u = C*x^(-4/{e.n:g})",
                           "ode": "algebraic; see the stationary catalog entry"})
    sections["reductions"] = reductions
    return sections


def _report(command: str, **sections) -> Dict[str, object]:
    report: Dict[str, object] = {"schema": SCHEMA, "command": command}
    report.update(sections)
    return report


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_classify(args: argparse.Namespace) -> Outcome:
    """Gauge, criterion, classification, bases, algebra, optimal system and reductions."""
    e = _equation(args)
    residual = reducibility_residual(e)
    c = classify(e, tol=args.tol, auto_gauge=True)
    report = _report("classify", input=e.describe(),
                     reducibility={"residual": residual,
                                   "reducible": residual <= CRITERION_TOL,
                                   "tolerance": CRITERION_TOL},
                     **_classification_sections(e, c, args.param))
    if c.case is Case.GENERIC:
        LOGGER.warning("case GENERIC: only the kernel symmetry d/dx exists")
        return report, {}, 2
    return report, {}, 0


def cmd_reduce(args: argparse.Namespace) -> Outcome:
    """Integrate the reduced ODE of one subalgebra and lift it onto the canonical window."""
    e = _equation(args)
    c = classify(e, tol=args.tol, auto_gauge=True)
    if c.case is Case.GENERIC:
        raise AlgebraError("GENERIC case: only g0 exists and its reduction yields constants only")
    name, param = parse_subalgebra(args.subalgebra)
    sub = make_subalgebra(name, c, e.n, param)
    r = reduction_for(sub, c, e.n)
    traj = integrate_reduced(r.ode, args.ic, args.omega_span, tol=args.ode_tol)
    canonical = _canonical_equation(c, e.n)
    t_range = canonical.interval
    x_range = lift_rectangle(r, traj, t_range)
    field = lift(r, traj, t_range, x_range)
    grid = Grid(t_range, x_range, *args.grid)
    residual = pde_residual(field, canonical, grid, tolerance=LIFTED_RESIDUAL_TOL)
    report = _report("reduce", input=e.describe(),
                     classification=c.describe(),
                     canonical_equation=canonical.describe(),
                     reduction=r.describe(),
                     trajectory=traj.describe(),
                     residual=residual.describe())
    tables = {"Trajectory": traj.table(), "Field samples": residual_table(field, canonical, grid)}
    return report, tables, 0


def cmd_criterion(args: argparse.Namespace) -> Outcome:
    """Reducibility criterion and, when it holds, the constantizing transformation."""
    e = _equation(args)
    residual = reducibility_residual(e)
    verdict: Dict[str, object] = {"residual": residual, "reducible": residual <= CRITERION_TOL,
                                  "tolerance": CRITERION_TOL}
    if verdict["reducible"]:
        try:
            g, A, B = constantize(e, CRITERION_TOL)
            verdict["transform"] = g.describe()
            verdict["constant_alpha"] = A
            verdict["constant_beta"] = B
        except CriterionError as error:
            LOGGER.warning("criterion holds but constantization failed: %s", error)
            verdict["reducible"] = False
            verdict["reason"] = str(error)
    return _report("criterion", input=e.describe(), reducibility=verdict), {}, 0


def _catalog_grid(s: SolutionField, t_range, counts) -> Grid:
    x_range = STATIONARY_X_RANGE if s.label.startswith("stationary") else TRAVELLING_X_RANGE
    return Grid(t_range, x_range, *counts)


def cmd_catalog(args: argparse.Namespace) -> Outcome:
    """Exact solutions for (n, eps[, alpha]) with their residuals."""
    alpha = parse(args.alpha)
    lifted = alpha != ZERO
    if lifted:
        e = lifted_equation(args.n, args.epsilon, alpha, args.t_range)
        fields = exact_catalog(args.n, args.epsilon, alpha, args.t_range)
        tolerance = LIFTED_EXACT_RESIDUAL_TOL
    else:
        e = EquationSpec(args.n, ZERO, Const(float(args.epsilon)), args.t_range)
        fields = exact_catalog(args.n, args.epsilon)
        tolerance = EXACT_RESIDUAL_TOL
    if args.sign is not None:
        wanted = "(+)" if args.sign > 0 else "(-)"
        fields = [s for s in fields if "travelling" not in s.label or wanted in s.label]
    solutions, frames = [], []
    for s in fields:
        grid = _catalog_grid(s, args.t_range, args.grid)
        residual = pde_residual(s, e, grid, tolerance=tolerance)
        solutions.append({"label": s.label, "provenance": s.provenance,
                          "residual": residual.describe()})
        frame = residual_table(s, e, grid)
        frame.insert(0, "solution", s.label)
        frames.append(frame)
    report = _report("catalog", equation=e.describe(), epsilon=args.epsilon,
                     solutions=solutions)
    return report, {"Field samples": pd.concat(frames, ignore_index=True)}, 0


def _reference_solution(args, c: ClassificationResult, canonical: EquationSpec
                        ) -> Tuple[SolutionField, Grid]:
    """A nonconstant solution of the canonical equation to push through the flows."""
    if c.case is Case.CONSTANT:
        try:
            s = exact_catalog(args.n, c.epsilon)[0]
            return s, Grid(canonical.interval, STATIONARY_X_RANGE, *args.grid)
        except ReductionError as error:
            LOGGER.info("no stationary solution (%s); using the g4.2 reduction", error)
    sub = optimal_system(c, args.n)[-1]
    r = reduction_for(sub, c, args.n)
    traj = integrate_reduced(r.ode, args.ic, args.omega_span)
    x_range = lift_rectangle(r, traj, canonical.interval)
    s = lift(r, traj, canonical.interval, x_range)
    return s, Grid(canonical.interval, x_range, *args.grid)


def cmd_verify(args: argparse.Namespace) -> Outcome:
    """Residual of user data, or symmetry checks of the canonical generators."""
    e = _equation(args)
    if args.solution is not None:
        frame = pd.read_csv(args.solution)
        report = grid_residual(frame, e)
        return _report("verify", input=e.describe(), residual=report.describe()), {}, 0

    c = classify(e, tol=args.tol, auto_gauge=True)
    if c.case is Case.GENERIC:
        raise AlgebraError("GENERIC case: no solution family to verify symmetries on")
    canonical = _canonical_equation(c, e.n)
    s, grid = _reference_solution(args, c, canonical)
    base = pde_residual(s, canonical, grid)
    threshold = max(base.max_rel, RESIDUAL_FLOOR)
    checks = []
    for v in symmetry_basis(c, e.n):
        reports = symmetry_check(v, s, canonical, args.eps, grid, tolerance=threshold)
        checks.append({"generator": str(v), "passed": all(rep.passed for rep in reports),
                       "reports": [rep.describe() for rep in reports]})
    report = _report("verify", input=e.describe(), classification=c.describe(),
                     canonical_equation=canonical.describe(),
                     reference={"label": s.label, "residual": base.describe()},
                     symmetry_checks=checks)
    return report, {}, 0


# =============================================================================
# OUTPUT
# =============================================================================

def _clean(value, number: Callable[[float], object] = lambda v: float(f"{v:.12e}")):
    """JSON-ready copy; finite floats go through `number` (rounded through %.12e by default)."""
    if isinstance(value, dict):
        return {str(key): _clean(item, number) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item, number) for item in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist(), number)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return number(value)
    return value


def render_report(report: Dict[str, object]) -> str:
    """JSON text with every finite float written as a %.12e literal."""
    literals: List[str] = []

    def placeholder(value: float) -> str:
        literals.append(f"{value:.12e}")
        return f"{FLOAT_MARK}{len(literals) - 1}{FLOAT_MARK}"

    text = json.dumps(_clean(report, placeholder), indent=2)
    return FLOAT_TOKEN.sub(lambda match: literals[int(match.group(1))], text) + "\n"


def _ensure_parent(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


def save_csv(tables: Dict[str, pd.DataFrame], path: Path) -> None:
    """First table at `path`, the others next to it with a suffix."""
    _ensure_parent(path)
    for index, (name, frame) in enumerate(tables.items()):
        target = path if index == 0 else path.with_name(
            f"{path.stem}_{name.lower().replace(' ', '_')}{path.suffix}")
        frame.to_csv(target, index=False)
        LOGGER.info("Saved %s to %s", name, target)


def adjust_excel_formatting(path: Path) -> None:
    """Bold header rows and widths fitted to content."""
    workbook = load_workbook(path)
    for sheet in workbook.worksheets:
        for cell in sheet[1]:
            cell.font = Font(bold=True)
        for column_cells in sheet.columns:
            width = max(len(str(cell.value)) if cell.value is not None else 0
                        for cell in column_cells)
            sheet.column_dimensions[column_cells[0].column_letter].width = width + 2
    workbook.save(path)


def save_xlsx(report: Dict[str, object], tables: Dict[str, pd.DataFrame], path: Path) -> None:
    _ensure_parent(path)
    summary = pd.json_normalize(_clean(report), sep=".").T.reset_index()
    summary.columns = ["field", "value"]
    summary["value"] = summary["value"].map(
        lambda v: json.dumps(v) if isinstance(v, (list, dict)) else v)
    with pd.ExcelWriter(path, engine="openpyxl") as writer:
        summary.to_excel(writer, sheet_name="Report", index=False)
        for name, frame in tables.items():
            frame.to_excel(writer, sheet_name=name[:31], index=False)
    adjust_excel_formatting(path)
    LOGGER.info("Saved workbook to %s", path)


# =============================================================================
# MAIN
# =============================================================================

def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt=LOG_DATEFMT,
                        stream=sys.stderr, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parse_args(argv)
    except SystemExit as error:
        return 0 if error.code in (0, None) else 1
    _configure_logging(args)

    try:
        report, tables, code = args.handler(args)
    except (ValueError, RuntimeError, FileNotFoundError) as error:
        logging.error("%s failed: %s", args.command, error)
        return 1

    text = render_report(report)
    if args.json is not None:
        _ensure_parent(args.json)
        args.json.write_text(text, encoding="utf-8")
        LOGGER.info("Saved report to %s", args.json)
    else:
        sys.stdout.write(text)
    if args.csv is not None and tables:
        save_csv(tables, args.csv)
    if args.xlsx is not None:
        save_xlsx(report, tables, args.xlsx)
    return code


if __name__ == "__main__":
    sys.exit(main())
