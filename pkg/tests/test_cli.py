import json

import numpy as np
import pandas as pd
import pytest
from openpyxl import load_workbook

from fkdv_symmetry.cli import main, render_report
from fkdv_symmetry.reduce import exact_catalog

SMALL_GRID = ["--grid", "6x6"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


class TestClassify:
    def test_power_law(self, capsys):
        code, report = run(capsys, "classify", "--n", "2", "--beta", "t^2")
        assert code == 0
        assert report["schema"] == "fkdv5-report/1"
        assert report["classification"]["case"] == "POWER"
        assert report["classification"]["rho"] == pytest.approx(2.0, abs=1e-6)
        assert report["algebra"]["name"] == "A2"
        assert [s["name"] for s in report["optimal_system"]] == ["g0", "g2.1"]
        assert len(report["reductions"]) == 1

    def test_constant_coefficients(self, capsys):
        code, report = run(capsys, "classify", "--n", "3", "--beta", "-2")
        assert code == 0
        assert report["algebra"]["name"] == "A3.5"
        assert report["algebra"]["a"] == pytest.approx(0.2)
        assert report["reductions"][-1]["subalgebra"] == "g4.alg"

    def test_gauged_input(self, capsys):
        # gauging alpha = 0.5 turns beta = 1 into 1 / (1 - t~)
        code, report = run(capsys, "classify", "--n", "2", "--alpha", "0.5", "--beta", "1")
        assert code == 0
        assert report["gauge"]["applied"] is True
        assert report["classification"]["case"] == "POWER"
        assert report["classification"]["rho"] == pytest.approx(-1.0, abs=1e-6)
        assert report["classification"]["kappa"] == pytest.approx(-1.0, abs=1e-6)
        assert [s["name"] for s in report["optimal_system"]] == ["g0", "g2.2"]
        assert len(report["symmetries"]["original"]) == 2

    def test_generic_exit_code(self, capsys):
        code, report = run(capsys, "classify", "--n", "2", "--beta", "1 + t^2")
        assert code == 2
        assert report["classification"]["case"] == "GENERIC"
        assert report["reductions"] == []

    def test_deterministic_output(self, capsys):
        argv = ["classify", "--n", "2", "--alpha", "1/t", "--beta", "t^3"]
        main(argv)
        first = capsys.readouterr().out
        main(argv)
        assert capsys.readouterr().out == first

    def test_bad_expression(self, capsys):
        code, report = run(capsys, "classify", "--n", "2", "--beta", "t +")
        assert code == 1
        assert report is None

    def test_expression_with_leading_minus(self, capsys):
        code, report = run(capsys, "classify", "--n", "2", "--beta", "-t^2")
        assert code == 0
        assert report["classification"]["case"] == "POWER"
        assert report["classification"]["epsilon"] == -1

    def test_negative_alpha_as_separate_token(self, capsys):
        code, report = run(capsys, "classify", "--n", "2", "--alpha", "-0.3", "--beta", "-1")
        assert code in (0, 2)
        assert report["gauge"]["applied"] is True

    def test_missing_beta(self, capsys):
        assert main(["classify", "--n", "2"]) == 1

    def test_help(self, capsys):
        assert main(["--help"]) == 0


class TestReduce:
    ARGS = ["--n", "2", "--beta", "1", "--subalgebra", "g4.1:1", "--ic", "1,0.1,0,0,0"]

    def test_lifted_residual(self, capsys):
        code, report = run(capsys, "reduce", *self.ARGS, *SMALL_GRID)
        assert code == 0
        assert report["reduction"]["subalgebra"] == "g4.1"
        assert report["residual"]["passed"] is True
        assert report["trajectory"]["truncated"] is False

    def test_travelling_wave_example(self, capsys):
        code, report = run(capsys, "reduce", "--n", "2", "--beta", "-1", "--subalgebra", "g4.1:24",
                           "--t-range", "0:0.05",
                           "--ic=-12.6491106407,0,37.9473319220,0,-303.578655376", *SMALL_GRID)
        assert code == 0
        assert report["residual"]["passed"] is True

    def test_solve_alias(self, capsys):
        _, reduced = run(capsys, "reduce", *self.ARGS, *SMALL_GRID)
        _, solved = run(capsys, "solve", *self.ARGS, *SMALL_GRID)
        assert reduced == solved

    def test_tables(self, capsys, tmp_path):
        target = tmp_path / "out" / "trajectory.csv"
        code, _ = run(capsys, "reduce", *self.ARGS, *SMALL_GRID, "--csv", str(target))
        assert code == 0
        assert list(pd.read_csv(target).columns)[:2] == ["omega", "phi_0"]
        samples = pd.read_csv(tmp_path / "out" / "trajectory_field_samples.csv")
        assert len(samples) == 36

    def test_translation_subalgebra(self, capsys):
        code, _ = run(capsys, "reduce", "--n", "2", "--beta", "t^2", "--subalgebra", "g0",
                      "--ic", "1,0,0,0,0")
        assert code == 1

    def test_wrong_ic_count(self, capsys):
        assert main(["reduce", *self.ARGS[:-1], "1,0,0"]) == 1


class TestCriterion:
    def test_reducible(self, capsys):
        code, report = run(capsys, "criterion", "--n", "2", "--beta", "1/t")
        assert code == 0
        assert report["reducibility"]["reducible"] is True
        assert report["reducibility"]["constant_alpha"] == pytest.approx(-0.5, abs=1e-6)

    def test_not_reducible(self, capsys):
        code, report = run(capsys, "criterion", "--n", "2", "--beta", "t^2")
        assert code == 0
        assert report["reducibility"]["reducible"] is False
        assert "transform" not in report["reducibility"]


class TestCatalog:
    def test_residuals(self, capsys):
        code, report = run(capsys, "catalog", "--n", "2", "--epsilon", "-1", *SMALL_GRID)
        assert code == 0
        assert [s["label"] for s in report["solutions"]] == [
            "stationary", "travelling wave (+)", "travelling wave (-)"]
        assert all(s["residual"]["passed"] for s in report["solutions"])

    def test_lifted(self, capsys):
        code, report = run(capsys, "catalog", "--n", "2", "--alpha", "0.3", "--sign", "1",
                           *SMALL_GRID)
        assert code == 0
        assert [s["label"] for s in report["solutions"]] == [
            "stationary (alpha-lifted)", "travelling wave (+) (alpha-lifted)"]
        assert all(s["residual"]["passed"] for s in report["solutions"])

    def test_workbook(self, capsys, tmp_path):
        target = tmp_path / "catalog.xlsx"
        code, _ = run(capsys, "catalog", "--n", "2", *SMALL_GRID, "--xlsx", str(target))
        assert code == 0
        workbook = load_workbook(target)
        assert workbook.sheetnames == ["Report", "Field samples"]
        assert workbook["Report"]["A1"].font.bold
        assert workbook["Field samples"].max_row == 3 * 36 + 1

    def test_json_file(self, capsys, tmp_path):
        target = tmp_path / "catalog.json"
        code, report = run(capsys, "catalog", "--n", "3", *SMALL_GRID, "--json", str(target))
        assert code == 0
        assert report is None
        assert json.loads(target.read_text())["command"] == "catalog"

    def test_no_real_stationary_constant(self, capsys):
        assert main(["catalog", "--n", "2", "--epsilon", "1"]) == 1


class TestVerify:
    def test_constant_case_symmetries(self, capsys):
        code, report = run(capsys, "verify", "--n", "2", "--beta", "-1", "--grid", "8x8")
        assert code == 0
        assert report["reference"]["label"] == "stationary"
        assert len(report["symmetry_checks"]) == 3
        assert all(check["passed"] for check in report["symmetry_checks"])

    def test_power_case_symmetries(self, capsys):
        code, report = run(capsys, "verify", "--n", "2", "--beta", "t^2", "--grid", "8x8")
        assert code == 0
        assert report["reference"]["label"] == "lifted g2.1"
        assert all(check["passed"] for check in report["symmetry_checks"])

    def test_sampled_solution(self, capsys, tmp_path):
        wave = exact_catalog(2.0, -1)[1]
        t, x = np.meshgrid(np.linspace(1.0, 1.02, 9), np.linspace(-1.0, 1.0, 161), indexing="ij")
        path = tmp_path / "samples.csv"
        pd.DataFrame({"t": t.ravel(), "x": x.ravel(), "u": wave.u(t, x).ravel()}).to_csv(
            path, index=False)
        code, report = run(capsys, "verify", "--n", "2", "--beta", "-1", "--solution", str(path))
        assert code == 0
        assert report["residual"]["method"] == "grid-difference"
        assert report["residual"]["max_rel"] <= 1e-2

    def test_missing_solution_file(self, capsys, tmp_path):
        code, _ = run(capsys, "verify", "--n", "2", "--beta", "-1",
                      "--solution", str(tmp_path / "missing.csv"))
        assert code == 1


class TestRendering:
    def test_floats_are_rounded(self):
        text = render_report({"value": 0.1 + 0.2, "flag": np.bool_(True), "big": float("inf"),
                              "missing": float("nan")})
        assert json.loads(text) == {"value": 0.3, "flag": True, "big": "inf", "missing": None}

    def test_fixed_float_literals(self):
        text = render_report({"rho": -1.0, "count": 3, "tol": 1e-7, "nested": [2.5, "1.5"]})
        assert '"rho": -1.000000000000e+00' in text
        assert '"count": 3' in text
        assert '"tol": 1.000000000000e-07' in text
        assert '2.500000000000e+00' in text
        assert '"1.5"' in text
        assert json.loads(text)["nested"] == [2.5, "1.5"]
