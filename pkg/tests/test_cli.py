"""End-to-end CLI behavior through main()."""
import csv
import json

import numpy as np
import pytest

from ratedist.cli import EXIT_INVALID, EXIT_OK, EXIT_SOLVER, main
from ratedist.fileio import CURVE_COLUMNS, RESIDUAL_COLUMNS, save_problem
from ratedist import build_binary


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


class TestSolve:
    def test_binary_json_document(self, tmp_path):
        out = tmp_path / "res.json"
        code = main([
            "solve", "--source", "binary", "--p", "0.5",
            "--distortion", "0.1", "--solver", "as", "--out", str(out),
        ])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        as_doc = doc["solvers"]["as"]
        assert as_doc["lambda"] == pytest.approx(2.1972, abs=1e-3)
        assert as_doc["rate_nats"] == pytest.approx(0.368064, abs=1e-5)
        assert as_doc["rate_bits"] == pytest.approx(0.368064 / np.log(2), abs=1e-4)
        assert as_doc["converged"] is True
        assert "residuals" in as_doc
        assert as_doc["wall_time_s"] > 0

    def test_both_solvers_reports_difference(self, tmp_path):
        out = tmp_path / "res.json"
        code = main([
            "solve", "--source", "binary", "--distortion", "0.1",
            "--solver", "both", "--out", str(out),
        ])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert set(doc["solvers"]) == {"as", "ba"}
        assert doc["abs_rate_diff"] < 1e-5

    def test_slack_budget_warns_inactive(self, tmp_path):
        out = tmp_path / "res.json"
        code = main([
            "solve", "--source", "binary", "--distortion", "0.75",
            "--out", str(out),
        ])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        as_doc = doc["solvers"]["as"]
        assert as_doc["rate_nats"] == pytest.approx(0.0, abs=1e-10)
        assert "distortion constraint inactive" in as_doc["warnings"]

    def test_problem_file_source(self, tmp_path):
        prob_path = tmp_path / "prob.json"
        save_problem(build_binary(0.5), str(prob_path))
        out = tmp_path / "res.json"
        code = main([
            "solve", "--source", str(prob_path), "--distortion", "0.1",
            "--out", str(out),
        ])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["solvers"]["as"]["lambda"] == pytest.approx(2.1972, abs=1e-3)

    def test_include_law_embeds_arrays(self, tmp_path):
        out = tmp_path / "res.json"
        main([
            "solve", "--source", "binary", "--distortion", "0.1",
            "--include-law", "--out", str(out),
        ])
        doc = json.loads(out.read_text())
        w = np.array(doc["solvers"]["as"]["w"])
        assert w.shape == (2, 2)
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-9)

    def test_missing_source_file_is_invalid_input(self, tmp_path):
        code = main([
            "solve", "--source", str(tmp_path / "absent.json"),
            "--distortion", "0.1",
        ])
        assert code == EXIT_INVALID

    def test_infeasible_distortion_is_invalid_input(self):
        code = main(["solve", "--source", "binary", "--distortion", "-1"])
        assert code == EXIT_INVALID

    def test_nonconvergence_exit_code(self, tmp_path):
        out = tmp_path / "res.json"
        code = main([
            "solve", "--source", "gaussian", "--distortion", "0.5",
            "--max-iter", "3", "--out", str(out),
        ])
        assert code == EXIT_SOLVER
        doc = json.loads(out.read_text())
        assert doc["solvers"]["as"]["converged"] is False

    def test_csv_format(self, tmp_path):
        out = tmp_path / "res.csv"
        code = main([
            "solve", "--source", "binary", "--distortion", "0.1",
            "--format", "csv", "--out", str(out),
        ])
        assert code == EXIT_OK
        rows = read_csv(str(out))
        assert rows[0]["solver"] == "as"
        assert float(rows[0]["lambda"]) == pytest.approx(2.1972, abs=1e-3)


class TestCurve:
    def test_distortion_sweep_rows_sorted(self, tmp_path):
        out = tmp_path / "curve.csv"
        code = main([
            "curve", "--source", "binary", "--dmin", "0.05", "--dmax", "0.45",
            "--points", "9", "--out", str(out),
        ])
        assert code == EXIT_OK
        rows = read_csv(str(out))
        assert len(rows) == 9
        D = [float(r["D"]) for r in rows]
        assert D == sorted(D)
        R = [float(r["R_nats"]) for r in rows]
        assert all(a >= b - 1e-12 for a, b in zip(R, R[1:]))
        with open(out, newline="") as handle:
            header = next(csv.reader(handle))
        assert header == CURVE_COLUMNS

    def test_ba_lambda_sweep(self, tmp_path):
        out = tmp_path / "ba.csv"
        code = main([
            "curve", "--source", "binary", "--solver", "ba",
            "--lambda-grid", "0.5:4.0:8", "--out", str(out),
        ])
        assert code == EXIT_OK
        rows = read_csv(str(out))
        assert len(rows) == 8
        lams = [float(r["lambda"]) for r in rows]
        np.testing.assert_allclose(lams, np.linspace(0.5, 4.0, 8))
        # achieved distortion falls as the slope grows
        D = [float(r["D"]) for r in rows]
        assert all(a >= b for a, b in zip(D, D[1:]))

    def test_missing_grid_is_invalid(self):
        assert main(["curve", "--source", "binary"]) == EXIT_INVALID
        assert main(["curve", "--source", "binary", "--solver", "ba"]) == EXIT_INVALID

    def test_json_format(self, tmp_path):
        out = tmp_path / "curve.json"
        code = main([
            "curve", "--source", "binary", "--dmin", "0.1", "--dmax", "0.4",
            "--points", "3", "--format", "json", "--out", str(out),
        ])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert len(doc) == 3
        assert set(doc[0]) == set(CURVE_COLUMNS)


class TestResiduals:
    def test_trace_rows(self, tmp_path):
        out = tmp_path / "trace.csv"
        code = main([
            "residuals", "--source", "binary", "--distortion", "0.2",
            "--out", str(out),
        ])
        assert code == EXIT_OK
        rows = read_csv(str(out))
        assert [r["iter"] for r in rows] == [str(i) for i in range(1, len(rows) + 1)]
        first = rows[0]
        for col in RESIDUAL_COLUMNS[1:]:
            value = float(first[col])
            assert np.isfinite(value) and value >= 0.0
        last = rows[-1]
        assert max(float(last[c]) for c in RESIDUAL_COLUMNS[1:]) <= 1e-9


class TestCompare:
    def test_binary_cases(self, tmp_path):
        out = tmp_path / "cmp.csv"
        code = main([
            "compare", "--source", "binary", "--distortion", "0.1,0.4",
            "--repeats", "2", "--out", str(out),
        ])
        assert code == EXIT_OK
        rows = read_csv(str(out))
        assert len(rows) == 2
        for row in rows:
            assert float(row["abs_diff"]) < 1e-5
            assert 10 <= int(row["ba_search_steps"]) <= 200
            assert float(row["t_as_mean"]) > 0
            assert float(row["speedup"]) > 0
        assert float(rows[0]["lambda_as"]) == pytest.approx(2.1972, abs=1e-3)
        assert float(rows[1]["lambda_ba"]) == pytest.approx(0.4055, abs=1e-3)


class TestFixtures:
    def test_lists_builtins(self, capsys):
        assert main(["fixtures"]) == EXIT_OK
        text = capsys.readouterr().out
        for name in ("binary", "gaussian", "laplacian", "bifurcation"):
            assert name in text
