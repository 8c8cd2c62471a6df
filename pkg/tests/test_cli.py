import csv
import json

import numpy as np
import pytest

from asmd.cli import main
from asmd.fixtures import LINEAR_N2, QUADRATIC_N3, fixture_path, load_fixture
from asmd.problems import load_problem
from asmd.solver import SolverConfig, solve_adaptive


def run_cli(*args):
    return main([str(a) for a in args])


class TestGen:
    def test_generates_loadable_file(self, tmp_path):
        out = tmp_path / "a.json"
        assert run_cli("gen", "--n", 50, "--m", 10, "--seed", 7, "--out", out) == 0
        problem = load_problem(out)
        assert problem.dimension == 50
        assert problem.constraint.count == 10

    def test_deterministic_output(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run_cli("gen", "--n", 20, "--seed", 3, "--out", a)
        run_cli("gen", "--n", 20, "--seed", 3, "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_n_floor_is_usage_error(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as err:
            run_cli("gen", "--n", 1, "--out", tmp_path / "x.json")
        assert err.value.code == 2
        assert "--n" in capsys.readouterr().err


class TestSolve:
    def test_linear_fixture(self, tmp_path):
        result_path = tmp_path / "result.json"
        trace_path = tmp_path / "trace.csv"
        code = run_cli(
            "solve",
            "--problem", fixture_path(LINEAR_N2),
            "--epsilon", 0.05,
            "--result-out", result_path,
            "--trace-out", trace_path,
            "--no-timestamp",
        )
        assert code == 0
        doc = json.loads(result_path.read_text())
        assert doc["stop_reason"] == "criterion_met"
        assert doc["g_value"] <= 0.05
        assert doc["f_value"] <= 0.05
        assert len(doc["x_bar_digest"]) == 8
        with open(trace_path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["k", "productive", "M_k", "h_k", "g_value", "f_value"]
        assert len(rows) - 1 == doc["N"]
        assert sum(int(r[1]) for r in rows[1:]) == doc["N_I"]

    def test_result_matches_library_run(self, tmp_path):
        result_path = tmp_path / "result.json"
        run_cli(
            "solve",
            "--problem", fixture_path(QUADRATIC_N3),
            "--epsilon", 0.05,
            "--seed", 5,
            "--result-out", result_path,
            "--no-timestamp",
        )
        doc = json.loads(result_path.read_text())
        lib = solve_adaptive(load_fixture(QUADRATIC_N3), SolverConfig(epsilon=0.05, seed=5))
        assert doc["N"] == lib.N
        assert doc["N_I"] == lib.N_I
        np.testing.assert_array_equal(np.array(doc["x_bar"]), lib.x_bar)

    def test_byte_identical_reruns(self, tmp_path):
        paths = []
        for tag in ("one", "two"):
            result_path = tmp_path / f"{tag}.json"
            trace_path = tmp_path / f"{tag}.csv"
            run_cli(
                "solve",
                "--problem", fixture_path(QUADRATIC_N3),
                "--epsilon", 0.05,
                "--seed", 11,
                "--result-out", result_path,
                "--trace-out", trace_path,
                "--no-timestamp",
            )
            paths.append((result_path, trace_path))
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()

    def test_timestamp_toggle(self, tmp_path):
        with_ts = tmp_path / "ts.json"
        without_ts = tmp_path / "nots.json"
        run_cli("solve", "--problem", fixture_path(LINEAR_N2), "--epsilon", 0.1,
                "--result-out", with_ts)
        run_cli("solve", "--problem", fixture_path(LINEAR_N2), "--epsilon", 0.1,
                "--result-out", without_ts, "--no-timestamp")
        assert "timestamp" in json.loads(with_ts.read_text())
        assert "timestamp" not in json.loads(without_ts.read_text())

    def test_missing_file_is_io_error(self, tmp_path, capsys):
        code = run_cli("solve", "--problem", tmp_path / "absent.json", "--epsilon", 0.1)
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_fixed_without_bound_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as err:
            run_cli("solve", "--problem", fixture_path(LINEAR_N2), "--epsilon", 0.1,
                    "--variant", "fixed")
        assert err.value.code == 2
        assert "--fixed-M" in capsys.readouterr().err

    def test_cap_reached_exit_code(self, tmp_path):
        code = run_cli(
            "solve",
            "--problem", fixture_path(LINEAR_N2),
            "--epsilon", 0.001,
            "--max-iterations", 10,
        )
        assert code == 2

    def test_no_partial_file_on_failure(self, tmp_path):
        target = tmp_path / "result.json"
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        code = run_cli("solve", "--problem", bad, "--epsilon", 0.1, "--result-out", target)
        assert code == 1
        assert not target.exists()
        assert not list(tmp_path.glob("*.part"))


class TestBenchmark:
    def test_single_seed_matches_solve(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        code = run_cli(
            "benchmark",
            "--problem", fixture_path(QUADRATIC_N3),
            "--epsilon", 0.05,
            "--seeds", 1,
            "--variants", "adaptive",
            "--out", out,
        )
        assert code == 0
        lib = solve_adaptive(load_fixture(QUADRATIC_N3), SolverConfig(epsilon=0.05, seed=0))
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        row = rows[0]
        assert row["variant"] == "adaptive"
        assert float(row["mean_N"]) == lib.N
        assert float(row["mean_N_I"]) == lib.N_I
        assert row["status"] == "ok"
        assert row["within_bound"] == "1"
        capsys.readouterr()

    def test_variant_and_oracle_sweep(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        code = run_cli(
            "benchmark",
            "--problem", fixture_path(QUADRATIC_N3),
            "--epsilon", 0.05,
            "--seeds", 3,
            "--variants", "adaptive,fixed",
            "--oracle-modes", "exact,column",
            "--jobs", 2,
            "--out", out,
        )
        assert code == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert {(r["variant"], r["oracle_mode"]) for r in rows} == {
            ("adaptive", "exact"),
            ("adaptive", "column"),
            ("fixed", "exact"),
            ("fixed", "column"),
        }
        for row in rows:
            assert row["status"] == "ok"
            assert row["mean_f_gap"] != ""
            if row["variant"] == "adaptive":
                assert row["within_bound"] == "1"
                assert float(row["mean_N"]) <= int(row["worst_case_N"])
        table = capsys.readouterr().out
        assert "variant" in table and "worst_case_N" in table

    def test_hundred_seed_column_statistics(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        code = run_cli(
            "benchmark",
            "--problem", fixture_path(QUADRATIC_N3),
            "--epsilon", 0.05,
            "--seeds", 100,
            "--variants", "adaptive",
            "--oracle-modes", "column",
            "--out", out,
        )
        assert code == 0
        with open(out) as fh:
            row = next(csv.DictReader(fh))
        assert row["seeds_run"] == "100"
        mean_gap = float(row["mean_f_gap"])
        stderr = float(row["stderr_f_gap"])
        assert mean_gap <= 0.05 + 3 * stderr
        assert float(row["mean_g_value"]) <= 0.05
        capsys.readouterr()

    def test_deterministic_given_seed_list(self, tmp_path, capsys):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{tag}.csv"
            run_cli(
                "benchmark",
                "--problem", fixture_path(QUADRATIC_N3),
                "--epsilon", 0.05,
                "--seeds", 2,
                "--seed", 9,
                "--oracle-modes", "column",
                "--variants", "adaptive",
                "--out", out,
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        capsys.readouterr()


class TestValidate:
    def test_default_suites_pass(self, capsys):
        code = run_cli("validate", "--samples", 20000)
        out = capsys.readouterr().out
        assert code == 0
        for name in ("unbiasedness", "stepsum", "step-residual", "telescoping"):
            assert f"PASS {name}" in out

    def test_suite_selection(self, capsys):
        code = run_cli("validate", "--suites", "stepsum")
        out = capsys.readouterr().out
        assert code == 0
        assert "stepsum" in out
        assert "unbiasedness" not in out

    def test_unknown_suite_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as err:
            run_cli("validate", "--suites", "everything")
        assert err.value.code == 2
        capsys.readouterr()


class TestFixtures:
    def test_quadratic_fixture_shape(self):
        problem = load_fixture(QUADRATIC_N3)
        assert problem.dimension == 3
        assert problem.constraint.count == 3
        assert problem.geometry_kind == "entropy"
        # convexity: the quadratic matrix must be positive semidefinite
        assert np.linalg.eigvalsh(problem.objective.matrix).min() >= 0

    def test_linear_fixture_constraint_constant(self):
        problem = load_fixture(LINEAR_N2)
        rng = np.random.default_rng(2)
        for x in rng.dirichlet(np.ones(2), size=20):
            assert problem.constraint_value(x) == -1.0

    def test_unknown_fixture(self):
        with pytest.raises(FileNotFoundError):
            fixture_path("nonexistent.json")
