import csv
import json
from pathlib import Path

import pytest

from sdelab import ConfigurationError
from sdelab.cli import main
from sdelab.experiments import (
    CSV_HEADER,
    from_dict,
    load_config,
    pipeline_limit,
    run_experiment,
)

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def smoke(name):
    return CONFIG_DIR / "smoke" / f"{name}.toml"


def base_config(**overrides):
    data = {
        "schema_version": 1,
        "experiment": "truncation_convergence",
        "seed": 1,
        "grid": {"horizon": 1.0, "dt": 0.25},
        "ensemble": {"size": 1},
        "coefficients": {"drift": "spike"},
        "solve": {},
        "sweep": {"R": [2.0, 4.0]},
        "options": {},
        "thresholds": {},
    }
    data.update(overrides)
    return data


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfigParsing:
    def test_canonical_configs_load(self):
        for toml in sorted((CONFIG_DIR / "acceptance").glob("*.toml")):
            cfg = load_config(toml)
            assert cfg.grid.n >= 1

    def test_unknown_schema_version(self):
        with pytest.raises(ConfigurationError, match="schema_version"):
            from_dict(base_config(schema_version=99))

    def test_unknown_experiment_and_drift(self):
        with pytest.raises(ConfigurationError, match="unknown experiment"):
            from_dict(base_config(experiment="nope"))
        bad = base_config()
        bad["coefficients"]["drift"] = "mystery"
        with pytest.raises(ConfigurationError, match="unknown drift"):
            from_dict(bad)

    def test_missing_required_keys(self):
        data = base_config()
        del data["seed"]
        with pytest.raises(ConfigurationError, match="missing"):
            from_dict(data)

    def test_invalid_grid_rejected(self):
        data = base_config(grid={"horizon": 1.0, "dt": 0.3})
        with pytest.raises(ConfigurationError):
            from_dict(data)

    def test_sweep_requirements(self):
        data = base_config()
        data["sweep"] = {"R": []}
        cfg = from_dict(data)
        with pytest.raises(ConfigurationError, match="sweep.R"):
            run_experiment(cfg, out_dir="/tmp/never-used")

    def test_nonpositive_sweep_values_rejected(self):
        data = base_config()
        data["sweep"] = {"R": [2.0, -4.0]}
        with pytest.raises(ConfigurationError):
            from_dict(data)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_config(tmp_path / "nope.toml")


class TestRunOutputs:
    def test_truncation_outputs(self, tmp_path):
        cfg = load_config(smoke("truncation_convergence"))
        out = run_experiment(cfg, out_dir=str(tmp_path))
        assert out.all_passed
        rows = read_rows(out.results_csv)
        assert len(rows) == 4
        with open(out.results_csv) as fh:
            assert fh.readline().strip() == CSV_HEADER
        gaps = [float(r["estimate"]) for r in rows]
        assert gaps == sorted(gaps, reverse=True)
        assert all(r["eps"] == "" and r["t"] == "" for r in rows)
        assert all(r["seed"] == str(cfg.seed) for r in rows)
        summary = json.loads(out.summary_json.read_text())
        assert summary["all_passed"] is True
        assert summary["experiment"] == "truncation_convergence"
        assumptions = json.loads(out.assumptions_json.read_text())
        assert assumptions["passed"] is True

    def test_cauchy_rows_pair_consecutive_levels(self, tmp_path):
        cfg = load_config(smoke("cauchy_in_r"))
        out = run_experiment(cfg, out_dir=str(tmp_path))
        assert out.all_passed
        rows = read_rows(out.results_csv)
        assert [float(r["R"]) for r in rows] == [2.0, 4.0, 8.0, 16.0]
        values = [float(r["estimate"]) for r in rows]
        assert values == sorted(values, reverse=True)
        pipeline = json.loads(out.summary_json.read_text())["summary"]["pipeline"]
        assert pipeline["designated_R"] == 32.0
        assert pipeline["converged"] is True
        assert pipeline["residuals"][-1] < pipeline["residuals"][0]

    def test_rerun_is_deterministic_except_walltime(self, tmp_path):
        cfg = load_config(smoke("exact_characteristic"))
        a = run_experiment(cfg, out_dir=str(tmp_path / "a"))
        b = run_experiment(cfg, out_dir=str(tmp_path / "b"))
        rows_a, rows_b = read_rows(a.results_csv), read_rows(b.results_csv)
        for ra, rb in zip(rows_a, rows_b):
            ra.pop("walltime_s"), rb.pop("walltime_s")
            assert ra == rb

    def test_worker_count_does_not_change_results(self, tmp_path):
        cfg = load_config(smoke("cauchy_in_r"))
        cfg.size = 40
        serial = run_experiment(cfg, threads=1, out_dir=str(tmp_path / "t1"))
        parallel = run_experiment(cfg, threads=2, out_dir=str(tmp_path / "t2"))
        for ra, rb in zip(read_rows(serial.results_csv), read_rows(parallel.results_csv)):
            assert ra["estimate"] == rb["estimate"]
            assert ra["stderr"] == rb["stderr"]

    def test_error_report_names_failing_point(self, tmp_path):
        data = base_config(
            experiment="exp_moment",
            grid={"horizon": 1.0, "dt": 0.25},
            sweep={"eps": [0.1, 0.2, 0.4]},  # 0.1 is not grid aligned
        )
        cfg = from_dict(data)
        from sdelab import DomainError

        with pytest.raises(DomainError):
            run_experiment(cfg, out_dir=str(tmp_path))
        report = json.loads((tmp_path / "error.json").read_text())
        assert report["error"] == "DomainError"
        assert report["experiment"] == "exp_moment"

    def test_failing_threshold_flips_exit_state(self, tmp_path):
        cfg = load_config(smoke("verhulst"))
        cfg.thresholds = {"oracle_tol": 1e-30}  # quadrature noise exceeds this
        out = run_experiment(cfg, out_dir=str(tmp_path))
        assert not out.all_passed
        summary = json.loads(out.summary_json.read_text())
        assert summary["all_passed"] is False


class TestPipelineLimit:
    def test_requires_three_levels(self):
        data = base_config(experiment="cauchy_in_R", sweep={"R": [2.0, 4.0]})
        data["grid"] = {"horizon": 1.0, "dt": 0.25}
        with pytest.raises(ConfigurationError, match=">= 3"):
            pipeline_limit(from_dict(data))

    def test_inert_truncation_gives_zero_residuals(self):
        # ramp drift: the gradient never exceeds any positive level, so all
        # truncated solutions coincide and the pipeline reports residual 0
        data = base_config(
            experiment="cauchy_in_R",
            grid={"horizon": 1.0, "dt": 1e-2},
            ensemble={"size": 20},
            sweep={"R": [2.0, 4.0, 8.0]},
        )
        data["coefficients"] = {
            "drift": "hunter_saxton",
            "noise_a": 0.0,
            "noise_b": 0.5,
            "drift_params": {"noise_slope": 0.5, "breaking_threshold": 0.5},
        }
        data["solve"] = {"initial": 0.5}
        report = pipeline_limit(from_dict(data))
        assert report["residuals"] == [0.0, 0.0]
        assert report["converged"] is True
        assert report["sup_distance_quantiles"]["0.99"] == 0.0

    def test_spike_residuals_shrink(self):
        data = base_config(
            experiment="cauchy_in_R",
            grid={"horizon": 1.0, "dt": 1e-2},
            ensemble={"size": 60},
            sweep={"R": [4.0, 8.0, 16.0, 32.0]},
        )
        data["coefficients"] = {
            "drift": "spike",
            "noise_a": 0.1,
            "noise_b": 0.2,
            "drift_params": {},
        }
        data["solve"] = {"initial": 0.5}
        report = pipeline_limit(from_dict(data))
        assert report["residuals"][-1] < report["residuals"][0]
        assert report["designated_R"] == 32.0


class TestCli:
    def test_list_names_all_experiments(self, capsys):
        assert main(["list"]) == 0
        captured = capsys.readouterr().out
        for name in (
            "exact_characteristic",
            "verhulst",
            "exp_moment",
            "truncation_convergence",
            "cauchy_in_R",
            "moment_uniformity",
            "gronwall",
            "krylov_check",
        ):
            assert name in captured

    def test_run_passes_and_writes(self, tmp_path, capsys):
        code = main(
            [
                "run",
                "--config",
                str(smoke("truncation_convergence")),
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        assert (tmp_path / "results.csv").exists()
        assert "[pass]" in capsys.readouterr().out

    def test_run_missing_config_is_config_error(self, capsys):
        assert main(["run", "--config", "/does/not/exist.toml"]) == 2

    def test_run_assertion_failure_exit_code(self, tmp_path):
        bad = tmp_path / "bad.toml"
        text = smoke("verhulst").read_text().replace(
            "oracle_tol = 1e-9", "oracle_tol = 1e-30"
        )
        bad.write_text(text)
        assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 1

    def test_seed_override_recorded(self, tmp_path):
        code = main(
            [
                "run",
                "--config",
                str(smoke("truncation_convergence")),
                "--seed",
                "999",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        rows = read_rows(tmp_path / "results.csv")
        assert all(r["seed"] == "999" for r in rows)

    def test_check_command(self, tmp_path, capsys):
        code = main(
            ["check", "--config", str(smoke("krylov_check")), "--out", str(tmp_path)]
        )
        assert code == 0
        report = json.loads((tmp_path / "assumptions.json").read_text())
        assert report["passed"] is True

    def test_threads_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SDELAB_THREADS", "2")
        code = main(
            [
                "run",
                "--config",
                str(smoke("truncation_convergence")),
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0

    def test_bad_threads_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SDELAB_THREADS", "lots")
        code = main(
            [
                "run",
                "--config",
                str(smoke("truncation_convergence")),
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 2
