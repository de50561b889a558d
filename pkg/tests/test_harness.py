import os

import numpy as np
import orjson
import pandas as pd
import pytest

import harness.experiment
from core.rng import make_stream
from harness.calibration import ALPHA_RANGES, calibrate_alpha
from harness.experiment import run_experiment
from harness.reference import ReferenceResult, load_reference, run_reference, save_reference
from harness.report import SUMMARY_COLUMNS, ExperimentReport, emit_report, raw_columns
from harness.spec import AUTO, CalibrationSection, ExperimentSpec, ReferenceSection, load_experiment_spec
from main import main
from samplers.config import Method
from samplers.runner import run_sampler as real_run_sampler
from targets.conjugate import ConjugateGaussianTarget
from targets.rosenbrock import RosenbrockTarget
from utils.error_handler import CalibrationError, ConfigError, DegenerateEnsembleError

from tests.conftest import ConstantLikelihoodTarget

SMALL_REFERENCE = {"n_particles": 64, "alpha": 0.9, "replicates": 2, "mcmc_steps": 3, "self_check": False}


def _spec(**overrides):
    raw = {
        "target": {"name": "conjugate_gaussian", "options": {"dim": 2}},
        "methods": ["SMC", "PS"],
        "grid": {"n_particles": [16], "mcmc_steps": [2]},
        "replicates": 2,
        "seed": 3,
        "alpha": {"PS": 2.0},
        "reference": SMALL_REFERENCE,
    }
    raw.update(overrides)
    return ExperimentSpec.model_validate(raw)


def _write_yaml(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestSpec:
    def test_defaults(self):
        spec = ExperimentSpec.model_validate({"target": {"name": "funnel"}})
        assert spec.methods == [Method.SMC, Method.RSMC, Method.PS, Method.WFSMC]
        assert spec.grid.n_particles == [32, 64, 128]
        assert spec.grid.mcmc_steps == [25, 50, 100, 200]
        assert spec.alpha[Method.SMC] == 0.9
        assert spec.needs_calibration(Method.PS)
        assert spec.needs_calibration(Method.WFSMC)
        assert not spec.needs_calibration(Method.SMC)
        assert spec.reference.n_particles == 4096

    def test_alpha_rules(self):
        with pytest.raises(ValueError):
            ExperimentSpec.model_validate({"target": {"name": "funnel"}, "alpha": {"SMC": AUTO}})
        with pytest.raises(ValueError):
            ExperimentSpec.model_validate({"target": {"name": "funnel"}, "alpha": {"WFSMC": 1.5}})
        spec = ExperimentSpec.model_validate({"target": {"name": "funnel"}, "alpha": {"ps": 3.0}})
        assert spec.alpha[Method.PS] == 3.0

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            ExperimentSpec.model_validate({"target": {"name": "funnel"}, "replicate": 3})

    def test_load_with_overrides(self, tmp_path):
        path = _write_yaml(tmp_path / "exp.yaml", "target:\n  name: funnel\nseed: 4\n")
        spec = load_experiment_spec(path, overrides={"seed": 9, "out": str(tmp_path / "o"), "replicates": None})
        assert spec.seed == 9
        assert spec.output.dir == str(tmp_path / "o")
        assert spec.replicates == 50

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_experiment_spec(str(tmp_path / "absent.yaml"))
        with pytest.raises(ConfigError):
            load_experiment_spec(_write_yaml(tmp_path / "bad.yaml", "target: [unclosed\n"))
        with pytest.raises(ConfigError):
            load_experiment_spec(_write_yaml(tmp_path / "list.yaml", "- 1\n- 2\n"))
        with pytest.raises(ConfigError):
            load_experiment_spec(_write_yaml(tmp_path / "grid.yaml", "target:\n  name: funnel\ngrid:\n  n_particles: [1]\n"))

    @pytest.mark.parametrize("name", sorted(os.listdir(os.path.join(os.path.dirname(__file__), "..", "config", "experiments"))))
    def test_shipped_configs_are_valid(self, name):
        path = os.path.join(os.path.dirname(__file__), "..", "config", "experiments", name)
        assert load_experiment_spec(path).replicates >= 1


class TestCalibration:
    def test_baseline_methods_rejected(self, conjugate4):
        with pytest.raises(CalibrationError, match="baseline method needs no calibration"):
            calibrate_alpha(conjugate4, Method.SMC, 16, 2, 100.0, make_stream(0, 0, 4))

    def test_monotone_stub_converges(self, conjugate4, mocker):
        mocker.patch("harness.calibration.pilot_cost", side_effect=lambda *a, **k: 1000.0 * a[4])
        result = calibrate_alpha(conjugate4, Method.WFSMC, 16, 2, 500.0, make_stream(0, 0, 4))
        assert result.parity_ok
        assert result.alpha == pytest.approx(0.5, abs=0.005)
        assert result.probes <= 25
        lo, hi = ALPHA_RANGES[Method.WFSMC]
        assert lo < result.alpha < hi

    def test_ps_default_alpha_first(self, conjugate4, mocker):
        cost = mocker.patch("harness.calibration.pilot_cost", side_effect=lambda *a, **k: 100.0 * a[4])
        result = calibrate_alpha(conjugate4, Method.PS, 16, 2, 300.0, make_stream(0, 0, 4))
        assert result.alpha == 3.0
        assert result.probes == 1
        assert cost.call_count == 1

    def test_ps_stub_crossing_below_default(self, conjugate4, mocker):
        mocker.patch("harness.calibration.pilot_cost", side_effect=lambda *a, **k: 100.0 * a[4])
        result = calibrate_alpha(conjugate4, Method.PS, 16, 2, 150.0, make_stream(0, 0, 4))
        assert result.parity_ok
        assert result.alpha == pytest.approx(1.5, abs=0.015)

    def test_reports_failure_to_match(self, conjugate4, mocker):
        mocker.patch("harness.calibration.pilot_cost", return_value=10.0)
        settings = CalibrationSection(max_probes=5)
        result = calibrate_alpha(conjugate4, Method.WFSMC, 16, 2, 500.0, make_stream(0, 0, 4), settings)
        assert not result.parity_ok
        assert result.probes == 5
        assert result.parity_error == pytest.approx(-0.98)

    def test_real_pilots(self, conjugate4):
        result = calibrate_alpha(
            conjugate4, Method.WFSMC, 16, 2, 200.0, make_stream(0, 0, 4),
            CalibrationSection(pilot_runs=2, max_probes=3),
        )
        assert result.probes <= 3
        assert result.mean_evals > 0


class TestReference:
    def test_analytic_without_runs(self):
        target = ConjugateGaussianTarget(4)
        reference = run_reference(target, make_stream(0, 0, 5), ReferenceSection(**SMALL_REFERENCE))
        assert reference.source == "analytic"
        assert reference.log_z_ref == target.analytic.log_z
        assert reference.run_log_z is None
        np.testing.assert_allclose(reference.sd_ref, np.sqrt(0.5))
        np.testing.assert_allclose(reference.second_sd_ref, np.sqrt(0.5))

    def test_analytic_with_self_check(self):
        settings = ReferenceSection(**{**SMALL_REFERENCE, "self_check": True})
        reference = run_reference(ConjugateGaussianTarget(2), make_stream(0, 0, 5), settings)
        assert np.isfinite(reference.run_log_z)

    def test_reference_runs(self):
        reference = run_reference(RosenbrockTarget(), make_stream(0, 0, 5), ReferenceSection(**SMALL_REFERENCE))
        assert reference.source == "reference_runs"
        assert reference.mean_ref.shape == (16,)
        assert np.all(reference.sd_ref > 0)
        assert np.all(reference.second_sd_ref > 0)
        assert reference.log_z_ref == reference.run_log_z

    def test_save_and_load(self, tmp_path):
        reference = run_reference(ConjugateGaussianTarget(2), make_stream(0, 0, 5), ReferenceSection(**SMALL_REFERENCE))
        path = str(tmp_path / "ref" / "reference.json")
        save_reference(reference, path)
        loaded = load_reference(path, "conjugate_gaussian")
        np.testing.assert_array_equal(loaded.mean_ref, reference.mean_ref)
        assert loaded.log_z_ref == reference.log_z_ref
        with pytest.raises(ConfigError):
            load_reference(path, "funnel")


def _reference(dim=2):
    return ReferenceResult(
        target="constant",
        log_z_ref=-1.5,
        mean_ref=np.zeros(dim),
        sd_ref=np.ones(dim),
        second_ref=np.ones(dim),
        second_sd_ref=np.full(dim, np.sqrt(2.0)),
        source="analytic",
    )


class TestReport:
    def test_empty_report(self, tmp_path):
        report = ExperimentReport.from_raw([], _reference(), "constant")
        emit_report(report, str(tmp_path))
        raw = pd.read_csv(tmp_path / "raw.csv")
        summary = pd.read_csv(tmp_path / "summary.csv")
        assert raw.empty and list(raw.columns) == raw_columns(2)
        assert summary.empty and list(summary.columns) == SUMMARY_COLUMNS

    def test_parity_and_failures(self):
        rows = []
        for method, evals in (("SMC", 1000), ("PS", 1005), ("WFSMC", 1200)):
            for r in range(3):
                row = {
                    "method": method, "n_particles": 8, "mcmc_steps": 2, "replicate": r, "seed": 0,
                    "alpha": 0.9, "log_z": -1.5 + 0.1 * r, "likelihood_evals": evals, "iterations": 4,
                    "acceptance": 0.3, "complete": True, "error": "",
                    "first_0": 0.1, "first_1": -0.1, "second_0": 1.0, "second_1": 1.2,
                }
                rows.append(row)
        rows[-1].update({"complete": False, "error": "iteration cap reached", "likelihood_evals": 9999})
        summary = ExperimentReport.from_raw(rows, _reference(), "constant").summary.set_index("method")

        assert summary.loc["PS", "parity_ok"]
        assert summary.loc["PS", "parity_error"] == pytest.approx(0.005)
        assert not summary.loc["WFSMC", "parity_ok"]
        assert summary.loc["WFSMC", "n_failed"] == 1
        assert summary.loc["WFSMC", "mean_evals"] == 1200
        assert summary.loc["SMC", "mse_log_z"] == pytest.approx((0.0 + 0.01 + 0.04) / 3)
        assert summary.loc["SMC", "b1_sq"] == pytest.approx(0.01)
        assert summary.loc["SMC", "b2_sq"] == pytest.approx(0.04 / 2.0)

    def test_all_failed_group(self):
        rows = [{
            "method": "SMC", "n_particles": 8, "mcmc_steps": 2, "replicate": 0, "seed": 0, "alpha": 0.9,
            "log_z": np.nan, "likelihood_evals": 0, "iterations": 0, "acceptance": np.nan,
            "complete": False, "error": "DegenerateEnsembleError: degenerate ensemble",
            "first_0": np.nan, "first_1": np.nan, "second_0": np.nan, "second_1": np.nan,
        }]
        summary = ExperimentReport.from_raw(rows, _reference(), "constant").summary
        assert summary.loc[0, "n_failed"] == 1
        assert np.isnan(summary.loc[0, "mse_log_z"])


class TestExperiment:
    def test_bookkeeping_with_stub_target(self):
        spec = _spec(methods=["SMC"])
        report = run_experiment(spec, target=ConstantLikelihoodTarget(), reference=_reference())
        assert len(report.raw) == 2
        assert len(report.summary) == 1
        assert report.summary.loc[0, "mse_log_z"] == pytest.approx(0.0, abs=1e-20)

    def test_report_files_round_trip(self, tmp_path):
        report = run_experiment(_spec())
        written = emit_report(report, str(tmp_path))
        assert len(written) == 7

        raw = pd.read_csv(tmp_path / "raw.csv", keep_default_na=False, na_values=[""])
        recomputed = ExperimentReport.from_raw(raw, report.reference, report.target).summary
        stored = pd.read_csv(tmp_path / "summary.csv")
        numeric = ["mean_log_z", "var_log_z", "mse_log_z", "b1_sq", "b2_sq", "mean_evals", "parity_error"]
        np.testing.assert_allclose(
            recomputed[numeric].to_numpy(dtype=float), stored[numeric].to_numpy(dtype=float),
            rtol=1e-12, atol=1e-12,
        )

        payload = orjson.loads((tmp_path / "summary.json").read_bytes())
        assert payload["target"] == "conjugate_gaussian"
        json_rows = pd.DataFrame(payload["rows"])
        np.testing.assert_allclose(
            json_rows[numeric].to_numpy(dtype=float), stored[numeric].to_numpy(dtype=float),
            rtol=1e-12, atol=1e-12,
        )

        plot = pd.read_csv(tmp_path / "plotdata" / "mse_log_z__conjugate_gaussian.csv")
        assert list(plot.columns) == ["k", "PS_N16", "SMC_N16"] or list(plot.columns) == ["k", "SMC_N16", "PS_N16"]
        assert plot["k"].tolist() == [2]

    def test_rerun_is_bit_identical(self, tmp_path):
        for name in ("a", "b"):
            emit_report(run_experiment(_spec()), str(tmp_path / name))
        for filename in ("raw.csv", "summary.csv", "summary.json"):
            assert (tmp_path / "a" / filename).read_bytes() == (tmp_path / "b" / filename).read_bytes()

    def test_workers_do_not_change_results(self):
        serial = run_experiment(_spec(), workers=1)
        threaded = run_experiment(_spec(), workers=3)
        pd.testing.assert_frame_equal(serial.raw, threaded.raw)

    def test_failed_replicate_is_recorded(self, mocker):
        def flaky(target, config, rng):
            if rng.replicate_id == 1:
                raise DegenerateEnsembleError("degenerate ensemble")
            return real_run_sampler(target, config, rng)

        mocker.patch("harness.experiment.run_sampler", side_effect=flaky)
        report = run_experiment(_spec(methods=["SMC"]))
        failed = report.raw[report.raw["error"] != ""]
        assert len(failed) == 1
        assert failed.iloc[0]["error"].startswith("DegenerateEnsembleError")
        assert report.summary.loc[0, "n_failed"] == 1
        assert report.summary.loc[0, "n_success"] == 1

    def test_baseline_falls_back_to_pilots_when_smc_fails(self, mocker):
        def smc_fails(target, config, rng):
            if config.method == Method.SMC:
                raise DegenerateEnsembleError("degenerate ensemble")
            return real_run_sampler(target, config, rng)

        mocker.patch("harness.experiment.run_sampler", side_effect=smc_fails)
        baseline_pilots = mocker.spy(harness.experiment, "pilot_cost")
        spec = _spec(
            methods=["SMC", "WFSMC"],
            alpha={"WFSMC": "auto"},
            calibration={"pilot_runs": 1, "max_probes": 2},
        )
        report = run_experiment(spec)
        summary = report.summary.set_index("method")
        assert summary.loc["SMC", "n_failed"] == 2
        assert summary.loc["WFSMC", "n_success"] == 2
        assert baseline_pilots.call_count == 1
        assert baseline_pilots.call_args.args[1] == Method.SMC

    def test_auto_alpha_is_calibrated(self):
        spec = _spec(
            methods=["SMC", "WFSMC"],
            alpha={"WFSMC": "auto"},
            calibration={"pilot_runs": 1, "max_probes": 2},
        )
        report = run_experiment(spec)
        alphas = report.raw[report.raw["method"] == "WFSMC"]["alpha"].unique()
        assert len(alphas) == 1
        lo, hi = ALPHA_RANGES[Method.WFSMC]
        assert lo < alphas[0] < hi
        assert np.isfinite(report.summary.set_index("method").loc["WFSMC", "parity_error"])

    def test_reference_file_is_reused(self, tmp_path):
        reference = run_reference(ConjugateGaussianTarget(2), make_stream(0, 0, 5), ReferenceSection(**SMALL_REFERENCE))
        path = str(tmp_path / "reference.json")
        save_reference(reference, path)
        spec = _spec(reference={**SMALL_REFERENCE, "path": path})
        assert run_experiment(spec).reference.log_z_ref == reference.log_z_ref


class TestCli:
    def test_list_targets(self, capsys):
        assert main(["list-targets"]) == 0
        out = capsys.readouterr().out
        assert "german_credit" in out and "funnel" in out

    def test_run(self, tmp_path):
        config = _write_yaml(tmp_path / "exp.yaml", (
            "target:\n  name: conjugate_gaussian\n  options:\n    dim: 2\n"
            "methods: [SMC]\ngrid:\n  n_particles: [16]\n  mcmc_steps: [2]\nreplicates: 2\n"
            "reference:\n  self_check: false\n"
        ))
        out = tmp_path / "out"
        assert main(["run", "--config", config, "--out", str(out), "--quiet", "--workers", "2"]) == 0
        assert (out / "summary.csv").exists()

    def test_run_missing_config(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "none.yaml"), "--quiet"]) == 1

    def test_reference(self, tmp_path):
        args = ["reference", "--target", "conjugate_gaussian", "--out", str(tmp_path),
                "--n-ref", "32", "--alpha-ref", "0.9", "--replicates", "1", "--k", "2"]
        assert main(args) == 0
        assert load_reference(str(tmp_path / "reference.json")).source == "analytic"

    def test_calibrate(self, capsys):
        args = ["calibrate", "--target", "conjugate_gaussian", "--method", "wfsmc",
                "--n", "16", "--k", "2", "--pilot-runs", "1"]
        assert main(args) == 0
        payload = orjson.loads(capsys.readouterr().out)
        assert payload["method"] == "WFSMC"
        assert payload["baseline_evals"] > 0
