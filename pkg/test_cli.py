"""
Тесты командной строки: коды выхода, отчёты и детерминированность
"""
import json
from pathlib import Path

import numpy as np
import pytest

from cli import EXIT_CONFIG, EXIT_DOMAIN, EXIT_FAILED, EXIT_OK, cmd_classify, main
from config import AppConfig, RunConfig
from report import CheckRecord, Report

CONFIGS = Path(__file__).parent / "configs"
SMALL_GRID = {"lower": -1.0, "upper": 1.0, "count": 2, "directions": 3, "radii": [1.0]}

EUCLIDEAN_FIELDS = [
    {"name": "translation", "components": ["1", "0"]},
    {"name": "rotation", "components": ["-x2", "x1"]},
    {"name": "dilation", "components": ["x1", "x2"]},
    {"name": "z_squared", "components": ["x1^2 - x2^2", "2*x1*x2"]},
]


@pytest.fixture(autouse=True)
def log_to_tmp(tmp_path, monkeypatch):
    monkeypatch.setenv("LOG_FILE", str(tmp_path / "finsler.log"))
    monkeypatch.setenv("LOG_LEVEL", "WARNING")


@pytest.fixture
def write_config(tmp_path):
    def write(structure, **extra):
        data = {"structure": structure, "grid": SMALL_GRID, "seed": 0}
        data.update(extra)
        path = tmp_path / "run.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)
    return write


def _report(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


class TestVerify:

    def test_euclidean_passes(self, write_config, tmp_path):
        config = write_config({"kind": "euclidean", "dimension": 2}, fields=EUCLIDEAN_FIELDS)
        out = tmp_path / "report.json"
        assert main(["verify", "--config", config, "--out", str(out)]) == EXIT_OK
        report = _report(out)
        assert report["summary"]["passed"] is True
        assert report["summary"]["failures"] == 0
        names = {check["name"] for check in report["checks"]}
        assert "structure/homogeneity" in names
        assert "tensors/curvature_antisymmetry" in names
        assert "lift/det_identity_random" in names
        assert "lie/z_squared/interchange" in names
        assert all(check["anchor"] for check in report["checks"])

    def test_finite_difference_mode(self, write_config, tmp_path):
        config = write_config({"kind": "randers", "dimension": 2, "b": ["0.3", "-0.2"]})
        out = tmp_path / "report.json"
        assert main(["verify", "--config", config, "--mode", "fd", "--out", str(out)]) == EXIT_OK
        assert _report(out)["command"]["mode"] == "finite_difference"

    def test_report_body_is_deterministic(self, write_config, tmp_path):
        config = write_config({"kind": "randers", "dimension": 2, "a": [["1 + 0.2*x1^2", "0"], ["0", "1"]],
                               "b": ["0.3*sin(x2)", "0.2*x1"]},
                              fields=[{"name": "rotation", "components": ["-x2", "x1"]}])
        bodies = []
        for name in ("first.json", "second.json"):
            out = tmp_path / name
            assert main(["verify", "--config", config, "--out", str(out)]) in (EXIT_OK, EXIT_FAILED)
            report = _report(out)
            assert "seconds" in report.pop("timing")
            bodies.append(json.dumps(report, sort_keys=True))
        assert bodies[0] == bodies[1]

    def test_failed_axioms_exit_one(self, write_config, tmp_path):
        config = write_config({"kind": "expression", "dimension": 2, "text": "(y1^2 + y2^2)^2"})
        out = tmp_path / "report.json"
        assert main(["verify", "--config", config, "--out", str(out)]) == EXIT_FAILED
        failed = {check["name"] for check in _report(out)["checks"] if not check["passed"]}
        assert "structure/homogeneity" in failed


class TestExitCodes:

    def test_dimension_out_of_range(self, write_config):
        config = write_config({"kind": "euclidean", "dimension": 1})
        assert main(["verify", "--config", config]) == EXIT_CONFIG

    def test_singular_lift(self, write_config):
        config = write_config({"kind": "euclidean", "dimension": 2},
                              lift={"alpha": 1.0, "beta": 1.0, "gamma": 1.0}, fields=EUCLIDEAN_FIELDS)
        assert main(["classify", "--config", config]) == EXIT_CONFIG

    def test_syntax_error_in_structure(self, write_config):
        config = write_config({"kind": "expression", "dimension": 2, "text": "sqrt(y1^2 +"})
        assert main(["verify", "--config", config]) == EXIT_CONFIG

    def test_randers_norm_too_large(self, write_config):
        config = write_config({"kind": "randers", "dimension": 2, "b": ["1.2", "0"]})
        assert main(["verify", "--config", config]) == EXIT_CONFIG

    def test_missing_config(self, tmp_path):
        assert main(["verify", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG

    def test_classify_requires_fields(self, write_config):
        config = write_config({"kind": "euclidean", "dimension": 2})
        assert main(["classify", "--config", config]) == EXIT_CONFIG

    def test_point_outside_domain(self, write_config):
        config = write_config({"kind": "kropina", "dimension": 2, "b": ["1", "0"]})
        assert main(["tensors", "--config", config, "--x", "0,0", "--y", "-1,0.5"]) == EXIT_DOMAIN

    def test_point_dimension_mismatch(self, write_config):
        config = write_config({"kind": "euclidean", "dimension": 2})
        assert main(["tensors", "--config", config, "--x", "0,0,0", "--y", "1,0,0"]) == EXIT_CONFIG

    def test_bad_coordinates(self, write_config):
        config = write_config({"kind": "euclidean", "dimension": 2})
        with pytest.raises(SystemExit):
            main(["tensors", "--config", config, "--x", "a,b", "--y", "1,0"])


class TestClassify:

    def test_euclidean_verdicts(self, write_config, tmp_path):
        config = write_config({"kind": "euclidean", "dimension": 2}, fields=EUCLIDEAN_FIELDS,
                              lift={"alpha": 2.0, "beta": 1.0, "gamma": 1.0})
        out = tmp_path / "classify.json"
        assert main(["classify", "--config", config, "--out", str(out)]) == EXIT_OK
        entries = {entry["field"]: entry for entry in _report(out)["classification"]}
        assert entries["translation"]["verdict"] == "killing"
        assert entries["rotation"]["verdict"] == "killing"
        assert entries["dilation"]["verdict"] == "homothetic"
        assert entries["dilation"]["omega_mean"] == pytest.approx(1.0)
        assert entries["z_squared"]["verdict"] == "not_conformal"
        assert entries["z_squared"]["base_verdict"] == "conformal_nonhomothetic"


class TestTensors:

    def test_euclidean_snapshot_on_stdout(self, write_config, capsys):
        config = write_config({"kind": "euclidean", "dimension": 2})
        assert main(["tensors", "--config", config, "--x", "0,0", "--y", "3,4"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        tensors = report["tensors"]
        assert tensors["F"] == pytest.approx(5.0)
        assert tensors["g"] == [[1.0, 0.0], [0.0, 1.0]]
        assert tensors["lift_class"] == "riemannian"
        assert tensors["sample"] == {"x": [0.0, 0.0], "y": [3.0, 4.0]}
        for name in ("C", "G", "N", "F_h", "R_k"):
            assert name in tensors

    def test_negative_coordinates(self, write_config, tmp_path):
        config = write_config({"kind": "euclidean", "dimension": 2})
        out = tmp_path / "negative.json"
        assert main(["tensors", "--config", config, "--x", "-1,0.5", "--y", "-3,-4", "--out", str(out)]) == EXIT_OK
        tensors = _report(out)["tensors"]
        assert tensors["sample"] == {"x": [-1.0, 0.5], "y": [-3.0, -4.0]}
        assert tensors["F"] == pytest.approx(5.0)

    def test_negative_coordinates_with_equals(self, write_config, tmp_path):
        config = write_config({"kind": "euclidean", "dimension": 2})
        out = tmp_path / "equals.json"
        assert main(["tensors", "--config", config, "--x=-1,0", "--y=0,-2", "--out", str(out)]) == EXIT_OK
        assert _report(out)["tensors"]["F"] == pytest.approx(2.0)

    def test_randers_snapshot_both_modes(self, write_config, tmp_path):
        config = write_config({"kind": "randers", "dimension": 2, "b": ["0.5", "0"]})
        snapshots = {}
        for mode in ("jet", "fd"):
            out = tmp_path / f"{mode}.json"
            assert main(["tensors", "--config", config, "--x", "0,0", "--y", "1,0",
                         "--mode", mode, "--out", str(out)]) == EXIT_OK
            snapshots[mode] = _report(out)["tensors"]
        assert snapshots["jet"]["F"] == pytest.approx(1.5)
        assert snapshots["jet"]["g"][0][0] == pytest.approx(2.25)
        assert snapshots["fd"]["g"][0][0] == pytest.approx(2.25, abs=1e-5)


@pytest.mark.parametrize("name", ["euclidean2", "euclidean3", "riemannian_polar", "randers",
                                  "randers_constant", "complete_lift"])
def test_shipped_configs_have_no_conformal_nonhomothetic_lift(name):
    config = RunConfig.from_file(str(CONFIGS / f"{name}.json"))
    report = cmd_classify(config, AppConfig.from_env())
    verdicts = [entry["verdict"] for entry in report.classification]
    assert len(verdicts) == len(config.fields)
    assert "conformal_nonhomothetic" not in verdicts
    stability = [check for check in report.checks if check.name.startswith("stability/")]
    assert len(stability) == len(config.fields)
    assert all(check.passed for check in stability)


class TestReport:

    def test_check_record_passes_by_tolerance(self):
        assert CheckRecord("a", "anchor", 1e-9, 1e-6).passed
        assert not CheckRecord("b", "anchor", 1e-3, 1e-6).passed
        assert not CheckRecord("c", "anchor", float("nan"), 1e-6).passed

    def test_body_is_normalized_and_sorted(self):
        report = Report(command={"name": "tensors"}, tensors={"g": np.eye(2), "F": np.float64(1.0 + 1e-15)})
        report.add(CheckRecord("z", "anchor", 0.0, 1e-6))
        report.seconds = 1.23456
        body = json.loads(report.body_json())
        assert "timing" not in body
        assert body["tensors"] == {"F": 1.0, "g": [[1.0, 0.0], [0.0, 1.0]]}
        assert list(json.loads(report.to_json())) == sorted(body) + ["timing"]
        text = report.body_json()
        assert text.index('"checks"') < text.index('"command"') < text.index('"summary"')
