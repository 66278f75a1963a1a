"""Tests for scenarios module."""

import json

import pytest

from calibration_workbench import scenarios
from calibration_workbench.config import Config
from calibration_workbench.deformation_solver import DeformationError
from calibration_workbench.scenarios import (
    PROVENANCES,
    SCENARIOS,
    Scenario,
    ScenarioError,
    ScenarioReport,
    at_least,
    at_most,
    close,
    equal,
    observed,
    run,
    run_all,
    scenario_names,
    write_report,
)


@pytest.fixture
def config():
    return Config(seed=11, restarts=2, samples=2, covectors=3, sample_planes=50)


class TestMeasurements:
    """Tests for the measurement helpers."""

    def test_close(self):
        """Test the tolerance window of close."""
        assert close("x", 1.0 + 1e-9, 1.0, 1e-8).passed
        assert not close("x", 1.1, 1.0, 1e-8).passed
        assert close("x", 1.0, 1.0, 1e-8).provenance == "derived"

    def test_bounds(self):
        """Test at_most and at_least."""
        assert at_most("x", 0.5, 1.0).passed
        assert not at_most("x", 1.5, 1.0).passed
        assert at_least("x", 3, 3).passed
        assert not at_least("x", 2, 3).passed

    def test_equal_and_observed(self):
        """Test exact comparison and unconditional recording."""
        assert equal("x", 4, 4, "paper").passed
        assert not equal("x", True, False).passed
        measurement = observed("x", 7)
        assert measurement.passed
        assert measurement.expected is None

    def test_as_dict(self):
        """Test the measurement record."""
        record = close("comass", 1.0, 1.0, 1e-8, "paper").as_dict()
        assert record == {'name': "comass", 'value': 1.0, 'expected': 1.0, 'tolerance': 1e-8,
                          'provenance': "paper", 'passed': True}


class TestReport:
    """Tests for ScenarioReport."""

    def test_passed_and_failures(self):
        """Test that one failed measurement fails the report."""
        report = ScenarioReport("demo", 0, [at_most("a", 0.0, 1.0), at_most("b", 2.0, 1.0)])
        assert not report.passed
        assert [m.name for m in report.failures] == ["b"]

    def test_error_fails_report(self):
        """Test that an error fails the report even without measurements."""
        assert not ScenarioReport("demo", 0, error="DeformationError: boom").passed
        assert ScenarioReport("demo", 0).passed

    def test_record_excludes_wall_time(self):
        """Test that the JSON line carries no timing."""
        report = ScenarioReport("demo", 3, [equal("a", 1, 1)], wall_time=12.5)
        record = json.loads(report.to_line())
        assert 'wall_time' not in record
        assert record['seed'] == 3
        assert record['passed'] is True


class TestRegistry:
    """Tests for the scenario registry."""

    def test_names_sorted(self):
        """Test that names are listed in id order."""
        names = scenario_names()
        assert names == sorted(names)
        assert len(names) == 15
        assert "energy" in names and "moduli-sas" in names

    def test_descriptions(self):
        """Test that every scenario is described."""
        assert all(s.description for s in SCENARIOS.values())

    def test_unknown_scenario(self, config):
        """Test that unknown names list the registry."""
        with pytest.raises(ScenarioError, match="Unknown scenario 'nope'. Available: algebraic-identities"):
            run("nope", config)

    def test_run_all_unknown(self, config):
        """Test that run_all validates every name before running."""
        with pytest.raises(ScenarioError, match="'nope'"):
            run_all(config, ["energy", "nope"], show_progress=False)


class TestRun:
    """Tests for running scenarios."""

    @pytest.mark.parametrize("name", ["algebraic-identities", "energy", "calibration-criteria"])
    def test_scenario_passes(self, name, config):
        """Test that cheap scenarios pass with valid provenances."""
        report = run(name, config)
        assert report.error is None
        assert report.passed, [m.as_dict() for m in report.failures]
        assert report.measurements
        assert all(m.provenance in PROVENANCES for m in report.measurements)
        assert report.wall_time >= 0

    def test_runs_repeat(self, config):
        """Test that a fixed seed reproduces the record exactly."""
        assert run("energy", config).as_record() == run("energy", config).as_record()

    def test_library_error_becomes_failure(self, config, mocker):
        """Test that library errors end the scenario as a failed report."""
        def broken(config, rng):
            raise DeformationError("boom")

        mocker.patch.dict(SCENARIOS, {"broken": Scenario("broken", "Always fails", broken)})
        report = run("broken", config)
        assert not report.passed
        assert report.error == "DeformationError: boom"

    def test_other_errors_propagate(self, config, mocker):
        """Test that programming errors are not swallowed."""
        def broken(config, rng):
            raise ValueError("bug")

        mocker.patch.dict(SCENARIOS, {"broken": Scenario("broken", "Always fails", broken)})
        with pytest.raises(ValueError, match="bug"):
            run("broken", config)

    def test_comass_reports_keep_the_seed(self, config, mocker):
        """Test that comass runs inside a scenario record the configured seed."""
        spy = mocker.spy(scenarios, 'comass')
        run("comass-g2", config)
        assert spy.call_count == 1
        assert spy.call_args.kwargs['seed'] == config.seed
        assert spy.spy_return.seed == config.seed

    def test_run_all_order(self, config):
        """Test that run_all reports in id order."""
        reports = run_all(config, ["energy", "algebraic-identities"], show_progress=False)
        assert [r.scenario for r in reports] == ["algebraic-identities", "energy"]


class TestWriteReport:
    """Tests for write_report function."""

    def test_one_line_per_report(self, tmp_path):
        """Test that each report becomes one JSON line and parents are created."""
        path = tmp_path / "out" / "report.jsonl"
        reports = [ScenarioReport("a", 1, [equal("x", 1, 1)]), ScenarioReport("b", 1, error="FormError: bad")]
        write_report(reports, path)
        lines = path.read_text(encoding='utf-8').splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])['scenario'] == "a"
        assert json.loads(lines[1])['passed'] is False
