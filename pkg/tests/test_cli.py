"""Tests for cli module."""

import json

import pytest
import yaml
from click.testing import CliRunner

from calibration_workbench.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, build_config, main
from calibration_workbench.config import Config, ConfigError
from calibration_workbench.scenarios import SCENARIOS, ScenarioReport, at_most


@pytest.fixture
def runner():
    return CliRunner()


def _report(name, passed=True):
    value = 0.0 if passed else 2.0
    return ScenarioReport(name, 42, [at_most("residual", value, 1.0)], wall_time=0.1)


class TestBuildConfig:
    """Tests for build_config function."""

    def test_defaults(self):
        """Test that no file and no flags give defaults."""
        config = build_config(None, seed=None, tol=None)
        assert config.seed == Config.DEFAULT_SEED

    def test_flags_override_file(self, tmp_path):
        """Test that flags win over file values."""
        config_file = tmp_path / "config.yaml"
        config_file.write_text("seed: 5\nrestarts: 3\n")
        config = build_config(str(config_file), seed=9, restarts=None)
        assert config.seed == 9
        assert config.restarts == 3

    def test_invalid_file(self, tmp_path):
        """Test that file errors surface as ConfigError."""
        with pytest.raises(ConfigError):
            build_config(str(tmp_path / "missing.yaml"))


class TestRunCommand:
    """Tests for the run command."""

    def test_passing_scenario(self, runner, mocker):
        """Test that a passing scenario exits with 0 and prints the summary."""
        mock_run = mocker.patch('calibration_workbench.cli.run', return_value=_report("energy"))
        result = runner.invoke(main, ['run', 'energy', '--seed', '7'])
        assert result.exit_code == EXIT_PASS
        assert "Summary" in result.output
        assert mock_run.call_args[0][0] == "energy"
        assert mock_run.call_args[0][1].seed == 7

    def test_failing_scenario(self, runner, mocker):
        """Test that a failed measurement exits with 1 and is listed."""
        mocker.patch('calibration_workbench.cli.run', return_value=_report("energy", passed=False))
        result = runner.invoke(main, ['run', 'energy'])
        assert result.exit_code == EXIT_FAIL
        assert "residual" in result.output

    def test_error_report(self, runner, mocker):
        """Test that a scenario error is printed and fails the run."""
        report = ScenarioReport("energy", 42, error="EnergyError: degenerate")
        mocker.patch('calibration_workbench.cli.run', return_value=report)
        result = runner.invoke(main, ['run', 'energy'])
        assert result.exit_code == EXIT_FAIL
        assert "EnergyError: degenerate" in result.output

    def test_unknown_scenario(self, runner):
        """Test that an unknown scenario is a configuration error."""
        result = runner.invoke(main, ['run', 'nope'])
        assert result.exit_code == EXIT_CONFIG
        assert "Unknown scenario 'nope'" in result.output

    def test_invalid_flag_value(self, runner, mocker):
        """Test that invalid values exit with 2 before anything runs."""
        mock_run = mocker.patch('calibration_workbench.cli.run')
        result = runner.invoke(main, ['run', 'energy', '--restarts', '0'])
        assert result.exit_code == EXIT_CONFIG
        assert "Configuration error" in result.output
        mock_run.assert_not_called()

    def test_missing_config_file(self, runner, tmp_path):
        """Test that a missing config file exits with 2."""
        result = runner.invoke(main, ['run', 'energy', '--config', str(tmp_path / "missing.yaml")])
        assert result.exit_code == EXIT_CONFIG
        assert "Config file not found" in result.output

    def test_report_written(self, runner, mocker, tmp_path):
        """Test that --report writes one JSON line per scenario."""
        mocker.patch('calibration_workbench.cli.run', return_value=_report("energy"))
        path = tmp_path / "reports" / "run.jsonl"
        result = runner.invoke(main, ['run', 'energy', '--report', str(path)])
        assert result.exit_code == EXIT_PASS
        record = json.loads(path.read_text().strip())
        assert record['scenario'] == "energy"
        assert 'wall_time' not in record


class TestRunAllCommand:
    """Tests for the run-all command."""

    def test_all_pass(self, runner, mocker):
        """Test that run-all exits with 0 when every report passes."""
        reports = [_report("a"), _report("b")]
        mock_run_all = mocker.patch('calibration_workbench.cli.run_all', return_value=reports)
        result = runner.invoke(main, ['run-all', '--workers', '2'])
        assert result.exit_code == EXIT_PASS
        assert mock_run_all.call_args[0][0].workers == 2

    def test_one_failure(self, runner, mocker):
        """Test that a single failure fails the whole run."""
        mocker.patch('calibration_workbench.cli.run_all', return_value=[_report("a"), _report("b", passed=False)])
        result = runner.invoke(main, ['run-all'])
        assert result.exit_code == EXIT_FAIL


class TestListCommand:
    """Tests for the list command."""

    def test_lists_scenarios_and_presets(self, runner):
        """Test that both registries are shown."""
        result = runner.invoke(main, ['list'])
        assert result.exit_code == 0
        assert "Scenarios" in result.output
        assert "Presets" in result.output
        assert "energy" in result.output
        assert "g2_group" in result.output


class TestExportCommands:
    """Tests for export-preset and export-system."""

    def test_export_preset(self, runner):
        """Test that the YAML export parses."""
        result = runner.invoke(main, ['export-preset', 's3'])
        assert result.exit_code == 0
        assert yaml.safe_load(result.output)['name'] == "s3"

    def test_export_unknown_preset(self, runner):
        """Test that unknown presets exit with 2."""
        result = runner.invoke(main, ['export-preset', 'nope'])
        assert result.exit_code == EXIT_CONFIG
        assert "Unknown preset" in result.output

    def test_export_system(self, runner):
        """Test that the associative system of flat R^7 is a 4 x 4 matrix."""
        result = runner.invoke(main, ['export-system', 'flat_r7', 'associative'])
        assert result.exit_code == 0
        rows = result.output.strip().splitlines()
        assert len(rows) == 4
        assert all(len(row.split()) == 4 for row in rows)

    def test_export_system_with_encoding(self, runner):
        """Test the trace encoding of the SAS system."""
        result = runner.invoke(main, ['export-system', 'flat_c3', 'sas', '--encoding', 'trace'])
        assert result.exit_code == 0
        assert len(result.output.strip().splitlines()) == 4

    def test_export_system_missing_sub_frame(self, runner):
        """Test that an undeclared sub-frame exits with 2."""
        result = runner.invoke(main, ['export-system', 's3', 'cayley'])
        assert result.exit_code == EXIT_CONFIG

    def test_export_system_unknown_kind(self, runner):
        """Test that click rejects kinds outside the registry."""
        result = runner.invoke(main, ['export-system', 's3', 'lagrangian'])
        assert result.exit_code == 2
        assert "Invalid value" in result.output


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump({'restarts': 2, 'sample_planes': 200, 'samples': 3, 'covectors': 5}))
    return str(path)


class TestRealScenarios:
    """Tests for the CLI driving registered scenarios end to end."""

    def test_reports_repeat_byte_for_byte(self, runner, mocker, small_config, tmp_path):
        """Test that two seeded run-all invocations write identical reports."""
        kept = {name: SCENARIOS[name] for name in ("algebraic-identities", "ellipticity", "energy")}
        mocker.patch.dict('calibration_workbench.scenarios.SCENARIOS', kept, clear=True)
        paths = [tmp_path / "first.jsonl", tmp_path / "second.jsonl"]
        for path in paths:
            result = runner.invoke(main, ['run-all', '--seed', '1', '--config', small_config,
                                          '--report', str(path)])
            assert result.exit_code == EXIT_PASS, result.output
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert len(paths[0].read_text().splitlines()) == 3

    def test_absurd_tolerance_fails(self, runner, small_config):
        """Test that a tolerance below floating point resolution fails the comass checks."""
        result = runner.invoke(main, ['run', 'comass-suite', '--seed', '1', '--tol', '1e-30',
                                      '--restarts', '1', '--config', small_config])
        assert result.exit_code == EXIT_FAIL
        assert "comass" in result.output
