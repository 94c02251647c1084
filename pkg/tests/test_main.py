"""Test command-line entry point."""

from unittest.mock import Mock, patch

import pytest

from dgsem_amr._version import __version__
from dgsem_amr.config import Settings
from dgsem_amr.exceptions import InadmissibleStateError, PositivityFailureError
from dgsem_amr.main import (
    EXIT_CONFIGURATION_ERROR,
    EXIT_OK,
    EXIT_POSITIVITY_FAILURE,
    EXIT_SOLVER_ERROR,
    STUDY_DEGREES,
    STUDY_LEVELS,
    build_parser,
    cli_overrides,
    main,
)
from dgsem_amr.schemas.run_config import CaseName, FluxMode


@pytest.fixture
def settings(tmp_path):
    test_settings = Settings(output_dir=str(tmp_path))
    with patch("dgsem_amr.main.get_settings", return_value=test_settings):
        yield


@pytest.fixture
def mock_run(settings):
    result = Mock(t=0.2, steps=3, output_files=[])
    result.case.name = "vortex"
    with patch("dgsem_amr.main.run_simulation", return_value=result) as run:
        yield run


class TestParser:
    """Test argument parsing."""

    def test_overrides_skip_unset(self):
        args = build_parser().parse_args(["--flux", "es", "--cfl", "0.4"])
        assert cli_overrides(args) == {"flux": "es", "step.cfl": 0.4}

    def test_all_overrides(self):
        args = build_parser().parse_args(
            ["--case", "jet", "--degree", "2", "--tfinal", "1e-4", "--out", "runs"]
        )
        assert cli_overrides(args) == {
            "case": "jet",
            "degree": 2,
            "final_time": 1e-4,
            "output_dir": "runs",
        }

    def test_unknown_case_rejected(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["--case", "sod"])

    def test_version(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["--version"])
        assert __version__ in capsys.readouterr().out


class TestMain:
    """Test run dispatch and exit codes."""

    def test_successful_run(self, mock_run, capsys):
        assert main(["--case", "dmr", "--degree", "1"]) == EXIT_OK
        cfg = mock_run.call_args[0][0]
        assert cfg.case is CaseName.DMR
        assert cfg.amr.c_ref == 0.2
        assert "Run Configuration Summary:" in capsys.readouterr().out

    def test_config_file_with_cli_override(self, mock_run, tmp_path):
        """Command-line values win over the run file."""
        path = tmp_path / "run.env"
        path.write_text("case=jet\nflux=mortar\ndegree=2\n")
        assert main(["--config", str(path), "--flux", "es"]) == EXIT_OK
        cfg = mock_run.call_args[0][0]
        assert cfg.case is CaseName.JET
        assert cfg.flux is FluxMode.ES
        assert cfg.degree == 2

    def test_missing_config_file(self, mock_run, tmp_path, capsys):
        code = main(["--config", str(tmp_path / "missing.env")])
        assert code == EXIT_CONFIGURATION_ERROR
        err = capsys.readouterr().err
        assert err.startswith("ERROR kind=configuration_error message=")
        mock_run.assert_not_called()

    def test_invalid_value(self, mock_run, capsys):
        """Field validation failures are configuration errors on one line."""
        assert main(["--degree", "12"]) == EXIT_CONFIGURATION_ERROR
        err = capsys.readouterr().err
        assert "kind=configuration_error" in err
        assert len(err.strip().splitlines()) == 1

    def test_cross_field_validation(self, mock_run, tmp_path, capsys):
        path = tmp_path / "run.env"
        path.write_text("case=vortex\nnx=5\n")
        assert main(["--config", str(path)]) == EXIT_CONFIGURATION_ERROR
        assert "even" in capsys.readouterr().err

    def test_positivity_failure(self, mock_run, capsys):
        mock_run.side_effect = PositivityFailureError(
            "cell_average", element=4, min_rho=-1e-3, min_p=0.5
        )
        assert main(["--case", "jet"]) == EXIT_POSITIVITY_FAILURE
        err = capsys.readouterr().err
        assert "ERROR kind=positivity_failure" in err
        assert "POSITIVITY_FAILURE element=4 context=cell_average" in err

    def test_solver_error(self, mock_run, capsys):
        mock_run.side_effect = InadmissibleStateError("negative pressure")
        assert main(["--case", "jet"]) == EXIT_SOLVER_ERROR
        assert "kind=inadmissible_state" in capsys.readouterr().err

    def test_study(self, settings, tmp_path):
        """The study runs the vortex over all levels, degrees and fluxes."""
        rows = [Mock()]
        with patch(
            "dgsem_amr.main.run_convergence_study", return_value=rows
        ) as study, patch("dgsem_amr.main.OutputWriter") as writer:
            assert main(["--study"]) == EXIT_OK
        cfg, levels, degrees, fluxes = study.call_args[0]
        assert cfg.case is CaseName.VORTEX
        assert levels == STUDY_LEVELS
        assert degrees == STUDY_DEGREES
        assert set(fluxes) == {FluxMode.ES, FluxMode.MORTAR}
        writer.assert_called_once_with(str(tmp_path))
        writer.return_value.write_convergence_table.assert_called_once_with(rows)
