"""Test L2 errors, convergence rates and the study driver."""

from unittest.mock import patch

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dgsem_amr.cases import setup_case
from dgsem_amr.exceptions import ConfigurationError
from dgsem_amr.schemas.run_config import FluxMode, RunConfig
from dgsem_amr.services.convergence import (
    compute_l2_error,
    convergence_rates,
    run_convergence_study,
)
from dgsem_amr.services.simulation_service import SimulationResult


class TestComputeL2Error:
    """Test compute_l2_error function."""

    def test_exact_data_has_zero_error(self, gas):
        cfg = RunConfig.for_case("vortex", nx=2, ny=2, degree=2)
        case, mesh, U = setup_case(cfg, gas)
        errors = compute_l2_error(mesh, U, case.exact, 0.0, mesh.ops)
        assert errors.shape == (4,)
        assert_allclose(errors, 0.0, atol=1e-14)

    def test_constant_offset(self, gas):
        """An offset c gives error c * sqrt(area)."""
        cfg = RunConfig.for_case("vortex", nx=2, ny=2, degree=2)
        case, mesh, U = setup_case(cfg, gas)
        errors = compute_l2_error(mesh, U + 0.01, case.exact, 0.0, mesh.ops)
        assert_allclose(errors, 0.01 * 20.0, rtol=1e-9)

    def test_missing_exact_solution(self, unit_square_mesh, random_states):
        U = random_states(4, 3, 3)
        with pytest.raises(ConfigurationError):
            compute_l2_error(unit_square_mesh, U, None, 0.0, unit_square_mesh.ops)


class TestConvergenceRates:
    """Test convergence_rates function."""

    def test_halving_errors(self):
        errors = [np.full(4, 1.0), np.full(4, 0.125), np.full(4, 0.015625)]
        rates = convergence_rates(errors)
        assert rates[0] is None
        assert rates[1] == pytest.approx([3.0] * 4)
        assert rates[2] == pytest.approx([3.0] * 4)

    def test_zero_error_has_no_rate(self):
        rates = convergence_rates([np.array([1.0, 0.0]), np.array([0.5, 0.0])])
        assert rates[1] == [pytest.approx(1.0), None]


class TestRunConvergenceStudy:
    """Test run_convergence_study function."""

    def test_requires_vortex(self):
        with pytest.raises(ConfigurationError):
            run_convergence_study(RunConfig.for_case("jet"), [0], [1], [FluxMode.ES])

    def test_rows_per_mode_degree_and_level(self, gas):
        """Each level runs with its own fixed step and uniform refinement."""
        base = RunConfig.for_case("vortex", nx=2, ny=2)
        seen = []

        def fake_run(cfg, settings=None, write=True):
            seen.append((cfg.degree, cfg.flux, cfg.uniform_levels, cfg.step.fixed_dt))
            case, mesh, U = setup_case(cfg.model_copy(update={"degree": 1}), gas)
            scale = 0.5**cfg.uniform_levels
            return SimulationResult(
                case=case, mesh=mesh, ops=mesh.ops, U=U + scale, t=0.0, steps=0
            )

        with patch(
            "dgsem_amr.services.convergence.run_simulation", side_effect=fake_run
        ):
            rows = run_convergence_study(base, [0, 1], [1], [FluxMode.ES])

        assert [s[2] for s in seen] == [0, 1]
        assert seen[1][3] == pytest.approx(0.2 / 40)
        assert [r.level for r in rows] == [0, 1]
        assert rows[0].rates is None
        assert rows[1].rates == pytest.approx([1.0] * 4)
        assert rows[1].n_elements == 4 * rows[0].n_elements
        assert rows[0].flux == "es"
