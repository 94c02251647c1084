"""Test run configuration schemas."""

import pytest
from pydantic import ValidationError

from dgsem_amr.schemas.run_config import (
    AmrConfig,
    CaseName,
    FluxMode,
    OEConfig,
    RunConfig,
    StepConfig,
    vortex_time_step,
)


class TestOEConfig:
    """Test OEConfig validation."""

    def test_defaults(self):
        oe = OEConfig()
        assert oe.enabled is True
        assert oe.s == 0.2
        assert oe.c_oe == 0.1

    @pytest.mark.parametrize("s", [0.0, -0.1, 1.5])
    def test_s_out_of_range(self, s):
        with pytest.raises(ValidationError, match="scaling parameter"):
            OEConfig(s=s)

    def test_s_upper_bound_inclusive(self):
        assert OEConfig(s=1.0).s == 1.0

    def test_c_oe_positive(self):
        with pytest.raises(ValidationError):
            OEConfig(c_oe=0.0)

    def test_extra_keys_forbidden(self):
        with pytest.raises(ValidationError):
            OEConfig(strength=1.0)


class TestAmrConfig:
    """Test AmrConfig validation."""

    def test_active_needs_levels(self):
        """Adaptation with max_level 0 cannot change the mesh."""
        assert AmrConfig(max_level=0).active is False
        assert AmrConfig(max_level=2).active is True
        assert AmrConfig(enabled=False, max_level=2).active is False

    def test_threshold_order(self):
        with pytest.raises(ValidationError, match="c_ref >= c_crs"):
            AmrConfig(c_ref=0.05, c_crs=0.1)

    def test_equal_thresholds_allowed(self):
        amr = AmrConfig(c_ref=0.2, c_crs=0.2)
        assert amr.c_ref == amr.c_crs

    @pytest.mark.parametrize(
        "kwargs",
        [{"c_ref": 0.0}, {"max_level": -1}, {"max_level": 9}, {"interval": 0}],
    )
    def test_invalid_values(self, kwargs):
        with pytest.raises(ValidationError):
            AmrConfig(**kwargs)


class TestStepConfig:
    """Test StepConfig validation."""

    def test_defaults(self):
        step = StepConfig()
        assert step.cfl == 0.8
        assert step.pp_check is True
        assert step.pp_limit is False
        assert step.fixed_dt is None

    @pytest.mark.parametrize("kwargs", [{"cfl": 0.0}, {"fixed_dt": -1e-3}])
    def test_invalid_values(self, kwargs):
        with pytest.raises(ValidationError):
            StepConfig(**kwargs)


class TestRunConfig:
    """Test RunConfig validation and case defaults."""

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"degree": 0},
            {"degree": 9},
            {"nx": 0},
            {"uniform_levels": -1},
            {"final_time": -0.1},
            {"gamma": 1.0},
            {"max_steps": -1},
            {"snapshot_interval": -2},
        ],
    )
    def test_invalid_values(self, kwargs):
        with pytest.raises(ValidationError):
            RunConfig(**kwargs)

    def test_enum_coercion(self):
        cfg = RunConfig(case="jet", flux="es")
        assert cfg.case is CaseName.JET
        assert cfg.flux is FluxMode.ES

    def test_vortex_defaults(self):
        """Vortex runs unlimited on a fixed mesh with the scheduled step."""
        cfg = RunConfig.for_case("vortex")
        assert (cfg.nx, cfg.ny) == (10, 10)
        assert cfg.limiter_enabled is False
        assert cfg.oe.enabled is False
        assert cfg.amr.active is False
        assert cfg.step.fixed_dt == pytest.approx(0.01)

    def test_vortex_step_follows_level(self):
        cfg = RunConfig.for_case("vortex", uniform_levels=2)
        assert cfg.step.fixed_dt == pytest.approx(0.2 / 80)
        assert vortex_time_step(3) == pytest.approx(0.2 / 160)

    def test_vortex_explicit_step_kept(self):
        cfg = RunConfig.for_case("vortex", step={"fixed_dt": 1e-3})
        assert cfg.step.fixed_dt == 1e-3

    @pytest.mark.parametrize("degree,threshold", [(1, 0.2), (2, 0.05)])
    def test_dmr_thresholds_follow_degree(self, degree, threshold):
        cfg = RunConfig.for_case("dmr", degree=degree)
        assert cfg.amr.c_ref == threshold
        assert cfg.amr.c_crs == threshold
        assert cfg.amr.max_level == 3

    def test_dmr_explicit_threshold_kept(self):
        cfg = RunConfig.for_case("dmr", degree=1, amr={"c_ref": 0.5})
        assert cfg.amr.c_ref == 0.5
        assert cfg.amr.c_crs == 0.2

    def test_jet_defaults(self):
        cfg = RunConfig.for_case(CaseName.JET)
        assert (cfg.nx, cfg.ny) == (38, 75)
        assert cfg.final_time == 0.001
        assert cfg.amr.max_level == 2
        assert cfg.step.fixed_dt is None
        assert cfg.step.pp_limit is True

    def test_positivity_clip_only_for_jet(self):
        """Only the jet steps under the positivity bound by default."""
        assert RunConfig.for_case("dmr").step.pp_limit is False
        assert RunConfig.for_case("vortex").step.pp_limit is False
        jet = RunConfig.for_case("jet", step={"cfl": 0.4})
        assert jet.step.pp_limit is True
        assert jet.step.cfl == 0.4

    def test_nested_overrides_merge(self):
        """Nested overrides update single keys of the case defaults."""
        cfg = RunConfig.for_case("jet", amr={"interval": 5}, oe={"s": 0.5})
        assert cfg.amr.interval == 5
        assert cfg.amr.max_level == 2
        assert cfg.oe.s == 0.5
        assert cfg.oe.enabled is True

    def test_unknown_case(self):
        with pytest.raises(ValueError):
            RunConfig.for_case("sod")

    def test_extra_keys_forbidden(self):
        with pytest.raises(ValidationError):
            RunConfig.for_case("jet", resolution=3)
