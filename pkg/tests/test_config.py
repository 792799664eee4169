"""System and experiment configuration models."""

import pytest
from pydantic import ValidationError

from probelb.models.config import CostFunction, ExperimentConfig, SimulationSpec, SystemConfig
from probelb.models.profile import ProfileFamily

DIST = {"x_m": 1.0, "x_M": 10.0, "p_small": 0.9}


def test_rho_is_converted_to_lambda() -> None:
    cfg = SystemConfig(n_servers=10, rho=0.8, dist=DIST)
    assert cfg.lambda_per_server == pytest.approx(0.8 / 1.9)
    assert cfg.rho == pytest.approx(0.8)
    assert cfg.total_arrival_rate == pytest.approx(8.0 / 1.9)


def test_profile_defaults_to_independent_constant() -> None:
    cfg = SystemConfig(n_servers=3, lambda_per_server=0.1, dist=DIST)
    assert cfg.profile.family == ProfileFamily.INDEPENDENT_CONSTANT
    assert cfg.cost_fn.kind == "identity"


def test_rho_and_lambda_are_exclusive() -> None:
    with pytest.raises(ValidationError, match="either rho or lambda"):
        SystemConfig(n_servers=3, rho=0.5, lambda_per_server=0.1, dist=DIST)


def test_unstable_load_is_rejected() -> None:
    with pytest.raises(ValidationError, match="unstable system"):
        SystemConfig(n_servers=3, lambda_per_server=0.6, dist=DIST)


def test_single_server_is_rejected() -> None:
    with pytest.raises(ValidationError):
        SystemConfig(n_servers=1, lambda_per_server=0.1, dist=DIST)


def test_pareto_form() -> None:
    cfg = SystemConfig(n_servers=100, rho=0.8, dist={"pareto": {"alpha": 1.0, "beta": 0.5, "x_m": 1.0, "x_M": 1e4}})
    assert cfg.dist.p_small == pytest.approx(0.99)
    assert cfg.dist.beta == 0.5


def test_with_helpers_keep_other_fields(es_example: SystemConfig) -> None:
    larger = es_example.with_servers(50)
    assert larger.n_servers == 50
    assert larger.lambda_per_server == es_example.lambda_per_server
    assert larger.profile == es_example.profile

    assert es_example.with_rho(0.5).rho == pytest.approx(0.5)
    nfs = es_example.with_profile(family=ProfileFamily.NO_FALSE_SMALL, a=2.0)
    assert nfs.profile.family == ProfileFamily.NO_FALSE_SMALL
    assert nfs.profile.pmm0 == pytest.approx(0.45)


def test_json_dict_rebuilds_the_same_system(es_example: SystemConfig) -> None:
    assert SystemConfig(**es_example.to_json_dict()) == es_example


def test_cost_function() -> None:
    assert CostFunction()(2.0) == 2.0
    scaled = CostFunction(kind="scaled", kappa=5.0)
    assert scaled(2.0) == 10.0
    assert scaled.derivative_at_zero() == 5.0
    with pytest.raises(ValidationError):
        CostFunction(kind="scaled", kappa=0.0)


def test_simulation_spec_warmup() -> None:
    assert SimulationSpec(jobs=1000).effective_warmup == 100
    with pytest.raises(ValidationError, match="must exceed warmup"):
        SimulationSpec(jobs=100, warmup=100)


def test_experiment_accepts_bare_system() -> None:
    experiment = ExperimentConfig(**{"n_servers": 3, "lambda_per_server": 0.1, "dist": DIST})
    assert experiment.system.n_servers == 3
    assert experiment.sweep.points == 400
    assert experiment.sigma_max() == pytest.approx(0.99 / 0.3)
    assert experiment.theta() is None


def test_theta_defaults_to_half_beta() -> None:
    experiment = ExperimentConfig(
        system={"n_servers": 100, "rho": 0.8, "dist": {"pareto": {"alpha": 1.0, "beta": 0.5, "x_m": 1.0, "x_M": 1e4}}}
    )
    assert experiment.theta() == pytest.approx(0.25)
    assert experiment.validate_config() == []


def test_validate_config_reports_problems() -> None:
    experiment = ExperimentConfig(
        system={"n_servers": 3, "lambda_per_server": 0.1, "dist": DIST},
        sweep={"max": 5.0},
        design={"theta": 0.3},
    )
    errors = experiment.validate_config()
    assert any("scheduler limit" in e for e in errors)
    assert any("no tail exponent" in e for e in errors)
