"""Design rules and large-system constants."""

import math

import pytest

from probelb.core.analytic import scheduler_delay
from probelb.core.design import (
    asymptotic_r_star,
    asymptotic_report,
    cutoff_diagnostic,
    cutoff_prop3,
    cutoff_sequence,
    cutoff_star,
    efficiency_floor,
    lower_bound_r_down,
    nfs_zero_derivative,
    prop3_limit,
    sigma_star,
    testing_time_for_tau,
)
from probelb.core.verification import nfs_scenarios
from probelb.errors import ConfigurationError
from probelb.models.config import SystemConfig


def _heavy_tail(n_servers: int, rho: float, x_M: float = 1e4) -> SystemConfig:
    return SystemConfig(
        n_servers=n_servers,
        rho=rho,
        dist={"pareto": {"alpha": 1.0, "beta": 0.5, "x_m": 1.0, "x_M": x_M}},
        profile={"family": "no_false_small", "a": 3.0},
    )


def test_r_star_anchors(pk_example: SystemConfig, ic_example: SystemConfig) -> None:
    assert asymptotic_r_star(ic_example) == pytest.approx(0.672840, abs=1e-6)
    assert asymptotic_r_star(pk_example) == pytest.approx(0.222839, abs=1e-6)
    assert lower_bound_r_down(pk_example) == pytest.approx(asymptotic_r_star(pk_example))


def test_r_star_lies_between_bounds(es_example: SystemConfig) -> None:
    for sigma in (0.0, 0.5, 2.0):
        r_star = asymptotic_r_star(es_example, sigma)
        assert lower_bound_r_down(es_example) <= r_star <= asymptotic_r_star(es_example.with_profile(family="independent_constant"))


def test_cutoff_star(pk_example: SystemConfig, ic_example: SystemConfig) -> None:
    assert cutoff_star(pk_example, 0.0) == pytest.approx(0.473684, abs=1e-6)
    assert cutoff_star(ic_example, 0.0) == pytest.approx(0.9)


def test_cutoff_simplification_is_exact(es_example: SystemConfig) -> None:
    diagnostic = cutoff_diagnostic(es_example, 0.3)
    assert diagnostic.discrepancy < 1e-12
    assert diagnostic.gamma_m + diagnostic.gamma_M == pytest.approx(1.0)


def test_cutoff_sequence(pk_example: SystemConfig) -> None:
    assert cutoff_sequence(pk_example, 0.0) == 1
    assert cutoff_sequence(pk_example, 0.0, n_servers=1000) == 473
    assert cutoff_sequence(pk_example.with_profile(family="independent_constant"), 0.0, n_servers=10) == 9
    with pytest.raises(ConfigurationError):
        cutoff_sequence(pk_example, 0.0, n_servers=1)


def test_testing_time_for_tau() -> None:
    assert testing_time_for_tau(0.1, 100, 1.0) == pytest.approx(0.05)
    assert testing_time_for_tau(0.1, 100, 0.0) == 0.0
    sigma = testing_time_for_tau(0.1, 400, 2.0)
    assert scheduler_delay(0.1 * 400, sigma) == pytest.approx(2.0 / 20.0)
    with pytest.raises(ConfigurationError):
        testing_time_for_tau(0.1, 100, -1.0)


def test_sigma_star_spends_a_fraction_of_r_down(pk_example: SystemConfig) -> None:
    sigma = sigma_star(pk_example, 10.0)
    assert scheduler_delay(pk_example.total_arrival_rate, sigma) == pytest.approx(lower_bound_r_down(pk_example) / 10.0)
    with pytest.raises(ConfigurationError):
        sigma_star(pk_example, 0.0)


def test_efficiency_floor(pk_example: SystemConfig) -> None:
    assert efficiency_floor(pk_example.dist) == pytest.approx(0.331193, abs=1e-6)


def test_nfs_derivative_anchor() -> None:
    result = nfs_zero_derivative(nfs_scenarios()[0])
    assert result.derivative == pytest.approx(0.38583, abs=1e-5)
    assert result.condition_value == pytest.approx(0.44141, abs=1e-5)
    assert not result.condition_holds


def test_nfs_derivative_needs_nfs_profile(pk_example: SystemConfig) -> None:
    with pytest.raises(ConfigurationError, match="no_false_small"):
        nfs_zero_derivative(pk_example)


@pytest.mark.parametrize(
    "rho,expected,regime",
    [(0.19, 1.799301, "supercritical"), (0.8, 0.208333, "subcritical")],
)
def test_heavy_tail_limits(rho: float, expected: float, regime: str) -> None:
    limit = prop3_limit(_heavy_tail(3, rho), 10.0)
    assert limit.regime == regime
    assert limit.value == pytest.approx(expected, abs=1e-6)


def test_heavy_tail_limit_at_the_boundary() -> None:
    limit = prop3_limit(_heavy_tail(10, 0.9), 10.0)
    assert limit.regime == "boundary"
    assert math.isnan(limit.value)


def test_heavy_tail_theta_range(pk_example: SystemConfig) -> None:
    with pytest.raises(ConfigurationError, match="theta"):
        prop3_limit(_heavy_tail(3, 0.8), 10.0, theta=0.5)
    with pytest.raises(ConfigurationError, match="alpha, beta"):
        cutoff_prop3(pk_example, 0.1, 0.25)


def test_heavy_tail_cutoff_keeps_one_short_server() -> None:
    cfg = _heavy_tail(100, 0.8, x_M=1e5)
    assert cutoff_prop3(cfg, sigma_star(cfg, 10.0), 0.25) == pytest.approx(1.0)


def test_report(pk_example: SystemConfig) -> None:
    report = asymptotic_report(pk_example)
    assert report.r_star == pytest.approx(report.r_down)
    assert report.pooled == pytest.approx(0.672840, abs=1e-6)
    assert report.nfs_derivative is None
    assert report.prop3_limit is None

    heavy = asymptotic_report(_heavy_tail(100, 0.8), 10.0)
    assert heavy.nfs_condition_holds is not None
    assert heavy.prop3_regime == "supercritical"
    assert heavy.prop3_limit == pytest.approx(0.1 + 20.0 / 19.0)
