import math

import numpy as np
import pytest

from probelb.core import optimize as optimize_module
from probelb.core.analytic import DispatchRule, servers_waiting_integer, stability_frontiers, total_cost
from probelb.core.design import efficiency_floor
from probelb.core.optimize import (
    efficiency,
    efficiency_curve,
    grid_min_cost_over_cutoff,
    min_cost_curve,
    min_cost_over_cutoff,
    min_cost_over_integer_cutoff,
    min_efficiency_over_sigma,
    sigma_grid,
)
from probelb.errors import ConfigurationError, UnstableSystemError
from probelb.models.config import SystemConfig


def test_sigma_grid_shapes() -> None:
    linear = sigma_grid(2.0, 5, "linear")
    np.testing.assert_allclose(linear, [0.0, 0.5, 1.0, 1.5, 2.0])

    geometric = sigma_grid(1.0, 4, "geometric")
    assert geometric[0] == 0.0
    assert geometric[1] == pytest.approx(1e-6)
    assert geometric[-1] == pytest.approx(1.0)

    hybrid = sigma_grid(1.0, 100)
    assert hybrid[0] == 0.0
    assert hybrid[-1] == pytest.approx(1.0)
    assert np.all(np.diff(hybrid) > 0.0)
    assert hybrid[1] < 1e-5


def test_sigma_grid_rejects_bad_input() -> None:
    with pytest.raises(ConfigurationError):
        sigma_grid(1.0, 1)
    with pytest.raises(ConfigurationError):
        sigma_grid(0.0, 10)


def test_min_cost_matches_grid_oracle(es_example: SystemConfig) -> None:
    for sigma in (0.0, 0.3, 1.0):
        structured = min_cost_over_cutoff(es_example, sigma)
        oracle = grid_min_cost_over_cutoff(es_example, sigma, step=1e-3)
        assert structured.feasible
        assert structured.value <= oracle.value * (1.0 + 1e-9)
        assert structured.value == pytest.approx(oracle.value, rel=1e-4)


def test_optimum_is_a_real_cost(es_example: SystemConfig) -> None:
    optimum = min_cost_over_cutoff(es_example, 0.5)
    assert 0.0 <= optimum.argmin <= es_example.n_servers
    at_argmin = total_cost(es_example, DispatchRule.for_config(es_example, optimum.argmin), 0.5)
    assert optimum.value == pytest.approx(at_argmin.total)


def test_unstable_scheduler_raises(es_example: SystemConfig) -> None:
    with pytest.raises(UnstableSystemError):
        min_cost_over_cutoff(es_example, 1.0 / es_example.total_arrival_rate)


def test_efficiency_is_one_without_testing(es_example: SystemConfig) -> None:
    assert efficiency(es_example, 0.0) == 1.0


def test_efficiency_respects_floor(es_example: SystemConfig) -> None:
    sigmas = [0.0, 0.05, 0.5, 2.0, 3.0]
    curve = efficiency_curve(es_example, sigmas)
    assert curve[0] == 1.0
    assert np.all(curve >= efficiency_floor(es_example.dist) - 1e-12)


def test_constant_profile_never_gains(ic_example: SystemConfig) -> None:
    curve = efficiency_curve(ic_example, [0.0, 0.1, 1.0])
    assert np.all(np.diff(curve) > 0.0)


def test_curve_keeps_input_order(es_example: SystemConfig) -> None:
    sigmas = [1.0, 0.0, 0.5]
    optima = min_cost_curve(es_example, sigmas)
    assert [p.value for p in optima] == [min_cost_over_cutoff(es_example, s).value for s in sigmas]


def test_best_testing_time(es_example: SystemConfig) -> None:
    sigma_max = 0.99 / es_example.total_arrival_rate
    best = min_efficiency_over_sigma(es_example, sigma_max, grid_points=40)
    assert 0.0 <= best.argmin <= sigma_max
    assert best.value <= float(np.min(efficiency_curve(es_example, sigma_grid(sigma_max, 40)))) + 1e-12
    assert best.value <= 1.0
    with pytest.raises(ConfigurationError):
        min_efficiency_over_sigma(es_example, 1.0 / es_example.total_arrival_rate)


def test_narrow_stable_window_is_found(pk_example: SystemConfig) -> None:
    # N (1 - rho) = 0.015: the whole stable window fits between two coarse points
    cfg = pk_example.with_rho(0.995)
    short_edge, long_edge = stability_frontiers(cfg, 0.0)
    assert short_edge == pytest.approx(1.413947, abs=1e-6)
    assert long_edge == pytest.approx(1.428947, abs=1e-6)

    optimum = min_cost_over_cutoff(cfg, 0.0)
    oracle = grid_min_cost_over_cutoff(cfg, 0.0, step=1e-5)
    assert optimum.feasible
    assert optimum.method != "grid"
    assert short_edge < optimum.argmin < long_edge
    assert optimum.value <= oracle.value * (1.0 + 1e-9)
    assert optimum.value == pytest.approx(oracle.value, rel=1e-4)


def test_integer_cutoff_is_the_best_integer(es_example: SystemConfig) -> None:
    for sigma in (0.0, 0.5):
        best = min_cost_over_integer_cutoff(es_example, sigma)
        assert best.method == "integer"
        values = [servers_waiting_integer(es_example, C, sigma) for C in range(1, es_example.n_servers)]
        assert best.argmin == float(1 + int(np.argmin(values)))
        direct = total_cost(es_example, DispatchRule.for_config(es_example, best.argmin), sigma).total
        assert best.value == pytest.approx(direct, rel=1e-10)
        assert best.value >= min_cost_over_cutoff(es_example, sigma).value * (1.0 - 1e-12)


def test_integer_cutoff_without_stable_split(pk_example: SystemConfig) -> None:
    best = min_cost_over_integer_cutoff(pk_example.with_rho(0.995), 0.0)
    assert not best.feasible
    assert math.isnan(best.argmin)


def test_sigma_refinement_uses_an_absolute_tolerance(
    es_example: SystemConfig, monkeypatch: pytest.MonkeyPatch
) -> None:
    calls = []
    real = optimize_module.optimize.minimize_scalar

    def spy(fun, *args, **kwargs):
        calls.append(kwargs)
        return real(fun, *args, **kwargs)

    monkeypatch.setattr(optimize_module.optimize, "minimize_scalar", spy)
    sigma_max = 0.99 / es_example.total_arrival_rate
    min_efficiency_over_sigma(es_example, sigma_max, grid_points=40)

    tolerances = [kw["tol"] * 2.0 * kw["bracket"][1] for kw in calls if kw.get("method") == "golden"]
    tolerances += [
        kw["options"]["xatol"]
        for kw in calls
        if kw.get("method") == "bounded" and kw["options"]["xatol"] != optimize_module.REFINE_TOLERANCE
    ]
    assert tolerances
    assert tolerances == pytest.approx([1e-8 * sigma_max] * len(tolerances))
