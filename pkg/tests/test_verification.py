"""Verification suites; the expensive ones only run with -m slow."""

import numpy as np
import pytest

from probelb.core.analytic import DispatchRule, server_loads
from probelb.core.verification import (
    SUITES,
    balanced_cutoff,
    check_figure2,
    check_prop1,
    check_prop3,
    check_thm2,
    check_thm3,
    nfs_scenarios,
    random_config,
    run_suite,
    worked_example,
)
from probelb.errors import VerificationError
from probelb.models.profile import ProfileFamily


def _failures(suite: str, quick: bool = True) -> list:
    (report,) = run_suite(suite, quick=quick)
    return [c.name for c in report.checks if not c.passed]


@pytest.mark.parametrize("suite", ["analytic", "bounds", "prop1", "thm2", "thm3", "prop3", "figure2"])
def test_quick_suites_pass(suite: str) -> None:
    assert _failures(suite) == []


def test_heavy_tail_limit_values() -> None:
    checks = {c.name: c for c in check_prop3(quick=True)}
    assert checks["supercritical limit value"].passed
    assert checks["subcritical limit value"].passed
    assert checks["supercritical trajectory"].passed


def test_subcritical_ratio_grows_past_the_limit() -> None:
    checks = {c.name: c for c in check_prop3(quick=True)}
    growing = checks["subcritical trajectory grows with x_M"]
    assert growing.passed
    assert growing.measured > 50.0


def test_derivative_on_the_heaviest_scenario() -> None:
    checks = {c.name: c for c in check_thm2(quick=True)}
    assert len(checks) == 1 + len(nfs_scenarios())
    heaviest = checks["scenario 10: FD matches closed form"]
    assert heaviest.passed
    assert heaviest.measured < 0.01


def test_moderate_tail_gains_are_small() -> None:
    checks = {c.name: c for c in check_thm3(quick=True)}
    moderate = checks["beta=1.5: testing gains at most 1%"]
    assert moderate.passed
    assert 0.99 <= moderate.measured <= 1.0
    assert checks["beta=2: testing never pays off"].passed


def test_figure2_small_share_without_reserved_server() -> None:
    checks = {c.name: c for c in check_figure2(quick=True)}
    assert len(checks) == 6
    assert all(c.passed for c in checks.values())
    assert "min E=" in checks["p20 N=10: testing pays off"].detail


def test_prop1_gap_uses_the_best_integer_cutoff() -> None:
    for check in check_prop1(quick=True):
        if check.name.endswith("gap at N=1024"):
            assert check.measured < 1e-4


def test_unknown_suite() -> None:
    with pytest.raises(VerificationError, match="unknown suite"):
        run_suite("nope")


def test_suite_registry() -> None:
    assert list(SUITES) == ["analytic", "bounds", "prop1", "thm1", "thm2", "thm3", "prop3", "des", "optimizer", "figure2"]


def test_random_configs_are_valid_and_reproducible() -> None:
    first = [random_config(np.random.default_rng(5)) for _ in range(3)]
    again = [random_config(np.random.default_rng(5)) for _ in range(3)]
    assert first == again
    for cfg in [random_config(np.random.default_rng(seed)) for seed in range(20)]:
        assert 3 <= cfg.n_servers <= 12
        assert cfg.rho <= 0.85


def test_restricted_families() -> None:
    rng = np.random.default_rng(0)
    families = {random_config(rng, (ProfileFamily.NO_FALSE_SMALL,)).profile.family for _ in range(5)}
    assert families == {ProfileFamily.NO_FALSE_SMALL}


def test_worked_example_profile_overrides() -> None:
    cfg = worked_example(ProfileFamily.NO_FALSE_SMALL, a=5.0)
    assert cfg.profile.a == 5.0
    assert cfg.n_servers == 3


def test_nfs_scenarios() -> None:
    scenarios = nfs_scenarios()
    assert len(scenarios) == 10
    assert all(cfg.profile.family == ProfileFamily.NO_FALSE_SMALL for cfg in scenarios)
    assert scenarios[7].cost_fn.kappa == 5.0


def test_balanced_cutoff_minimises_peak_load() -> None:
    cfg = worked_example()
    best = balanced_cutoff(cfg, 0.0)
    peaks = [float(np.max(server_loads(cfg, DispatchRule.for_config(cfg, float(C)), 0.0))) for C in (1, 2)]
    assert best == 1 + int(np.argmin(peaks))


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["thm1", "optimizer"])
def test_quick_large_system_suites(suite: str) -> None:
    assert _failures(suite) == []


@pytest.mark.slow
def test_simulation_suite() -> None:
    assert _failures("des") == []


@pytest.mark.slow
def test_full_run() -> None:
    reports = run_suite("all", quick=False)
    assert [r.suite for r in reports] == list(SUITES)
    assert all(r.passed for r in reports)
