"""Prediction profile families."""

import pytest
from pydantic import ValidationError

from probelb.models.profile import ProfileCurve, ProfileFamily, d_pmm_at_zero, joint_pmf
from probelb.models.workload import TwoPointJobDist

DIST = TwoPointJobDist(x_m=1.0, x_M=10.0, p_small=0.9)


def _curve(family: ProfileFamily, **kwargs: float) -> ProfileCurve:
    return ProfileCurve(family=family, dist=DIST, **kwargs)


def test_exponential_saturating_defaults_start_at_product_coupling() -> None:
    curve = _curve(ProfileFamily.EXPONENTIAL_SATURATING)
    assert (curve.a, curve.b) == (3.0, 1.0)
    pmf = curve.evaluate(0.0)
    assert pmf.q_mm == pytest.approx(0.81)
    assert pmf.q_MM == pytest.approx(0.01)
    assert pmf.q_Mm == pytest.approx(0.09)


def test_exponential_saturating_converges_to_perfect() -> None:
    pmf = _curve(ProfileFamily.EXPONENTIAL_SATURATING).evaluate(50.0)
    assert pmf.q_mm == pytest.approx(0.9)
    assert pmf.q_MM == pytest.approx(0.1)
    assert pmf.q_mM == pytest.approx(0.0, abs=1e-12)


def test_no_false_small_keeps_long_jobs_exact() -> None:
    curve = _curve(ProfileFamily.NO_FALSE_SMALL)
    assert curve.pmm0 == pytest.approx(0.45)
    for sigma in (0.0, 0.1, 1.0):
        pmf = joint_pmf(curve, sigma)
        assert pmf.q_Mm == 0.0
        assert pmf.q_MM == pytest.approx(0.1)
    assert curve.evaluate(0.0).q_mm == pytest.approx(0.45)


def test_constant_families_ignore_sigma() -> None:
    for family in (ProfileFamily.PERFECT_KNOWLEDGE, ProfileFamily.INDEPENDENT_CONSTANT):
        curve = _curve(family)
        assert curve.evaluate(0.0) == curve.evaluate(3.0)
    assert _curve(ProfileFamily.INDEPENDENT_CONSTANT).evaluate(1.0).q_mm == pytest.approx(0.81)


def test_conditional_prediction() -> None:
    curve = _curve(ProfileFamily.NO_FALSE_SMALL)
    assert curve.conditional_prediction(1.0, 0.0) == pytest.approx(0.5)
    assert curve.conditional_prediction(10.0, 0.0) == 0.0
    with pytest.raises(ValueError, match="support"):
        curve.conditional_prediction(5.0, 0.0)


def test_pmm_derivative_at_zero() -> None:
    assert d_pmm_at_zero(_curve(ProfileFamily.NO_FALSE_SMALL)) == pytest.approx(3.0 * 0.45)
    assert d_pmm_at_zero(_curve(ProfileFamily.EXPONENTIAL_SATURATING, a=2.0)) == pytest.approx(2.0 * 0.09)
    assert d_pmm_at_zero(_curve(ProfileFamily.PERFECT_KNOWLEDGE)) == 0.0


@pytest.mark.parametrize(
    "family,kwargs",
    [
        (ProfileFamily.EXPONENTIAL_SATURATING, {"a": -1.0}),
        (ProfileFamily.EXPONENTIAL_SATURATING, {"pmm0": 0.95}),
        (ProfileFamily.NO_FALSE_SMALL, {"pmm0": 0.0}),
        (ProfileFamily.NO_FALSE_SMALL, {"a": 0.0}),
    ],
)
def test_invalid_parameters(family: ProfileFamily, kwargs: dict) -> None:
    with pytest.raises(ValidationError):
        _curve(family, **kwargs)


def test_negative_testing_time() -> None:
    with pytest.raises(ValueError):
        _curve(ProfileFamily.PERFECT_KNOWLEDGE).evaluate(-0.1)


def test_valid_curves_pass_assumption_check() -> None:
    grid = [0.0, 0.01, 0.1, 1.0, 10.0]
    for family in ProfileFamily:
        assert _curve(family).check_assumptions(grid) == []
