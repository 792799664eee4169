"""
Prediction profile curves: the map from testing time sigma to the joint pmf of
(true size X, prediction Y_sigma).
"""

import math
from enum import StrEnum
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from probelb.models.workload import JointPmf, TwoPointJobDist

MONOTONE_TOLERANCE: float = 1e-12
LIMIT_SIGMA: float = 1e6
LIMIT_TOLERANCE: float = 1e-9


class ProfileFamily(StrEnum):
    EXPONENTIAL_SATURATING = "exponential_saturating"
    NO_FALSE_SMALL = "no_false_small"
    PERFECT_KNOWLEDGE = "perfect_knowledge"
    INDEPENDENT_CONSTANT = "independent_constant"


_RATED_FAMILIES = (ProfileFamily.EXPONENTIAL_SATURATING, ProfileFamily.NO_FALSE_SMALL)


class ProfileCurve(BaseModel):
    """
    Prediction quality as a function of testing time.

    The exponential families approach the perfect diagonal (p_small, 1 - p_small)
    at rates a (short jobs) and b (long jobs), starting from the sigma = 0
    diagonal (pmm0, pMM0). Unset parameters take family defaults derived from
    the owning distribution: ExponentialSaturating starts at the product
    coupling, NoFalseSmall at pmm0 = p_small / 2.
    """

    model_config = ConfigDict(frozen=True)

    family: ProfileFamily = ProfileFamily.INDEPENDENT_CONSTANT
    dist: TwoPointJobDist = Field(exclude=True)
    a: Optional[float] = None
    b: Optional[float] = None
    pmm0: Optional[float] = None
    pMM0: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def _fill_family_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict) or "dist" not in data:
            return data

        values: Dict[str, Any] = dict(data)
        dist = values["dist"]
        if isinstance(dist, dict):
            dist = TwoPointJobDist(**dist)
            values["dist"] = dist
        p: float = dist.p_small
        family: ProfileFamily = ProfileFamily(values.get("family", ProfileFamily.INDEPENDENT_CONSTANT))

        if family == ProfileFamily.EXPONENTIAL_SATURATING:
            values.setdefault("a", 3.0)
            values.setdefault("b", 1.0)
            values.setdefault("pmm0", p * p)
            values.setdefault("pMM0", (1.0 - p) ** 2)
        elif family == ProfileFamily.NO_FALSE_SMALL:
            values.setdefault("a", 3.0)
            values.setdefault("pmm0", 0.5 * p)
        for key in ("a", "b", "pmm0", "pMM0"):
            if values.get(key) is None:
                values.pop(key, None)
        return values

    @model_validator(mode="after")
    def _check_parameters(self) -> "ProfileCurve":
        p: float = self.dist.p_small
        if self.family == ProfileFamily.EXPONENTIAL_SATURATING:
            if self.a is None or self.a <= 0.0 or self.b is None or self.b <= 0.0:
                raise ValueError(f"exponential_saturating needs positive rates a, b (got a={self.a}, b={self.b})")
            if self.pmm0 is None or not (0.0 <= self.pmm0 <= p):
                raise ValueError(f"pmm0 must lie in [0, p_small={p}] (got {self.pmm0})")
            if self.pMM0 is None or not (0.0 <= self.pMM0 <= 1.0 - p):
                raise ValueError(f"pMM0 must lie in [0, 1 - p_small={1.0 - p}] (got {self.pMM0})")
        elif self.family == ProfileFamily.NO_FALSE_SMALL:
            if self.a is None or self.a <= 0.0:
                raise ValueError(f"no_false_small needs a positive rate a (got {self.a})")
            if self.pmm0 is None or not (0.0 < self.pmm0 <= p):
                raise ValueError(f"no_false_small needs pmm0 in (0, p_small={p}] (got {self.pmm0})")
        return self

    def evaluate(self, sigma: float) -> JointPmf:
        if sigma < 0.0:
            raise ValueError(f"testing time must be non-negative (got {sigma})")

        p: float = self.dist.p_small
        q: float = self.dist.p_large

        if self.family == ProfileFamily.PERFECT_KNOWLEDGE:
            return JointPmf(q_mm=p, q_mM=0.0, q_Mm=0.0, q_MM=q)
        if self.family == ProfileFamily.INDEPENDENT_CONSTANT:
            return JointPmf(q_mm=p * p, q_mM=p * q, q_Mm=q * p, q_MM=q * q)

        assert self.a is not None and self.pmm0 is not None
        q_mm: float = self.pmm0 - math.expm1(-self.a * sigma) * (p - self.pmm0)
        if self.family == ProfileFamily.NO_FALSE_SMALL:
            q_MM: float = q
        else:
            assert self.b is not None and self.pMM0 is not None
            q_MM = self.pMM0 - math.expm1(-self.b * sigma) * (q - self.pMM0)

        q_mm = min(max(q_mm, 0.0), p)
        q_MM = min(max(q_MM, 0.0), q)
        return JointPmf(q_mm=q_mm, q_mM=p - q_mm, q_Mm=q - q_MM, q_MM=q_MM)

    def conditional_prediction(self, size: float, sigma: float) -> float:
        """P(Y_sigma = x_m | X = size)."""
        pmf: JointPmf = self.evaluate(sigma)
        if size == self.dist.x_m:
            return pmf.q_mm / self.dist.p_small
        if size == self.dist.x_M:
            return pmf.q_Mm / self.dist.p_large
        raise ValueError(f"{size} is not in the support {{{self.dist.x_m}, {self.dist.x_M}}}")

    def check_assumptions(self, sigmas: Sequence[float]) -> List[str]:
        """Return the profile-shape violations found on a sigma grid; empty when the curve is valid."""
        violations: List[str] = []
        previous: Optional[JointPmf] = None
        previous_sigma: float = 0.0

        for sigma in sorted(sigmas):
            try:
                pmf: JointPmf = self.evaluate(sigma)
            except (ValidationError, ValueError) as e:
                violations.append(f"sigma={sigma:g}: invalid pmf ({e})")
                previous = None
                continue

            if self.family == ProfileFamily.NO_FALSE_SMALL and (pmf.q_Mm != 0.0 or pmf.q_mm <= 0.0):
                violations.append(f"sigma={sigma:g}: no-false-small requires q_Mm = 0 and q_mm > 0")

            if previous is not None:
                if pmf.q_mm < previous.q_mm - MONOTONE_TOLERANCE or pmf.q_MM < previous.q_MM - MONOTONE_TOLERANCE:
                    violations.append(f"diagonal decreases between sigma={previous_sigma:g} and sigma={sigma:g}")
                if pmf.q_mM > previous.q_mM + MONOTONE_TOLERANCE or pmf.q_Mm > previous.q_Mm + MONOTONE_TOLERANCE:
                    violations.append(f"off-diagonal increases between sigma={previous_sigma:g} and sigma={sigma:g}")
            previous = pmf
            previous_sigma = sigma

        if self.family != ProfileFamily.INDEPENDENT_CONSTANT:
            limit: JointPmf = self.evaluate(LIMIT_SIGMA)
            if abs(limit.q_mm - self.dist.p_small) > LIMIT_TOLERANCE or abs(limit.q_MM - self.dist.p_large) > LIMIT_TOLERANCE:
                violations.append(f"predictions do not become exact at sigma={LIMIT_SIGMA:g}")

        return violations


def joint_pmf(profile: ProfileCurve, sigma: float) -> JointPmf:
    return profile.evaluate(sigma)


def d_pmm_at_zero(profile: ProfileCurve) -> float:
    """Right-derivative of q_mm at sigma = 0."""
    if profile.family in _RATED_FAMILIES:
        assert profile.a is not None and profile.pmm0 is not None
        return profile.a * (profile.dist.p_small - profile.pmm0)
    return 0.0
