"""
Two-point job-size laws and the joint law of (size, prediction).
"""

import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from probelb.errors import ConfigurationError

PMF_TOLERANCE: float = 1e-12


class TwoPointJobDist(BaseModel):
    """Job size X taking the value x_m with probability p_small and x_M otherwise."""

    model_config = ConfigDict(frozen=True)

    x_m: float
    x_M: float
    p_small: float
    alpha: Optional[float] = None
    beta: Optional[float] = None

    @model_validator(mode="after")
    def _check_support(self) -> "TwoPointJobDist":
        if not (0.0 < self.x_m < self.x_M < math.inf):
            raise ValueError(f"job sizes must satisfy 0 < x_m < x_M < inf (got x_m={self.x_m}, x_M={self.x_M})")
        if not (0.0 < self.p_small < 1.0):
            raise ValueError(f"p_small must lie in (0, 1) (got {self.p_small})")
        return self

    @property
    def p_large(self) -> float:
        return 1.0 - self.p_small

    def mean(self) -> float:
        return self.p_small * self.x_m + self.p_large * self.x_M

    def second_moment(self) -> float:
        return self.p_small * self.x_m**2 + self.p_large * self.x_M**2

    def scv(self) -> float:
        mean: float = self.mean()
        return self.second_moment() / mean**2 - 1.0

    def load(self, lambda_per_server: float) -> float:
        return lambda_per_server * self.mean()

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.where(rng.random(size) < self.p_small, self.x_m, self.x_M)

    @classmethod
    def from_pareto(cls, alpha: float, beta: float, x_m: float, x_M: float) -> "TwoPointJobDist":
        return pareto_tail_dist(alpha, beta, x_m, x_M)


def pareto_tail_dist(alpha: float, beta: float, x_m: float, x_M: float) -> TwoPointJobDist:
    """Two-point surrogate of a polynomial tail: P(X = x_M) = alpha * x_M^(-beta)."""
    if alpha <= 0.0 or beta <= 0.0:
        raise ConfigurationError(f"alpha and beta must be positive (got alpha={alpha}, beta={beta})")
    if not (0.0 < x_m < x_M):
        raise ConfigurationError(f"heavy-tail law needs 0 < x_m < x_M (got x_m={x_m}, x_M={x_M})")
    p_large: float = alpha * x_M ** (-beta)
    if not (0.0 < p_large < 1.0):
        raise ConfigurationError(f"alpha * x_M^(-beta) = {p_large:.6g} is not a probability in (0, 1)")
    return TwoPointJobDist(x_m=x_m, x_M=x_M, p_small=1.0 - p_large, alpha=alpha, beta=beta)


class JointPmf(BaseModel):
    """q_xy = P(X = x, Y = y); first index is the true size, second the prediction."""

    model_config = ConfigDict(frozen=True)

    q_mm: float
    q_mM: float
    q_Mm: float
    q_MM: float

    @model_validator(mode="after")
    def _check_pmf(self) -> "JointPmf":
        entries = (self.q_mm, self.q_mM, self.q_Mm, self.q_MM)
        if any(not (0.0 <= q <= 1.0) for q in entries):
            raise ValueError(f"pmf entries must lie in [0, 1] (got {entries})")
        if abs(sum(entries) - 1.0) > PMF_TOLERANCE:
            raise ValueError(f"pmf entries must sum to 1 (got {sum(entries)!r})")
        return self

    @property
    def prob_pred_small(self) -> float:
        return self.q_mm + self.q_Mm

    @property
    def prob_pred_large(self) -> float:
        return self.q_mM + self.q_MM

    @property
    def marginal_small(self) -> float:
        return self.q_mm + self.q_mM

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.q_mm, self.q_mM, self.q_Mm, self.q_MM)


class ConditionalMoments(BaseModel):
    """
    Moments of X given the prediction Y.

    The partial_* fields hold P(Y = y) * E[X^p | Y = y]; they are always
    defined and are what the waiting-time formulas consume. The cond_* fields
    are None when P(Y = y) = 0.
    """

    model_config = ConfigDict(frozen=True)

    prob_m: float
    prob_M: float
    cond_mean_m: Optional[float]
    cond_mean_M: Optional[float]
    cond_m2_m: Optional[float]
    cond_m2_M: Optional[float]
    partial_mean_m: float
    partial_mean_M: float
    partial_m2_m: float
    partial_m2_M: float

    @model_validator(mode="after")
    def _check_probabilities(self) -> "ConditionalMoments":
        if abs(self.prob_m + self.prob_M - 1.0) > PMF_TOLERANCE:
            raise ValueError(f"prediction marginal must sum to 1 (got {self.prob_m + self.prob_M!r})")
        return self

    @property
    def root_weight_m(self) -> float:
        """P(Y = x_m) * sqrt(E[X^2 | Y = x_m])."""
        return math.sqrt(self.prob_m * self.partial_m2_m)

    @property
    def root_weight_M(self) -> float:
        return math.sqrt(self.prob_M * self.partial_m2_M)

    @property
    def root_mean(self) -> float:
        """E[ sqrt(E[X^2 | Y]) ]."""
        return self.root_weight_m + self.root_weight_M

    def total_mean(self) -> float:
        return self.partial_mean_m + self.partial_mean_M

    def total_second_moment(self) -> float:
        return self.partial_m2_m + self.partial_m2_M


def cond_moments(pmf: JointPmf, dist: TwoPointJobDist) -> ConditionalMoments:
    if abs(pmf.marginal_small - dist.p_small) > PMF_TOLERANCE:
        raise ConfigurationError(
            f"pmf X-marginal {pmf.marginal_small!r} does not match p_small={dist.p_small!r}"
        )

    x_m: float = dist.x_m
    x_M: float = dist.x_M
    prob_m: float = pmf.prob_pred_small
    prob_M: float = pmf.prob_pred_large

    partial_mean_m: float = pmf.q_mm * x_m + pmf.q_Mm * x_M
    partial_mean_M: float = pmf.q_mM * x_m + pmf.q_MM * x_M
    partial_m2_m: float = pmf.q_mm * x_m**2 + pmf.q_Mm * x_M**2
    partial_m2_M: float = pmf.q_mM * x_m**2 + pmf.q_MM * x_M**2

    return ConditionalMoments(
        prob_m=prob_m,
        prob_M=prob_M,
        cond_mean_m=partial_mean_m / prob_m if prob_m > 0.0 else None,
        cond_mean_M=partial_mean_M / prob_M if prob_M > 0.0 else None,
        cond_m2_m=partial_m2_m / prob_m if prob_m > 0.0 else None,
        cond_m2_M=partial_m2_M / prob_M if prob_M > 0.0 else None,
        partial_mean_m=partial_mean_m,
        partial_mean_M=partial_mean_M,
        partial_m2_m=partial_m2_m,
        partial_m2_M=partial_m2_M,
    )
