"""
Design rules for the testing time and the cutoff, and the large-system
constants they are judged against.
"""

import logging
import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict

from probelb.core.analytic import DispatchRule, pooled_waiting, total_cost
from probelb.errors import ConfigurationError
from probelb.models.config import SystemConfig
from probelb.models.profile import ProfileFamily, d_pmm_at_zero
from probelb.models.workload import ConditionalMoments, TwoPointJobDist, cond_moments

logger = logging.getLogger(__name__)

FLOOR_EPSILON: float = 1e-9
BOUNDARY_TOLERANCE: float = 1e-12

Regime = Literal["supercritical", "subcritical", "boundary"]


class CutoffDiagnostic(BaseModel):
    model_config = ConfigDict(frozen=True)

    simplified: float
    unsimplified: float
    gamma_m: float
    gamma_M: float

    @property
    def discrepancy(self) -> float:
        return abs(self.simplified - self.unsimplified)


class NfsDerivative(BaseModel):
    model_config = ConfigDict(frozen=True)

    derivative: float
    condition_value: float
    condition_holds: bool


class Prop3Limit(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    regime: Regime


class AsymptoticReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    r_star: float
    r_down: float
    pooled: float
    efficiency_floor: float
    nfs_derivative: Optional[float] = None
    nfs_condition_holds: Optional[bool] = None
    prop3_limit: Optional[float] = None
    prop3_regime: Optional[Regime] = None


def _moments_at(cfg: SystemConfig, sigma: float) -> ConditionalMoments:
    return cond_moments(cfg.profile.evaluate(sigma), cfg.dist)


def cutoff_diagnostic(cfg: SystemConfig, sigma: float) -> CutoffDiagnostic:
    """Cutoff fraction from the one-weight simplified form and from the two-weight form it came from."""
    moments: ConditionalMoments = _moments_at(cfg, sigma)
    lam: float = cfg.lambda_per_server
    gamma_m: float = moments.root_weight_m / moments.root_mean
    gamma_M: float = moments.root_weight_M / moments.root_mean

    simplified: float = gamma_m * (1.0 - cfg.rho) + lam * moments.partial_mean_m
    unsimplified: float = (1.0 - lam * moments.partial_mean_M) * gamma_m + lam * moments.partial_mean_m * gamma_M
    return CutoffDiagnostic(simplified=simplified, unsimplified=unsimplified, gamma_m=gamma_m, gamma_M=gamma_M)


def cutoff_star(cfg: SystemConfig, sigma: float) -> float:
    """Asymptotically optimal fraction of servers reserved for predicted-short jobs."""
    return cutoff_diagnostic(cfg, sigma).simplified


def cutoff_sequence(cfg: SystemConfig, sigma: float, n_servers: Optional[int] = None) -> int:
    """Integer cutoff floor(c* N) clamped to [1, N - 1]."""
    n: int = cfg.n_servers if n_servers is None else n_servers
    if n < 2:
        raise ConfigurationError(f"need at least two servers (got {n})")
    c: int = math.floor(cutoff_star(cfg, sigma) * n + FLOOR_EPSILON)
    return min(max(c, 1), n - 1)


def testing_time_for_tau(lambda_per_server: float, n_servers: int, tau: float) -> float:
    """sigma = 1 / (lambda N + sqrt(N) / tau); the scheduler sojourn is then tau / sqrt(N)."""
    if tau < 0.0:
        raise ConfigurationError(f"tau must be non-negative (got {tau})")
    if tau == 0.0:
        return 0.0
    return 1.0 / (lambda_per_server * n_servers + math.sqrt(n_servers) / tau)


def asymptotic_r_star(cfg: SystemConfig, sigma: float = 0.0) -> float:
    """Large-N limit (lambda/2) (sum_y sqrt(P(Y=y) E[X^2 | Y=y]))^2 / (1 - rho) of the servers waiting time."""
    moments: ConditionalMoments = _moments_at(cfg, sigma)
    return (cfg.lambda_per_server / 2.0) * moments.root_mean**2 / (1.0 - cfg.rho)


def lower_bound_r_down(cfg: SystemConfig) -> float:
    """Waiting time with perfect size information: (lambda/2) E[X]^2 / (1 - rho)."""
    return (cfg.lambda_per_server / 2.0) * cfg.dist.mean() ** 2 / (1.0 - cfg.rho)


def sigma_star(cfg: SystemConfig, gamma: float) -> float:
    """Testing time whose scheduler sojourn is exactly R_down / gamma."""
    if gamma <= 0.0:
        raise ConfigurationError(f"gamma must be positive (got {gamma})")
    return 1.0 / (cfg.total_arrival_rate + gamma / lower_bound_r_down(cfg))


def _check_theta(cfg: SystemConfig, theta: float) -> float:
    beta: Optional[float] = cfg.dist.beta
    if beta is None:
        raise ConfigurationError("heavy-tail design needs a distribution built from (alpha, beta)")
    if not (0.0 < theta < beta):
        raise ConfigurationError(f"theta must lie in (0, beta={beta}) (got {theta})")
    return beta


def cutoff_prop3(cfg: SystemConfig, sigma_star: float, theta: float) -> float:
    _check_theta(cfg, theta)
    n: int = cfg.n_servers
    scaled: float = n * cutoff_star(cfg, sigma_star)
    spare: float = n * (1.0 - cfg.rho)

    if spare > 1.0:
        return max(scaled, 1.0)
    phi: float = cfg.dist.x_M ** (-theta)
    return max(scaled, spare - n * cfg.rho * phi)


def nfs_zero_derivative(cfg: SystemConfig) -> NfsDerivative:
    """Right-derivative at sigma = 0 of the optimised cost for no-false-small profiles."""
    if cfg.profile.family != ProfileFamily.NO_FALSE_SMALL:
        raise ConfigurationError(f"derivative formula holds for no_false_small profiles only (got {cfg.profile.family})")

    moments: ConditionalMoments = _moments_at(cfg, 0.0)
    assert moments.cond_m2_M is not None
    lam: float = cfg.lambda_per_server
    x_m: float = cfg.dist.x_m
    f_prime: float = cfg.cost_fn.derivative_at_zero()
    p_prime: float = d_pmm_at_zero(cfg.profile)
    root_m2: float = math.sqrt(moments.cond_m2_M)

    factor: float = lam * moments.root_mean / (1.0 - cfg.rho)
    gain: float = (moments.cond_m2_M + x_m**2) / (2.0 * root_m2) - x_m
    derivative: float = f_prime - p_prime * factor * gain

    condition_value: float = (
        p_prime * (lam / 2.0) * (math.sqrt(cfg.dist.second_moment()) - x_m) ** 2 / (1.0 - cfg.rho)
    )
    return NfsDerivative(
        derivative=derivative, condition_value=condition_value, condition_holds=condition_value >= f_prime
    )


def efficiency_floor(dist: TwoPointJobDist) -> float:
    """E[X]^2 / E[X^2]: no amount of testing brings the efficiency below this."""
    return dist.mean() ** 2 / dist.second_moment()


def prop3_limit(cfg: SystemConfig, gamma: float, theta: Optional[float] = None) -> Prop3Limit:
    """
    Limit as x_M grows of D(sigma*) / R_down when N(1 - rho) > 1, and of
    D(sigma*) / (x_M^theta R_down) otherwise.
    """
    if gamma <= 0.0:
        raise ConfigurationError(f"gamma must be positive (got {gamma})")
    if theta is not None:
        _check_theta(cfg, theta)
    n: int = cfg.n_servers
    rho: float = cfg.rho
    spare: float = n * (1.0 - rho)

    if abs(spare - 1.0) <= BOUNDARY_TOLERANCE:
        logger.warning(f"N(1 - rho) = 1 for N={n}, rho={rho:g}: no limit value is available")
        return Prop3Limit(value=math.nan, regime="boundary")
    if spare > 1.0:
        return Prop3Limit(value=1.0 / gamma + spare / (spare - 1.0), regime="supercritical")
    return Prop3Limit(value=(1.0 - rho) * (n - 1) / (n * rho**2), regime="subcritical")


def prop3_ratio(cfg: SystemConfig, gamma: float, theta: float) -> float:
    """Finite-x_M counterpart of prop3_limit, using the designed sigma* and cutoff."""
    _check_theta(cfg, theta)
    sigma: float = sigma_star(cfg, gamma)
    cutoff: float = min(cutoff_prop3(cfg, sigma, theta), float(cfg.n_servers))
    cost: float = total_cost(cfg, DispatchRule.for_config(cfg, cutoff), sigma).total
    scale: float = lower_bound_r_down(cfg)
    if cfg.n_servers * (1.0 - cfg.rho) <= 1.0:
        scale *= cfg.dist.x_M**theta
    return cost / scale


def asymptotic_report(cfg: SystemConfig, gamma: float = 10.0, theta: Optional[float] = None) -> AsymptoticReport:
    nfs: Optional[NfsDerivative] = None
    if cfg.profile.family == ProfileFamily.NO_FALSE_SMALL:
        nfs = nfs_zero_derivative(cfg)

    limit: Optional[Prop3Limit] = None
    if cfg.dist.beta is not None:
        limit = prop3_limit(cfg, gamma, theta)

    return AsymptoticReport(
        r_star=asymptotic_r_star(cfg),
        r_down=lower_bound_r_down(cfg),
        pooled=pooled_waiting(cfg),
        efficiency_floor=efficiency_floor(cfg.dist),
        nfs_derivative=None if nfs is None else nfs.derivative,
        nfs_condition_holds=None if nfs is None else nfs.condition_holds,
        prop3_limit=None if limit is None else limit.value,
        prop3_regime=None if limit is None else limit.regime,
    )
