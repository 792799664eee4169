"""
Closed-form mean waiting times.

The scheduler is an M/M/1 queue with mean service sigma. Each server pool
behind it is an M/G/1 FCFS queue fed by a thinned Poisson stream, so the
waiting time per pool follows Pollaczek-Khinchine. An unstable pool is
reported as math.inf together with an explicit stability flag.
"""

import logging
import math
from typing import Callable, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from probelb.errors import ConfigurationError, UnstableSystemError
from probelb.models.config import SystemConfig
from probelb.models.workload import ConditionalMoments, cond_moments

logger = logging.getLogger(__name__)

CutoffPolicy = Callable[[float], "DispatchRule"]


class DispatchRule(BaseModel):
    """
    Cutoff routing over servers 0..N-1 (0-based).

    Servers 0..floor_c-1 form the short pool, server floor_c is the mid server
    and floor_c+1..N-1 form the long pool. floor_c is capped at N-1 so that
    c = N keeps a mid server and coincides with the limit c -> N from below.
    """

    model_config = ConfigDict(frozen=True)

    n_servers: int = Field(ge=2)
    cutoff: float

    @model_validator(mode="after")
    def _check_range(self) -> "DispatchRule":
        if not (0.0 <= self.cutoff <= self.n_servers):
            raise ValueError(f"cutoff must lie in [0, {self.n_servers}] (got {self.cutoff})")
        return self

    @classmethod
    def for_config(cls, cfg: SystemConfig, cutoff: float) -> "DispatchRule":
        return cls(n_servers=cfg.n_servers, cutoff=cutoff)

    @property
    def floor_c(self) -> int:
        return min(int(math.floor(self.cutoff)), self.n_servers - 1)

    @property
    def short_servers(self) -> int:
        return self.floor_c

    @property
    def long_servers(self) -> int:
        return self.n_servers - 1 - self.floor_c

    @property
    def mid_server(self) -> int:
        return self.floor_c

    @property
    def p_m(self) -> float:
        """Probability that a predicted-short job joins the short pool."""
        return self.floor_c / self.cutoff if self.cutoff >= 1.0 else 0.0

    @property
    def p_M(self) -> float:
        """Probability that a predicted-long job joins the long pool."""
        if self.cutoff > self.n_servers - 1:
            return 0.0
        return self.long_servers / (self.n_servers - self.cutoff)

    def p_z(self, moments: ConditionalMoments) -> float:
        """Fraction of all jobs sent to the mid server."""
        return moments.prob_m * (1.0 - self.p_m) + moments.prob_M * (1.0 - self.p_M)

    def is_integer(self) -> bool:
        return float(self.cutoff).is_integer()


class PoolTerms(BaseModel):
    """Contribution of each pool to the mean waiting time of an arbitrary job."""

    model_config = ConfigDict(frozen=True)

    short_pool: float
    mid_server: float
    long_pool: float
    stable_short_pool: bool
    stable_mid_server: bool
    stable_long_pool: bool

    @property
    def stable(self) -> bool:
        return self.stable_short_pool and self.stable_mid_server and self.stable_long_pool

    @property
    def total(self) -> float:
        if not self.stable:
            return math.inf
        return self.short_pool + self.mid_server + self.long_pool


class CostBreakdown(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheduler_sojourn: float
    servers_waiting: float
    total: float
    stable_scheduler: bool
    stable_short_pool: bool
    stable_mid_server: bool
    stable_long_pool: bool

    @property
    def stable(self) -> bool:
        return self.stable_scheduler and self.stable_short_pool and self.stable_mid_server and self.stable_long_pool

    def unstable_conditions(self) -> list[str]:
        flags = {
            "scheduler": self.stable_scheduler,
            "short_pool": self.stable_short_pool,
            "mid_server": self.stable_mid_server,
            "long_pool": self.stable_long_pool,
        }
        return [name for name, ok in flags.items() if not ok]


class StabilityReport(BaseModel):
    """Slack in each stability condition; None marks a pool that receives no traffic."""

    model_config = ConfigDict(frozen=True)

    scheduler_margin: float
    short_pool_margin: Optional[float]
    mid_server_margin: Optional[float]
    long_pool_margin: Optional[float]

    @staticmethod
    def _ok(margin: Optional[float]) -> bool:
        return margin is None or margin > 0.0

    @property
    def stable(self) -> bool:
        return all(
            self._ok(m)
            for m in (self.scheduler_margin, self.short_pool_margin, self.mid_server_margin, self.long_pool_margin)
        )

    def min_server_margin(self) -> float:
        margins = [m for m in (self.short_pool_margin, self.mid_server_margin, self.long_pool_margin) if m is not None]
        return min(margins) if margins else math.inf


def scheduler_delay(Lambda: float, sigma: float) -> float:
    """Mean sojourn time sigma / (1 - Lambda * sigma) of the M/M/1 testing scheduler."""
    if sigma < 0.0:
        raise ValueError(f"testing time must be non-negative (got {sigma})")
    if not Lambda * sigma < 1.0:
        raise UnstableSystemError(
            f"scheduler unstable: Lambda * sigma = {Lambda * sigma:.6g} must be < 1", condition="scheduler"
        )
    return sigma / (1.0 - Lambda * sigma)


def _routing_arrays(n_servers: int, cutoffs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    floor_c = np.minimum(np.floor(cutoffs), n_servers - 1)
    long_servers = n_servers - 1 - floor_c
    with np.errstate(divide="ignore", invalid="ignore"):
        p_m = np.where(cutoffs >= 1.0, floor_c / np.where(cutoffs > 0.0, cutoffs, 1.0), 0.0)
        p_M = np.where(cutoffs <= n_servers - 1, long_servers / np.maximum(n_servers - cutoffs, 1.0), 0.0)
    return floor_c, p_m, p_M


def _pool(weight: np.ndarray, numerator: np.ndarray, denominator: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """A pool with zero arrival weight contributes 0 and is stable regardless of its denominator."""
    idle = weight <= 0.0
    stable = idle | (denominator > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(idle, 0.0, np.where(denominator > 0.0, numerator / denominator, math.inf))
    return value, stable


def _terms_array(
    moments: ConditionalMoments, n_servers: int, Lambda: float, cutoffs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    floor_c, p_m, p_M = _routing_arrays(n_servers, cutoffs)
    half: float = Lambda / 2.0

    short_value, short_stable = _pool(
        weight=moments.prob_m * p_m,
        numerator=half * p_m**2 * moments.prob_m * moments.partial_m2_m,
        denominator=floor_c - Lambda * p_m * moments.partial_mean_m,
    )

    p_z = moments.prob_m * (1.0 - p_m) + moments.prob_M * (1.0 - p_M)
    mid_value, mid_stable = _pool(
        weight=p_z,
        numerator=half * p_z * ((1.0 - p_m) * moments.partial_m2_m + (1.0 - p_M) * moments.partial_m2_M),
        denominator=1.0 - Lambda * ((1.0 - p_m) * moments.partial_mean_m + (1.0 - p_M) * moments.partial_mean_M),
    )

    long_value, long_stable = _pool(
        weight=moments.prob_M * p_M,
        numerator=half * p_M**2 * moments.prob_M * moments.partial_m2_M,
        denominator=(n_servers - 1 - floor_c) - Lambda * p_M * moments.partial_mean_M,
    )
    return short_value, mid_value, long_value, short_stable, mid_stable, long_stable


def servers_waiting_terms(cfg: SystemConfig, rule: DispatchRule, sigma: float) -> PoolTerms:
    moments: ConditionalMoments = cond_moments(cfg.profile.evaluate(sigma), cfg.dist)
    short_v, mid_v, long_v, short_s, mid_s, long_s = _terms_array(
        moments, cfg.n_servers, cfg.total_arrival_rate, np.array([rule.cutoff], dtype=float)
    )
    return PoolTerms(
        short_pool=float(short_v[0]),
        mid_server=float(mid_v[0]),
        long_pool=float(long_v[0]),
        stable_short_pool=bool(short_s[0]),
        stable_mid_server=bool(mid_s[0]),
        stable_long_pool=bool(long_s[0]),
    )


def servers_waiting(cfg: SystemConfig, rule: DispatchRule, sigma: float) -> float:
    """Mean waiting time at the servers, or math.inf if any pool is overloaded."""
    return servers_waiting_terms(cfg, rule, sigma).total


def servers_waiting_many(cfg: SystemConfig, cutoffs: Union[np.ndarray, list[float]], sigma: float) -> np.ndarray:
    """Vectorised servers_waiting over an array of cutoffs."""
    c = np.asarray(cutoffs, dtype=float)
    if np.any(c < 0.0) or np.any(c > cfg.n_servers):
        raise ValueError(f"cutoffs must lie in [0, {cfg.n_servers}]")
    moments: ConditionalMoments = cond_moments(cfg.profile.evaluate(sigma), cfg.dist)
    short_v, mid_v, long_v, short_s, mid_s, long_s = _terms_array(moments, cfg.n_servers, cfg.total_arrival_rate, c)
    stable = short_s & mid_s & long_s
    return np.where(stable, short_v + mid_v + long_v, math.inf)


def servers_waiting_integer(cfg: SystemConfig, C: int, sigma: float) -> float:
    """Two-pool form valid when the cutoff is an integer: C short servers, N - C long servers."""
    if not (1 <= C <= cfg.n_servers - 1):
        raise ConfigurationError(f"integer cutoff must lie in [1, {cfg.n_servers - 1}] (got {C})")

    moments: ConditionalMoments = cond_moments(cfg.profile.evaluate(sigma), cfg.dist)
    Lambda: float = cfg.total_arrival_rate
    total: float = 0.0

    for prob, m1, m2, servers in (
        (moments.prob_m, moments.partial_mean_m, moments.partial_m2_m, C),
        (moments.prob_M, moments.partial_mean_M, moments.partial_m2_M, cfg.n_servers - C),
    ):
        if prob <= 0.0:
            continue
        denominator: float = servers - Lambda * m1
        if not denominator > 0.0:
            return math.inf
        total += (Lambda / 2.0) * prob * m2 / denominator
    return total


def servers_waiting_integer_many(cfg: SystemConfig, sigma: float) -> np.ndarray:
    """servers_waiting_integer for every C in 1..N-1; entry i holds C = i + 1."""
    moments: ConditionalMoments = cond_moments(cfg.profile.evaluate(sigma), cfg.dist)
    Lambda: float = cfg.total_arrival_rate
    short = np.arange(1, cfg.n_servers, dtype=float)
    total = np.zeros_like(short)

    for prob, m1, m2, servers in (
        (moments.prob_m, moments.partial_mean_m, moments.partial_m2_m, short),
        (moments.prob_M, moments.partial_mean_M, moments.partial_m2_M, cfg.n_servers - short),
    ):
        if prob <= 0.0:
            continue
        denominator = servers - Lambda * m1
        with np.errstate(divide="ignore", invalid="ignore"):
            total += np.where(denominator > 0.0, (Lambda / 2.0) * prob * m2 / denominator, math.inf)
    return total


def stability_frontiers(cfg: SystemConfig, sigma: float) -> Tuple[float, float]:
    """
    Cutoffs at which the short pool and the long pool reach full load.

    The short pool is stable for c above the first value and the long pool for
    c below the second; the two are N (1 - rho) apart.
    """
    moments: ConditionalMoments = cond_moments(cfg.profile.evaluate(sigma), cfg.dist)
    Lambda: float = cfg.total_arrival_rate
    return Lambda * moments.partial_mean_m, cfg.n_servers - Lambda * moments.partial_mean_M


def stability_report(cfg: SystemConfig, rule: DispatchRule, sigma: float) -> StabilityReport:
    moments: ConditionalMoments = cond_moments(cfg.profile.evaluate(sigma), cfg.dist)
    Lambda: float = cfg.total_arrival_rate
    p_m, p_M = rule.p_m, rule.p_M
    p_z: float = rule.p_z(moments)

    short_margin: Optional[float] = None
    if moments.prob_m * p_m > 0.0:
        short_margin = rule.short_servers - Lambda * p_m * moments.partial_mean_m
    mid_margin: Optional[float] = None
    if p_z > 0.0:
        mid_margin = 1.0 - Lambda * ((1.0 - p_m) * moments.partial_mean_m + (1.0 - p_M) * moments.partial_mean_M)
    long_margin: Optional[float] = None
    if moments.prob_M * p_M > 0.0:
        long_margin = rule.long_servers - Lambda * p_M * moments.partial_mean_M

    return StabilityReport(
        scheduler_margin=1.0 - Lambda * sigma,
        short_pool_margin=short_margin,
        mid_server_margin=mid_margin,
        long_pool_margin=long_margin,
    )


def total_cost(cfg: SystemConfig, rule: DispatchRule, sigma: float) -> CostBreakdown:
    """D(sigma) = f(scheduler sojourn) + mean waiting at the servers."""
    stable_scheduler: bool = cfg.total_arrival_rate * sigma < 1.0
    sojourn: float = scheduler_delay(cfg.total_arrival_rate, sigma) if stable_scheduler else math.inf
    terms: PoolTerms = servers_waiting_terms(cfg, rule, sigma)
    waiting: float = terms.total

    total: float = math.inf
    if stable_scheduler and terms.stable:
        total = cfg.cost_fn(sojourn) + waiting
    else:
        logger.debug(f"unstable at c={rule.cutoff:g}, sigma={sigma:g}")

    return CostBreakdown(
        scheduler_sojourn=sojourn,
        servers_waiting=waiting,
        total=total,
        stable_scheduler=stable_scheduler,
        stable_short_pool=terms.stable_short_pool,
        stable_mid_server=terms.stable_mid_server,
        stable_long_pool=terms.stable_long_pool,
    )


def fd_derivative_at_zero(
    cfg: SystemConfig,
    rule: Union[DispatchRule, CutoffPolicy],
    h: float,
    part: Literal["total", "servers_only"] = "total",
) -> float:
    """
    One-sided difference (V(h) - V(0)) / h of the total cost or of the servers part.

    rule is either a fixed DispatchRule or a callable sigma -> DispatchRule that
    re-derives the cutoff at each testing time.
    """
    if not (0.0 < h < 1.0 / (2.0 * cfg.total_arrival_rate)):
        raise ValueError(f"step h={h:g} must lie in (0, 1/(2 Lambda))")

    def rule_at(sigma: float) -> DispatchRule:
        return rule if isinstance(rule, DispatchRule) else rule(sigma)

    def value(sigma: float) -> float:
        if part == "servers_only":
            return servers_waiting(cfg, rule_at(sigma), sigma)
        return total_cost(cfg, rule_at(sigma), sigma).total

    v0: float = value(0.0)
    vh: float = value(h)
    if not (math.isfinite(v0) and math.isfinite(vh)):
        raise UnstableSystemError(f"system unstable while differencing at sigma in {{0, {h:g}}}", condition="servers")
    return (vh - v0) / h


def pooled_waiting(cfg: SystemConfig) -> float:
    """Untested pooled M/G/1 waiting time (lambda/2) E[X^2] / (1 - rho)."""
    return (cfg.lambda_per_server / 2.0) * cfg.dist.second_moment() / (1.0 - cfg.rho)


def server_arrival_rates(cfg: SystemConfig, rule: DispatchRule, sigma: float) -> np.ndarray:
    """Per-server arrival rate of the thinned streams."""
    moments: ConditionalMoments = cond_moments(cfg.profile.evaluate(sigma), cfg.dist)
    Lambda: float = cfg.total_arrival_rate
    rates = np.zeros(cfg.n_servers)
    if rule.short_servers > 0:
        rates[: rule.short_servers] = Lambda * moments.prob_m * rule.p_m / rule.short_servers
    rates[rule.mid_server] = Lambda * rule.p_z(moments)
    if rule.long_servers > 0:
        rates[rule.mid_server + 1 :] = Lambda * moments.prob_M * rule.p_M / rule.long_servers
    return rates


def server_loads(cfg: SystemConfig, rule: DispatchRule, sigma: float) -> np.ndarray:
    """Per-server utilisation (arrival rate times mean service)."""
    moments: ConditionalMoments = cond_moments(cfg.profile.evaluate(sigma), cfg.dist)
    Lambda: float = cfg.total_arrival_rate
    p_m, p_M = rule.p_m, rule.p_M
    loads = np.zeros(cfg.n_servers)
    if rule.short_servers > 0:
        loads[: rule.short_servers] = Lambda * p_m * moments.partial_mean_m / rule.short_servers
    loads[rule.mid_server] = Lambda * ((1.0 - p_m) * moments.partial_mean_m + (1.0 - p_M) * moments.partial_mean_M)
    if rule.long_servers > 0:
        loads[rule.mid_server + 1 :] = Lambda * p_M * moments.partial_mean_M / rule.long_servers
    return loads
