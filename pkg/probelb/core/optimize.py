"""
Minimisation of the total cost over the cutoff and over the testing time.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import List, Literal, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import optimize

from probelb.core.analytic import (
    scheduler_delay,
    servers_waiting_integer_many,
    servers_waiting_many,
    stability_frontiers,
)
from probelb.core.design import cutoff_star
from probelb.errors import ConfigurationError, InfeasibleError, UnstableSystemError
from probelb.models.config import SystemConfig

logger = logging.getLogger(__name__)

COARSE_STEPS_PER_SERVER: int = 32
ORACLE_STEP: float = 1e-4
REFINE_TOLERANCE: float = 1e-10
REFINE_INTERVALS: int = 3
FRONTIER_SAMPLES: int = 257
PENALTY: float = 1e100
GEOMETRIC_FLOOR: float = 1e-6
SIGMA_XTOL: float = 1e-8


class OptimumPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    argmin: float
    value: float
    method: Literal["structured", "grid", "refined", "integer"]
    grid_step: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.value)


def sigma_grid(
    sigma_max: float, points: int = 400, spacing: Literal["hybrid", "linear", "geometric"] = "hybrid"
) -> np.ndarray:
    """
    Testing-time grid on [0, sigma_max] starting at 0.

    The hybrid grid merges a geometric grid from sigma_max * 1e-6 (resolving
    the neighbourhood of zero) with a linear one.
    """
    if points < 2:
        raise ConfigurationError(f"a sigma grid needs at least 2 points (got {points})")
    if sigma_max <= 0.0:
        raise ConfigurationError(f"sigma_max must be positive (got {sigma_max})")

    if spacing == "linear":
        return np.linspace(0.0, sigma_max, points)
    if spacing == "geometric":
        return np.concatenate(([0.0], np.geomspace(sigma_max * GEOMETRIC_FLOOR, sigma_max, points - 1)))

    geometric_points: int = max(points // 2, 1)
    merged = np.concatenate(
        (
            [0.0],
            np.geomspace(sigma_max * GEOMETRIC_FLOOR, sigma_max, geometric_points),
            np.linspace(0.0, sigma_max, points - geometric_points),
        )
    )
    return np.unique(merged)


def _scheduler_cost(cfg: SystemConfig, sigma: float) -> float:
    if not cfg.total_arrival_rate * sigma < 1.0:
        raise UnstableSystemError(
            f"scheduler unstable: Lambda * sigma = {cfg.total_arrival_rate * sigma:.6g} must be < 1",
            condition="scheduler",
        )
    return cfg.cost_fn(scheduler_delay(cfg.total_arrival_rate, sigma))


def _best(cutoffs: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """Smallest value; exact ties go to the smallest cutoff."""
    order = np.lexsort((cutoffs, values))
    i: int = int(order[0])
    return float(cutoffs[i]), float(values[i])


def grid_min_cost_over_cutoff(cfg: SystemConfig, sigma: float, step: float = ORACLE_STEP) -> OptimumPoint:
    """Exhaustive grid over [0, N]; the reference for the structured search."""
    fixed: float = _scheduler_cost(cfg, sigma)
    cutoffs = np.linspace(0.0, cfg.n_servers, int(round(cfg.n_servers / step)) + 1)
    values = fixed + servers_waiting_many(cfg, cutoffs, sigma)
    argmin, value = _best(cutoffs, values)
    if not math.isfinite(value):
        return OptimumPoint(argmin=math.nan, value=math.inf, method="grid", grid_step=step)
    return OptimumPoint(argmin=argmin, value=value, method="grid", grid_step=step)


def _refine_interval(cfg: SystemConfig, sigma: float, lo: float, hi: float) -> Tuple[float, float]:
    def objective(c: float) -> float:
        value = float(servers_waiting_many(cfg, [c], sigma)[0])
        return value if math.isfinite(value) else PENALTY

    result = optimize.minimize_scalar(
        objective, bounds=(lo, hi), method="bounded", options={"xatol": REFINE_TOLERANCE}
    )
    c: float = float(result.x)
    value: float = float(servers_waiting_many(cfg, [c], sigma)[0])
    return c, value


def _frontier_cutoffs(cfg: SystemConfig, sigma: float) -> np.ndarray:
    """
    Dense samples across the window where both pools can be stable and across
    the unit intervals holding its edges, so that a window narrower than the
    coarse step is still sampled.
    """
    n: int = cfg.n_servers
    short_edge, long_edge = stability_frontiers(cfg, sigma)
    pieces: List[np.ndarray] = [np.linspace(short_edge, long_edge, FRONTIER_SAMPLES)]
    for edge in (short_edge, long_edge):
        k: int = int(math.floor(edge))
        for j in range(k - 1, k + 2):
            if 0 <= j < n:
                pieces.append(np.linspace(j, j + 1, FRONTIER_SAMPLES))
    return np.clip(np.concatenate(pieces), 0.0, float(n))


def _brackets(cutoffs: np.ndarray, i: int) -> List[Tuple[float, float]]:
    """Intervals between the neighbours of cutoffs[i], split at integers where the objective has kinks."""
    c = float(cutoffs[i])
    prev = float(cutoffs[max(i - 1, 0)])
    nxt = float(cutoffs[min(i + 1, len(cutoffs) - 1)])
    k = math.floor(c)
    if c == k:
        candidates = [(max(prev, k - 1.0), c), (c, min(nxt, k + 1.0))]
    else:
        candidates = [(max(prev, float(k)), min(nxt, k + 1.0))]
    return [(lo, hi) for lo, hi in candidates if hi > lo]


def min_cost_over_cutoff(cfg: SystemConfig, sigma: float) -> OptimumPoint:
    """
    Optimal cutoff in [0, N] for a given testing time.

    Seeds with the integer cutoffs around c* N, a coarse scan and dense samples
    around the pool stability frontiers, then refines between the neighbours
    of the best seeds.
    """
    fixed: float = _scheduler_cost(cfg, sigma)
    n: int = cfg.n_servers

    seed: int = math.floor(cutoff_star(cfg, sigma) * n)
    integers = np.clip(np.array([seed - 1, seed, seed + 1], dtype=float), 1.0, n - 1.0)
    coarse = np.linspace(0.0, n, COARSE_STEPS_PER_SERVER * n + 1)
    cutoffs = np.unique(np.concatenate((integers, coarse, _frontier_cutoffs(cfg, sigma))))
    values = servers_waiting_many(cfg, cutoffs, sigma)

    if not np.any(np.isfinite(values)):
        logger.info(f"no sampled cutoff is stable at sigma={sigma:g}; falling back to the fine grid")
        fallback: OptimumPoint = grid_min_cost_over_cutoff(cfg, sigma)
        if not fallback.feasible:
            logger.warning(f"no stable cutoff exists at sigma={sigma:g}")
        return fallback

    brackets: Set[Tuple[float, float]] = set()
    finite = np.flatnonzero(np.isfinite(values))
    for i in finite[np.argsort(values[finite], kind="stable")][:REFINE_INTERVALS]:
        brackets.update(_brackets(cutoffs, int(i)))

    best_c, best_v = _best(cutoffs, values)
    method: Literal["structured", "refined"] = "structured"
    for lo, hi in sorted(brackets):
        c, v = _refine_interval(cfg, sigma, lo, hi)
        if v < best_v or (v == best_v and c < best_c):
            best_c, best_v, method = c, v, "refined"

    return OptimumPoint(argmin=best_c, value=fixed + best_v, method=method, grid_step=1.0 / COARSE_STEPS_PER_SERVER)


def min_cost_over_integer_cutoff(cfg: SystemConfig, sigma: float) -> OptimumPoint:
    """Best integer cutoff C in 1..N-1 under the two-pool form; ties go to the smaller C."""
    fixed: float = _scheduler_cost(cfg, sigma)
    cutoffs = np.arange(1, cfg.n_servers, dtype=float)
    argmin, value = _best(cutoffs, servers_waiting_integer_many(cfg, sigma))
    if not math.isfinite(value):
        return OptimumPoint(argmin=math.nan, value=math.inf, method="integer", grid_step=1.0)
    return OptimumPoint(argmin=argmin, value=fixed + value, method="integer", grid_step=1.0)


def _min_cost_value(cfg: SystemConfig, sigma: float) -> float:
    return min_cost_over_cutoff(cfg, sigma).value


def _baseline(cfg: SystemConfig) -> float:
    base: float = _min_cost_value(cfg, 0.0)
    if not math.isfinite(base):
        raise InfeasibleError("no stable cutoff exists without testing")
    return base


def efficiency(cfg: SystemConfig, sigma: float) -> float:
    """E(sigma) = min_c D(sigma) / min_c D(0); below 1 means testing pays off."""
    base: float = _baseline(cfg)
    return _min_cost_value(cfg, sigma) / base


def min_cost_curve(cfg: SystemConfig, sigmas: Sequence[float], workers: int = 1) -> List[OptimumPoint]:
    """Optimal cutoff per testing time, in input order; workers > 1 spreads points over processes."""
    points: List[float] = [float(s) for s in sigmas]
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(partial(min_cost_over_cutoff, cfg), points))
    return [min_cost_over_cutoff(cfg, s) for s in points]


def efficiency_curve(cfg: SystemConfig, sigmas: Sequence[float], workers: int = 1) -> np.ndarray:
    """E over a list of testing times, in input order."""
    base: float = _baseline(cfg)
    optima: List[OptimumPoint] = min_cost_curve(cfg, sigmas, workers)
    return np.array([p.value / base for p in optima])


def min_efficiency_over_sigma(
    cfg: SystemConfig, sigma_max: float, grid_points: int = 400, workers: int = 1
) -> OptimumPoint:
    """Grid scan of E on [0, sigma_max] followed by a golden-section refinement around the best point."""
    if not cfg.total_arrival_rate * sigma_max < 1.0:
        raise ConfigurationError(
            f"sigma_max={sigma_max:g} must be below the scheduler limit 1/Lambda={1.0 / cfg.total_arrival_rate:g}"
        )

    grid = sigma_grid(sigma_max, grid_points)
    values = efficiency_curve(cfg, grid, workers=workers)
    idx: int = int(np.argmin(values))
    best_sigma, best_value = float(grid[idx]), float(values[idx])
    grid_step: float = float(np.max(np.diff(grid)))

    base: float = _baseline(cfg)

    def objective(sigma: float) -> float:
        if sigma < 0.0 or not cfg.total_arrival_rate * sigma < 1.0:
            return PENALTY
        value = _min_cost_value(cfg, sigma) / base
        return value if math.isfinite(value) else PENALTY

    lo: float = float(grid[max(idx - 1, 0)])
    hi: float = float(grid[min(idx + 1, len(grid) - 1)])
    xatol: float = SIGMA_XTOL * sigma_max
    try:
        if 0 < idx < len(grid) - 1:
            # golden stops once the bracket width is below tol * (|x1| + |x2|), both near best_sigma
            result = optimize.minimize_scalar(
                objective, bracket=(lo, best_sigma, hi), method="golden", tol=xatol / (2.0 * best_sigma)
            )
        else:
            result = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    except ValueError as e:
        logger.debug(f"golden-section bracket rejected ({e}); using bounded search")
        result = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": xatol})

    refined_sigma: float = float(result.x)
    refined_value: float = float(result.fun)
    if lo <= refined_sigma <= hi and refined_value < best_value:
        return OptimumPoint(argmin=refined_sigma, value=refined_value, method="refined", grid_step=grid_step)
    return OptimumPoint(argmin=best_sigma, value=best_value, method="grid", grid_step=grid_step)
