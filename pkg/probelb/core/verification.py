"""
Numerical verification suites.

Each suite turns one of the closed-form results or large-system limits into
a finite-scale check with an explicit threshold. quick=True shrinks sample
counts and simulation lengths for smoke runs.
"""

import logging
import math
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from probelb.core.analytic import (
    DispatchRule,
    fd_derivative_at_zero,
    pooled_waiting,
    server_loads,
    servers_waiting,
    servers_waiting_integer,
    servers_waiting_integer_many,
    servers_waiting_many,
    servers_waiting_terms,
    total_cost,
)
from probelb.core.design import (
    asymptotic_r_star,
    cutoff_diagnostic,
    cutoff_sequence,
    cutoff_star,
    efficiency_floor,
    lower_bound_r_down,
    nfs_zero_derivative,
    prop3_limit,
    prop3_ratio,
    sigma_star,
    testing_time_for_tau,
)
from probelb.core.figures import GAMMA, WORKLOADS, figure1_config, figure2_config, sweep
from probelb.core.optimize import (
    efficiency,
    efficiency_curve,
    grid_min_cost_over_cutoff,
    min_cost_over_cutoff,
    min_cost_over_integer_cutoff,
    sigma_grid,
)
from probelb.core.simulation import simulate
from probelb.errors import InfeasibleError, VerificationError
from probelb.models.config import CostFunction, SystemConfig
from probelb.models.profile import ProfileFamily
from probelb.models.workload import TwoPointJobDist

logger = logging.getLogger(__name__)

WORKED_EXAMPLE_WAITING: float = 0.2546737
IC_R_STAR: float = 0.672840
PK_R_STAR: float = 0.222839
PROP3_SUPERCRITICAL: float = 1.799301
PROP3_SUBCRITICAL: float = 0.208333
EFFICIENCY_RATIO_CAP: float = 1.25
MODERATE_TAIL_FLOOR: float = 0.99
SUBCRITICAL_GROWTH: float = 10.0
RANDOM_MAX_SERVERS: int = 12
RANDOM_MAX_RHO: float = 0.85


class CheckResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""


class SuiteReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    suite: str
    checks: List[CheckResult]
    elapsed: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def worked_example(family: ProfileFamily = ProfileFamily.PERFECT_KNOWLEDGE, **profile: float) -> SystemConfig:
    """N = 3, lambda = 0.1, sizes 1 / 10 with P(small) = 0.9."""
    return SystemConfig(
        n_servers=3,
        lambda_per_server=0.1,
        dist={"x_m": 1.0, "x_M": 10.0, "p_small": 0.9},
        profile={"family": family, **profile},
    )


def random_config(rng: np.random.Generator, families: Optional[Tuple[ProfileFamily, ...]] = None) -> SystemConfig:
    """Random small system with N in [3, 12] and rho up to 0.85."""
    x_m: float = float(rng.uniform(0.5, 2.0))
    dist = TwoPointJobDist(
        x_m=x_m, x_M=x_m * float(rng.uniform(1.5, 50.0)), p_small=float(rng.uniform(0.05, 0.95))
    )
    p: float = dist.p_small
    family = ProfileFamily(rng.choice(list(families or tuple(ProfileFamily))))

    profile: Dict[str, float] = {}
    if family == ProfileFamily.EXPONENTIAL_SATURATING:
        start: float = float(rng.uniform(0.0, 1.0))
        profile = {
            "a": float(rng.uniform(0.5, 10.0)),
            "b": float(rng.uniform(0.5, 10.0)),
            "pmm0": p * p + start * (p - p * p),
            "pMM0": (1.0 - p) ** 2 + start * ((1.0 - p) - (1.0 - p) ** 2),
        }
    elif family == ProfileFamily.NO_FALSE_SMALL:
        profile = {"a": float(rng.uniform(0.5, 10.0)), "pmm0": p * float(rng.uniform(0.05, 1.0))}

    cost = CostFunction()
    if rng.random() < 0.3:
        cost = CostFunction(kind="scaled", kappa=float(rng.uniform(0.5, 3.0)))

    return SystemConfig(
        n_servers=int(rng.integers(3, RANDOM_MAX_SERVERS + 1)),
        rho=float(rng.uniform(0.05, RANDOM_MAX_RHO)),
        dist=dist,
        profile={"family": family, **profile},
        cost_fn=cost,
    )


def _relative(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0
    return abs(a - b) / max(abs(b), 1e-300)


def _at_most(name: str, measured: float, threshold: float, detail: str = "") -> CheckResult:
    return CheckResult(name=name, passed=measured <= threshold, measured=measured, threshold=threshold, detail=detail)


def check_analytic(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    checks: List[CheckResult] = []

    samples: int = 100 if quick else 1000
    worst: float = 0.0
    for _ in range(samples):
        cfg = random_config(rng)
        C = int(rng.integers(1, cfg.n_servers))
        sigma = float(rng.uniform(0.0, 0.9 / cfg.total_arrival_rate))
        three_pool = servers_waiting(cfg, DispatchRule.for_config(cfg, float(C)), sigma)
        worst = max(worst, _relative(three_pool, servers_waiting_integer(cfg, C, sigma)))
    checks.append(_at_most("integer cutoff equivalence", worst, 1e-10, f"{samples} random configs"))

    cfg = worked_example()
    terms = servers_waiting_terms(cfg, DispatchRule.for_config(cfg, 1.0), 0.0)
    checks.append(
        _at_most(
            "worked example",
            abs(terms.total - WORKED_EXAMPLE_WAITING),
            1e-6,
            f"servers_waiting = {terms.total:.7f}",
        )
    )
    checks.append(_at_most("mid/long symmetry", abs(terms.mid_server - terms.long_pool), 1e-12))

    sandwich: float = 0.0
    diagnostic: float = 0.0
    for _ in range(samples // 10):
        cfg = random_config(rng)
        sigma = float(rng.uniform(0.0, 0.9 / cfg.total_arrival_rate))
        r_star = asymptotic_r_star(cfg, sigma)
        scale = pooled_waiting(cfg)
        sandwich = max(sandwich, (lower_bound_r_down(cfg) - r_star) / scale, (r_star - scale) / scale)
        diagnostic = max(diagnostic, cutoff_diagnostic(cfg, sigma).discrepancy)
    checks.append(_at_most("R_down <= R* <= pooled", sandwich, 1e-12))
    checks.append(_at_most("cutoff simplification", diagnostic, 1e-12))

    ic = worked_example(ProfileFamily.INDEPENDENT_CONSTANT)
    pk = worked_example()
    extremes: float = max(
        _relative(asymptotic_r_star(pk), lower_bound_r_down(pk)),
        _relative(asymptotic_r_star(ic), pooled_waiting(ic)),
        abs(cutoff_star(ic, 0.0) - ic.dist.p_small),
        abs(cutoff_star(pk, 0.0) - pk.dist.p_small * pk.dist.x_m / pk.dist.mean()),
    )
    checks.append(_at_most("perfect / independent extremes", extremes, 1e-12))
    return checks


def check_bounds(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    checks: List[CheckResult] = []

    configs, per_config = (20, 50) if quick else (200, 50)
    violation: float = 0.0
    for _ in range(configs):
        cfg = random_config(rng)
        r_down = lower_bound_r_down(cfg)
        for _ in range(per_config):
            sigma = float(rng.uniform(0.0, 0.9 / cfg.total_arrival_rate))
            value = float(servers_waiting_many(cfg, [float(rng.uniform(0.0, cfg.n_servers))], sigma)[0])
            if math.isfinite(value):
                violation = max(violation, (r_down - value) / r_down)
    checks.append(
        _at_most("servers waiting >= R_down", violation, 1e-12, f"{configs * per_config} random evaluations")
    )

    # the floor compares against an uninformed start, i.e. the product coupling at sigma = 0
    uninformed = (ProfileFamily.INDEPENDENT_CONSTANT, ProfileFamily.EXPONENTIAL_SATURATING)
    floor_configs: int = 5 if quick else 20
    violation = 0.0
    for _ in range(floor_configs):
        cfg = random_config(rng, uninformed)
        if cfg.profile.family == ProfileFamily.EXPONENTIAL_SATURATING:
            cfg = cfg.with_profile(family=cfg.profile.family, a=cfg.profile.a, b=cfg.profile.b)
        sigmas = rng.uniform(0.0, 0.9 / cfg.total_arrival_rate, 3)
        floor = efficiency_floor(cfg.dist)
        violation = max(violation, float(np.max(floor - efficiency_curve(cfg, sigmas))))
    checks.append(_at_most("efficiency >= E[X]^2 / E[X^2]", violation, 1e-12, f"{floor_configs} configs x 3 sigmas"))

    unit_configs: int = 20 if quick else 100
    deviation: float = 0.0
    skipped: int = 0
    for _ in range(unit_configs):
        try:
            deviation = max(deviation, abs(efficiency(random_config(rng), 0.0) - 1.0))
        except InfeasibleError:
            skipped += 1
    checks.append(
        _at_most("E(0) = 1", deviation, 1e-12, f"{unit_configs - skipped} random configs, {skipped} without a stable cutoff")
    )
    return checks


def _prop1_gap(cfg: SystemConfig, n_servers: int, r_star: float, tau: float = 1.0) -> float:
    """Relative distance to R* of the servers waiting time at the best integer cutoff."""
    scaled = cfg.with_servers(n_servers)
    sigma = testing_time_for_tau(scaled.lambda_per_server, n_servers, tau)
    best = float(np.min(servers_waiting_integer_many(scaled, sigma)))
    return abs(best - r_star) / r_star


def check_prop1(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    checks: List[CheckResult] = []
    for family, expected in (
        (ProfileFamily.INDEPENDENT_CONSTANT, IC_R_STAR),
        (ProfileFamily.PERFECT_KNOWLEDGE, PK_R_STAR),
    ):
        cfg = worked_example(family)
        r_star = asymptotic_r_star(cfg)
        checks.append(_at_most(f"{family.value}: R* anchor", abs(r_star - expected), 1e-6, f"R* = {r_star:.6f}"))

        small, large = _prop1_gap(cfg, 8, r_star), _prop1_gap(cfg, 1024, r_star)
        checks.append(
            CheckResult(
                name=f"{family.value}: gap at N=1024",
                passed=large <= 0.05 and large < small,
                measured=large,
                threshold=0.05,
                detail=f"gap at N=8 is {small:.3g}",
            )
        )
    return checks


def check_thm1(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    base = worked_example(ProfileFamily.EXPONENTIAL_SATURATING)
    counts = (10, 100, 1000) if quick else (10, 100, 1000, 10_000)

    servers_fd: List[float] = []
    total_fd: float = math.nan
    for n in counts:
        cfg = base.with_servers(n)
        rule = DispatchRule.for_config(cfg, float(cutoff_sequence(cfg, 0.0)))
        h = 1e-4 / (cfg.lambda_per_server * n)
        servers_fd.append(abs(fd_derivative_at_zero(cfg, rule, h, part="servers_only")))
        total_fd = fd_derivative_at_zero(cfg, rule, h, part="total")

    decreasing: bool = all(b < a for a, b in zip(servers_fd, servers_fd[1:]))
    f_prime: float = base.cost_fn.derivative_at_zero()
    trail = ", ".join(f"{v:.3g}" for v in servers_fd)
    return [
        CheckResult(
            name="servers-part derivative vanishes",
            passed=decreasing and servers_fd[-1] < 0.05,
            measured=servers_fd[-1],
            threshold=0.05,
            detail=f"|FD| over N={list(counts)}: {trail}",
        ),
        _at_most("total derivative -> f'(0)", abs(total_fd - f_prime) / f_prime, 0.10, f"FD = {total_fd:.6g}"),
    ]


def nfs_scenarios() -> List[SystemConfig]:
    def nfs(x_m: float, x_M: float, p: float, a: float = 3.0, pmm0: Optional[float] = None, **system: object) -> SystemConfig:
        profile: Dict[str, object] = {"family": ProfileFamily.NO_FALSE_SMALL, "a": a}
        if pmm0 is not None:
            profile["pmm0"] = pmm0
        return SystemConfig(n_servers=10_000, dist={"x_m": x_m, "x_M": x_M, "p_small": p}, profile=profile, **system)

    return [
        nfs(1, 10, 0.9, pmm0=0.45, lambda_per_server=0.1),
        nfs(1, 10, 0.9, rho=0.8),
        nfs(1, 10, 0.9, a=10.0, rho=0.5),
        nfs(1, 10, 0.9, pmm0=0.2, rho=0.8),
        nfs(25, 540, 0.5, rho=0.8),
        nfs(25, 540, 0.2, rho=0.8),
        nfs(25, 540, 0.8, rho=0.8),
        nfs(25, 540, 0.5, rho=0.5, cost_fn={"kind": "scaled", "kappa": 5.0}),
        nfs(1, 100, 0.95, rho=0.3),
        nfs(1, 100, 0.95, a=1.0, rho=0.9),
    ]


def check_thm2(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    checks: List[CheckResult] = []
    scenarios = nfs_scenarios()

    anchor = nfs_zero_derivative(scenarios[0])
    checks.append(_at_most("anchor derivative", abs(anchor.derivative - 0.38583), 1e-5, f"{anchor.derivative:.5f}"))

    for i, cfg in enumerate(scenarios):
        expected = nfs_zero_derivative(cfg)
        f_prime = cfg.cost_fn.derivative_at_zero()

        def policy(sigma: float, cfg: SystemConfig = cfg) -> DispatchRule:
            return DispatchRule.for_config(cfg, min_cost_over_integer_cutoff(cfg, sigma).argmin)

        fd = fd_derivative_at_zero(cfg, policy, 1e-4 / cfg.total_arrival_rate)
        error = abs(fd - expected.derivative) / max(abs(expected.derivative), f_prime)
        sign_ok = not (expected.condition_value >= 1.1 * f_prime) or fd < 0.0
        checks.append(
            CheckResult(
                name=f"scenario {i + 1}: FD matches closed form",
                passed=error <= 0.05 and sign_ok,
                measured=error,
                threshold=0.05,
                detail=f"FD={fd:.6g}, closed form={expected.derivative:.6g}, condition={expected.condition_value:.4g}",
            )
        )
    return checks


def check_thm3(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    checks: List[CheckResult] = []
    x_Ms = (1e2, 1e3, 1e4, 1e5)

    at_star: List[float] = []
    for x_M in x_Ms:
        cfg = figure1_config(beta=0.5, n_servers=100, rho=0.8, x_M=x_M)
        at_star.append(efficiency(cfg, sigma_star(cfg, GAMMA)))
    decreasing: bool = all(b < a for a, b in zip(at_star, at_star[1:]))
    checks.append(
        CheckResult(
            name="beta=0.5: E(sigma*) falls with x_M",
            passed=decreasing and at_star[-1] <= at_star[0] / 5.0,
            measured=at_star[-1] / at_star[0],
            threshold=0.2,
            detail=", ".join(f"{v:.4g}" for v in at_star),
        )
    )

    # at beta = 1.5 the curve dips up to a quarter percent below 1 for large x_M
    points: int = 40 if quick else 400
    for beta, floor, claim in ((1.5, MODERATE_TAIL_FLOOR, "gains at most 1%"), (2.0, 1.0 - 1e-9, "never pays off")):
        lowest: List[float] = []
        for x_M in x_Ms:
            cfg = figure1_config(beta=beta, n_servers=100, rho=0.8, x_M=x_M)
            grid = sigma_grid(0.99 / cfg.total_arrival_rate, points)
            lowest.append(float(np.min(efficiency_curve(cfg, grid))))
        checks.append(
            CheckResult(
                name=f"beta={beta:g}: testing {claim}",
                passed=min(lowest) >= floor,
                measured=min(lowest),
                threshold=floor,
                detail="min E by x_M: " + ", ".join(f"{v:.6g}" for v in lowest),
            )
        )
    return checks


def check_prop3(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    checks: List[CheckResult] = []

    def small(rho: float, x_M: float = 1e4) -> SystemConfig:
        return SystemConfig(n_servers=3, rho=rho, dist={"pareto": {"alpha": 1.0, "beta": 0.5, "x_m": 1.0, "x_M": x_M}})

    for rho, expected, regime in ((0.19, PROP3_SUPERCRITICAL, "supercritical"), (0.8, PROP3_SUBCRITICAL, "subcritical")):
        limit = prop3_limit(small(rho), GAMMA)
        checks.append(
            CheckResult(
                name=f"{regime} limit value",
                passed=limit.regime == regime and abs(limit.value - expected) <= 1e-6,
                measured=limit.value,
                threshold=expected,
            )
        )

    def trajectory(n_servers: int, rho: float, x_Ms: Tuple[float, ...]) -> Tuple[List[float], float]:
        ratios: List[float] = []
        limit: float = math.nan
        for x_M in x_Ms:
            cfg = SystemConfig(
                n_servers=n_servers,
                rho=rho,
                dist={"pareto": {"alpha": 1.0, "beta": 0.5, "x_m": 1.0, "x_M": x_M}},
                profile={"family": ProfileFamily.NO_FALSE_SMALL, "a": 3.0},
            )
            ratios.append(prop3_ratio(cfg, GAMMA, theta=0.25))
            limit = prop3_limit(cfg, GAMMA).value
        return ratios, limit

    ratios, limit = trajectory(100, 0.8, (1e3, 1e4, 1e5))
    gaps = [abs(r - limit) for r in ratios]
    checks.append(
        CheckResult(
            name="supercritical trajectory",
            passed=all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] / limit <= 0.10,
            measured=gaps[-1] / limit,
            threshold=0.10,
            detail=f"ratios {', '.join(f'{r:.4g}' for r in ratios)} -> {limit:.4g}",
        )
    )

    # with N (1 - rho) < 1 no whole server is reserved for short jobs and the
    # mid server's share of long jobs makes the scaled ratio grow without bound
    ratios, limit = trajectory(3, 0.8, (1e4, 1e5, 1e6, 1e7, 1e8))
    growth = ratios[-1] / limit
    checks.append(
        CheckResult(
            name="subcritical trajectory grows with x_M",
            passed=all(b > a for a, b in zip(ratios, ratios[1:])) and growth >= SUBCRITICAL_GROWTH,
            measured=growth,
            threshold=SUBCRITICAL_GROWTH,
            detail=f"ratios {', '.join(f'{r:.4g}' for r in ratios)} vs limit {limit:.4g}",
        )
    )
    return checks


def balanced_cutoff(cfg: SystemConfig, sigma: float) -> int:
    """Integer cutoff with the smallest peak server load."""
    peaks = [
        float(np.max(server_loads(cfg, DispatchRule.for_config(cfg, float(C)), sigma)))
        for C in range(1, cfg.n_servers)
    ]
    return 1 + int(np.argmin(peaks))


def check_des(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    jobs, replications, precision = (100_000, 10, 0.05) if quick else (10**6, 20, 0.02)

    fig2 = figure2_config("p80", n_servers=10, rho=0.8)
    fig2_sigma = sigma_star(fig2, GAMMA)
    scenarios: List[Tuple[str, SystemConfig, float, float]] = [
        ("worked example", worked_example(), 1.0, 0.0),
        ("worked example, tested, mixed mid server", worked_example(ProfileFamily.EXPONENTIAL_SATURATING), 1.5, 0.5),
        ("figure2 p80 N=10", fig2, float(balanced_cutoff(fig2, fig2_sigma)), fig2_sigma),
    ]

    checks: List[CheckResult] = []
    for i, (label, cfg, cutoff, sigma) in enumerate(scenarios):
        rule = DispatchRule.for_config(cfg, cutoff)
        expected = total_cost(cfg, rule, sigma).total
        peak = float(np.max(server_loads(cfg, rule, sigma)))
        report = simulate(cfg, rule, sigma, jobs=jobs, seed=seed + i, replications=replications)
        estimate = report.mean_total
        relative_se = estimate.std_error / estimate.mean
        checks.append(
            CheckResult(
                name=f"{label}: simulation agrees",
                passed=estimate.covers(expected, 3.0) and relative_se < precision,
                measured=abs(estimate.mean - expected) / estimate.std_error,
                threshold=3.0,
                detail=(
                    f"simulated {estimate.mean:.5g} +/- {estimate.half_width:.3g}, analytic {expected:.5g}, "
                    f"SE/mean {relative_se:.3%}, peak load {peak:.3f}"
                ),
            )
        )
    return checks


def check_optimizer(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    samples: int = 10 if quick else 50
    worst: float = 0.0
    for _ in range(samples):
        cfg = random_config(rng)
        sigma = float(rng.uniform(0.0, 0.5 / cfg.total_arrival_rate))
        structured = min_cost_over_cutoff(cfg, sigma).value
        oracle = grid_min_cost_over_cutoff(cfg, sigma).value
        worst = max(worst, _relative(structured, oracle))
    return [_at_most("structured search vs grid oracle", worst, 1e-6, f"{samples} random configs")]


def check_figure2(quick: bool = False, seed: int = 0) -> List[CheckResult]:
    points: int = 40 if quick else 400
    checks: List[CheckResult] = []
    for workload in WORKLOADS:
        for n in (10, 100):
            cfg = figure2_config(workload, n, 0.8)
            result = sweep(cfg, points=points)
            first = result.efficiency[1]
            lowest = result.min_efficiency()
            at_star = result.efficiency_at_sigma_star()
            ratio = at_star / lowest
            # E(sigma*) < 1 needs the designed cutoff to give predicted-short jobs a whole server
            reserved = n * cutoff_star(cfg, result.sigma_star)
            star_ok = at_star < 1.0 if reserved >= 1.0 else True
            checks.append(
                CheckResult(
                    name=f"{workload} N={n}: testing pays off",
                    passed=first < 1.0 and lowest < 1.0 and star_ok and ratio <= EFFICIENCY_RATIO_CAP,
                    measured=ratio,
                    threshold=EFFICIENCY_RATIO_CAP,
                    detail=(
                        f"E(first sigma > 0)={first:.6g}, min E={lowest:.4g}, E(sigma*)={at_star:.4g}, "
                        f"N c*(sigma*)={reserved:.3g}"
                    ),
                )
            )
    return checks


SUITES: Dict[str, Callable[[bool, int], List[CheckResult]]] = {
    "analytic": check_analytic,
    "bounds": check_bounds,
    "prop1": check_prop1,
    "thm1": check_thm1,
    "thm2": check_thm2,
    "thm3": check_thm3,
    "prop3": check_prop3,
    "des": check_des,
    "optimizer": check_optimizer,
    "figure2": check_figure2,
}


def run_suite(name: str, quick: bool = False, seed: int = 0) -> List[SuiteReport]:
    """Run one suite, or every suite in order for name == "all"."""
    if name != "all" and name not in SUITES:
        raise VerificationError(f"unknown suite '{name}' (choose from {', '.join(SUITES)}, all)")

    reports: List[SuiteReport] = []
    for suite in SUITES if name == "all" else [name]:
        logger.info(f"running verification suite {suite} (quick={quick})")
        started = time.perf_counter()
        checks = SUITES[suite](quick, seed)
        reports.append(SuiteReport(suite=suite, checks=checks, elapsed=time.perf_counter() - started))
    return reports
