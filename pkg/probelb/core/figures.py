"""
Presets and sigma-sweeps behind the efficiency figures.

figure1: heavy-tailed two-point sizes (alpha = 1, x_m = 1) with an
exponential-saturating profile (a = 10, b = 1) starting at the product
coupling. figure2: x_m = 25, x_M = 540 under three workload mixes with a
no-false-small profile (a = 3). Both use identity cost and gamma = 10.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from probelb.core.design import sigma_star
from probelb.core.optimize import OptimumPoint, min_cost_curve, sigma_grid
from probelb.errors import ConfigurationError, InfeasibleError
from probelb.models.config import SystemConfig
from probelb.models.profile import ProfileFamily
from probelb.utils.csvio import write_csv
from probelb.utils.plotting import save_line_plot

logger = logging.getLogger(__name__)

Preset = Literal["figure1", "figure2"]

SWEEP_COLUMNS: List[str] = ["sigma", "c_opt", "d_opt", "efficiency", "sigma_star_marker"]

WORKLOADS: Dict[str, float] = {"p50": 0.5, "p20": 0.2, "p80": 0.8}
FIGURE2_SIZES: Tuple[float, float] = (25.0, 540.0)
FIGURE1_BETAS: Tuple[float, ...] = (0.5, 1.5, 2.0)
FIGURE1_X_M: Tuple[float, ...] = (1e2, 1e3, 1e4, 1e5)
RHOS: Tuple[float, ...] = (0.7, 0.8, 0.9)
SERVER_COUNTS: Tuple[int, ...] = (10, 100)
GAMMA: float = 10.0


class SweepResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma: List[float]
    c_opt: List[float]
    d_opt: List[float]
    efficiency: List[float]
    sigma_star: float
    sigma_star_index: int
    metadata: Dict[str, Any]

    def rows(self) -> Iterator[Tuple[float, float, float, float, int]]:
        for i, row in enumerate(zip(self.sigma, self.c_opt, self.d_opt, self.efficiency)):
            yield (*row, int(i == self.sigma_star_index))

    def min_efficiency(self) -> float:
        return float(np.min(self.efficiency))

    def efficiency_at_sigma_star(self) -> float:
        return self.efficiency[self.sigma_star_index]


def figure1_config(
    beta: float, n_servers: int, rho: float, x_M: float, alpha: float = 1.0, x_m: float = 1.0
) -> SystemConfig:
    return SystemConfig(
        n_servers=n_servers,
        rho=rho,
        dist={"pareto": {"alpha": alpha, "beta": beta, "x_m": x_m, "x_M": x_M}},
        profile={"family": ProfileFamily.EXPONENTIAL_SATURATING, "a": 10.0, "b": 1.0},
    )


def figure2_config(workload: str, n_servers: int, rho: float, a: float = 3.0) -> SystemConfig:
    if workload not in WORKLOADS:
        raise ConfigurationError(f"unknown workload '{workload}' (choose from {', '.join(WORKLOADS)})")
    x_m, x_M = FIGURE2_SIZES
    return SystemConfig(
        n_servers=n_servers,
        rho=rho,
        dist={"x_m": x_m, "x_M": x_M, "p_small": WORKLOADS[workload]},
        profile={"family": ProfileFamily.NO_FALSE_SMALL, "a": a},
    )


def preset_config(
    preset: Preset,
    n_servers: int = 100,
    rho: float = 0.8,
    workload: str = "p50",
    beta: float = 0.5,
    x_M: float = 1e5,
) -> SystemConfig:
    if preset == "figure1":
        return figure1_config(beta=beta, n_servers=n_servers, rho=rho, x_M=x_M)
    if preset == "figure2":
        return figure2_config(workload=workload, n_servers=n_servers, rho=rho)
    raise ConfigurationError(f"unknown preset '{preset}'")


def system_metadata(cfg: SystemConfig) -> Dict[str, Any]:
    profile = cfg.profile
    return {
        "n_servers": cfg.n_servers,
        "rho": cfg.rho,
        "lambda_per_server": cfg.lambda_per_server,
        "x_m": cfg.dist.x_m,
        "x_M": cfg.dist.x_M,
        "p_small": cfg.dist.p_small,
        "mean_size": cfg.dist.mean(),
        "alpha": cfg.dist.alpha,
        "beta": cfg.dist.beta,
        "profile": profile.family.value,
        "a": profile.a,
        "b": profile.b,
        "pmm0": profile.pmm0,
        "pMM0": profile.pMM0,
        "cost_fn": cfg.cost_fn.kind,
    }


def sweep(
    cfg: SystemConfig,
    sigma_max: Optional[float] = None,
    points: int = 400,
    gamma: float = GAMMA,
    spacing: Literal["hybrid", "linear", "geometric"] = "hybrid",
    workers: int = 1,
) -> SweepResult:
    """Optimal cutoff, cost and efficiency over a sigma grid with sigma* inserted."""
    limit: float = 0.99 / cfg.total_arrival_rate
    sigma_max = limit if sigma_max is None else sigma_max
    if not cfg.total_arrival_rate * sigma_max < 1.0:
        raise ConfigurationError(f"sigma_max={sigma_max:g} must be below 1/Lambda={1.0 / cfg.total_arrival_rate:g}")

    marker: float = sigma_star(cfg, gamma)
    grid = np.unique(np.append(sigma_grid(sigma_max, points, spacing), marker))
    optima: List[OptimumPoint] = min_cost_curve(cfg, grid, workers)

    base: float = optima[0].value
    if not np.isfinite(base):
        raise InfeasibleError("no stable cutoff exists without testing")

    unstable: int = sum(1 for p in optima if not p.feasible)
    if unstable:
        logger.warning(f"{unstable} sigma grid points have no stable cutoff")

    return SweepResult(
        sigma=grid.tolist(),
        c_opt=[p.argmin for p in optima],
        d_opt=[p.value for p in optima],
        efficiency=[p.value / base for p in optima],
        sigma_star=marker,
        sigma_star_index=int(np.searchsorted(grid, marker)),
        metadata={**system_metadata(cfg), "gamma": gamma, "sigma_star": marker, "points": len(grid)},
    )


def write_sweep_csv(result: SweepResult, path: Path, extra: Optional[Dict[str, Any]] = None) -> Path:
    return write_csv(path, SWEEP_COLUMNS, result.rows(), metadata={**result.metadata, **(extra or {})})


def _panel_svg(path: Path, curves: Dict[str, SweepResult], title: str) -> Path:
    series = {label: (r.sigma, r.efficiency) for label, r in curves.items()}
    return save_line_plot(path, series, title=title, xlabel="testing time sigma", ylabel="efficiency E", log_x=True, reference=1.0)


def figure1(
    out_dir: Path,
    points: int = 400,
    betas: Sequence[float] = FIGURE1_BETAS,
    x_Ms: Sequence[float] = FIGURE1_X_M,
    rhos: Sequence[float] = RHOS,
    server_counts: Sequence[int] = SERVER_COUNTS,
    workers: int = 1,
) -> List[Path]:
    """One CSV per curve and one SVG per (beta, rho, N) panel with a line per x_M."""
    written: List[Path] = []
    for beta in betas:
        for rho in rhos:
            for n in server_counts:
                curves: Dict[str, SweepResult] = {}
                for x_M in x_Ms:
                    cfg = figure1_config(beta=beta, n_servers=n, rho=rho, x_M=x_M)
                    result = sweep(cfg, points=points, workers=workers)
                    name = f"figure1_beta{beta:g}_rho{rho:g}_N{n}_xM{x_M:g}.csv"
                    written.append(write_sweep_csv(result, out_dir / name, extra={"preset": "figure1"}))
                    curves[f"x_M={x_M:g}"] = result
                    logger.info(f"figure1 beta={beta:g} rho={rho:g} N={n} x_M={x_M:g}: min E={result.min_efficiency():.4g}")
                svg = out_dir / f"figure1_beta{beta:g}_rho{rho:g}_N{n}.svg"
                written.append(_panel_svg(svg, curves, f"beta={beta:g}, rho={rho:g}, N={n}"))
    return written


def figure2(
    out_dir: Path,
    points: int = 400,
    workloads: Sequence[str] = tuple(WORKLOADS),
    rhos: Sequence[float] = RHOS,
    server_counts: Sequence[int] = SERVER_COUNTS,
    workers: int = 1,
) -> List[Path]:
    """One CSV per curve and one SVG per (N, rho) panel with a line per workload."""
    written: List[Path] = []
    for n in server_counts:
        for rho in rhos:
            curves: Dict[str, SweepResult] = {}
            for workload in workloads:
                cfg = figure2_config(workload, n, rho)
                result = sweep(cfg, points=points, workers=workers)
                name = f"figure2_{workload}_rho{rho:g}_N{n}.csv"
                written.append(
                    write_sweep_csv(result, out_dir / name, extra={"preset": "figure2", "workload": workload})
                )
                curves[workload] = result
                logger.info(
                    f"figure2 {workload} rho={rho:g} N={n}: E(sigma*)={result.efficiency_at_sigma_star():.4g}, "
                    f"min E={result.min_efficiency():.4g}"
                )
            svg = out_dir / f"figure2_rho{rho:g}_N{n}.svg"
            written.append(_panel_svg(svg, curves, f"rho={rho:g}, N={n}"))
    return written
