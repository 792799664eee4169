"""
Simulator of the full system: Poisson arrivals, an M/M/1 testing scheduler,
prediction sampling, cutoff routing and N FCFS unit-rate servers.

Every station is FCFS and is fed in the order in which jobs leave the
scheduler, so each one is advanced with the Lindley recursion

    depart_i = max(arrive_i, depart_{i-1}) + service_i

evaluated in closed form as a running maximum. This yields the same sample
path as an event calendar ordered by (time, job id).
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import stats

from probelb.config.settings import settings
from probelb.core.analytic import DispatchRule, stability_report
from probelb.errors import SimulationError, UnstableSystemError
from probelb.models.config import SystemConfig
from probelb.utils.csvio import write_event_log

logger = logging.getLogger(__name__)

CONFIDENCE: float = 0.95
LOW_MARGIN: float = 0.05


class Estimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    half_width: float
    std_error: float

    @classmethod
    def from_samples(cls, samples: List[float], confidence: float = CONFIDENCE) -> "Estimate":
        values = np.asarray(samples, dtype=float)
        n: int = len(values)
        if n < 2:
            return cls(mean=float(values.mean()), half_width=math.nan, std_error=math.nan)
        std_error: float = float(values.std(ddof=1) / math.sqrt(n))
        quantile: float = float(stats.t.ppf(0.5 + confidence / 2.0, n - 1))
        return cls(mean=float(values.mean()), half_width=quantile * std_error, std_error=std_error)

    def covers(self, value: float, standard_errors: float = 3.0) -> bool:
        return abs(self.mean - value) <= standard_errors * self.std_error


class ReplicationRequest(BaseModel):
    """Everything one replication needs; JSON-safe so it can travel through the broker."""

    model_config = ConfigDict(frozen=True)

    system: Dict[str, Any]
    cutoff: float
    sigma: float
    jobs: int
    warmup: int
    seed: int
    index: int
    event_log: Optional[str] = None


class ReplicationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    jobs_completed: int
    mean_scheduler_sojourn: float
    mean_servers_waiting: float
    mean_total: float
    predicted_short_fraction: float
    utilization: List[float]
    mean_in_system: List[float]
    arrival_rate: List[float]
    mean_sojourn: List[float]
    short_counts: List[int]
    long_counts: List[int]


class SimReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean_scheduler_sojourn: Estimate
    mean_servers_waiting: Estimate
    mean_total: Estimate
    empirical_prediction_marginal: Estimate
    jobs_completed: int
    per_server_utilization: List[float]
    per_server_mean_in_system: List[float]
    per_server_little_product: List[float]
    per_server_short_jobs: List[int]
    per_server_long_jobs: List[int]
    replication_totals: List[float]
    seed: int
    replications: int


def replication_rng(seed: int, index: int) -> np.random.Generator:
    """Independent substream for replication `index` of master seed `seed`."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def fcfs_departures(arrivals: np.ndarray, services: np.ndarray) -> np.ndarray:
    """Departure times of a FCFS single-server queue fed in the given (sorted) order."""
    if len(arrivals) == 0:
        return arrivals.copy()
    work = np.cumsum(services)
    previous_work = work - services
    return work + np.maximum.accumulate(arrivals - previous_work)


def route(rule: DispatchRule, predicted_short: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    0-based server index per job: predicted-short jobs pick uniformly among the
    short pool with probability floor_c / c, predicted-long jobs among the long
    pool with probability (N - 1 - floor_c) / (N - c); everything else goes to
    the mid server.
    """
    n: int = rule.n_servers
    c: float = rule.cutoff
    floor_c: int = rule.floor_c
    servers = np.full(len(u), floor_c, dtype=np.int64)

    short_slot = np.floor(u * c).astype(np.int64)
    to_short = predicted_short & (short_slot < floor_c)
    servers[to_short] = short_slot[to_short]

    long_slot = np.floor(u * (n - c)).astype(np.int64)
    to_long = ~predicted_short & (long_slot < rule.long_servers)
    servers[to_long] = floor_c + 1 + long_slot[to_long]
    return servers


def _window_overlap(start: np.ndarray, end: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return np.clip(np.minimum(end, hi) - np.maximum(start, lo), 0.0, None)


def simulate_replication(request: ReplicationRequest) -> ReplicationResult:
    cfg: SystemConfig = SystemConfig(**request.system)
    rule: DispatchRule = DispatchRule.for_config(cfg, request.cutoff)
    rng: np.random.Generator = replication_rng(request.seed, request.index)
    n_jobs: int = request.jobs
    n: int = cfg.n_servers
    Lambda: float = cfg.total_arrival_rate
    sigma: float = request.sigma

    arrivals = np.cumsum(rng.exponential(1.0 / Lambda, n_jobs))
    if sigma > 0.0:
        test_done = fcfs_departures(arrivals, rng.exponential(sigma, n_jobs))
    else:
        test_done = arrivals.copy()

    sizes = cfg.dist.sample(rng, n_jobs)
    is_small = sizes == cfg.dist.x_m
    p_small_given_small: float = cfg.profile.conditional_prediction(cfg.dist.x_m, sigma)
    p_small_given_large: float = cfg.profile.conditional_prediction(cfg.dist.x_M, sigma)
    predicted_short = rng.random(n_jobs) < np.where(is_small, p_small_given_small, p_small_given_large)
    servers = route(rule, predicted_short, rng.random(n_jobs))

    # test_done is nondecreasing, so a stable sort keeps each server's jobs in FCFS order
    order = np.argsort(servers, kind="stable")
    bounds = np.searchsorted(servers[order], np.arange(n + 1))
    start = np.empty(n_jobs)
    depart = np.empty(n_jobs)
    for s in range(n):
        idx = order[bounds[s] : bounds[s + 1]]
        depart[idx] = fcfs_departures(test_done[idx], sizes[idx])
        start[idx] = depart[idx] - sizes[idx]

    if request.event_log:
        write_event_log(
            Path(request.event_log),
            arrivals=arrivals,
            test_done=test_done,
            servers=servers,
            start=start,
            depart=depart,
            sizes=sizes,
            predicted_short=predicted_short,
            x_m=cfg.dist.x_m,
            x_M=cfg.dist.x_M,
        )

    kept = slice(request.warmup, n_jobs)
    sojourn = test_done[kept] - arrivals[kept]
    waiting = start[kept] - test_done[kept]
    # cost functions are linear, so f of the mean sojourn is the mean cost
    total: float = cfg.cost_fn(float(sojourn.mean())) + float(waiting.mean())

    lo: float = float(arrivals[request.warmup])
    hi: float = float(arrivals[-1])
    horizon: float = hi - lo
    kept_servers = servers[kept]
    busy = np.bincount(servers, weights=_window_overlap(start, depart, lo, hi), minlength=n)
    present = np.bincount(servers, weights=_window_overlap(test_done, depart, lo, hi), minlength=n)
    counts = np.bincount(kept_servers, minlength=n)
    sojourn_sums = np.bincount(kept_servers, weights=depart[kept] - test_done[kept], minlength=n)
    mean_sojourn = np.divide(sojourn_sums, counts, out=np.zeros(n), where=counts > 0)

    kept_short = predicted_short[kept]
    return ReplicationResult(
        index=request.index,
        jobs_completed=n_jobs - request.warmup,
        mean_scheduler_sojourn=float(sojourn.mean()),
        mean_servers_waiting=float(waiting.mean()),
        mean_total=float(total),
        predicted_short_fraction=float(kept_short.mean()),
        utilization=(busy / horizon).tolist(),
        mean_in_system=(present / horizon).tolist(),
        arrival_rate=(counts / horizon).tolist(),
        mean_sojourn=mean_sojourn.tolist(),
        short_counts=np.bincount(kept_servers[kept_short], minlength=n).tolist(),
        long_counts=np.bincount(kept_servers[~kept_short], minlength=n).tolist(),
    )


def aggregate(results: List[ReplicationResult], seed: int) -> SimReport:
    results = sorted(results, key=lambda r: r.index)
    utilization = np.mean([r.utilization for r in results], axis=0)
    in_system = np.mean([r.mean_in_system for r in results], axis=0)
    little = np.mean([np.multiply(r.arrival_rate, r.mean_sojourn) for r in results], axis=0)

    return SimReport(
        mean_scheduler_sojourn=Estimate.from_samples([r.mean_scheduler_sojourn for r in results]),
        mean_servers_waiting=Estimate.from_samples([r.mean_servers_waiting for r in results]),
        mean_total=Estimate.from_samples([r.mean_total for r in results]),
        empirical_prediction_marginal=Estimate.from_samples([r.predicted_short_fraction for r in results]),
        jobs_completed=sum(r.jobs_completed for r in results),
        per_server_utilization=utilization.tolist(),
        per_server_mean_in_system=in_system.tolist(),
        per_server_little_product=little.tolist(),
        per_server_short_jobs=np.sum([r.short_counts for r in results], axis=0).tolist(),
        per_server_long_jobs=np.sum([r.long_counts for r in results], axis=0).tolist(),
        replication_totals=[r.mean_total for r in results],
        seed=seed,
        replications=len(results),
    )


def _run_celery(requests: List[ReplicationRequest]) -> List[ReplicationResult]:
    from celery import group

    from probelb.tasks.simulation import run_replication

    logger.info(f"dispatching {len(requests)} replications to the Celery workers")
    job = group(run_replication.s(r.model_dump()) for r in requests)
    payloads: List[Dict[str, Any]] = job.apply_async().get(timeout=settings.task_timeout)
    return [ReplicationResult(**p) for p in payloads]


def replicate_parallel(
    cfg: SystemConfig,
    rule: DispatchRule,
    sigma: float,
    jobs: int,
    warmup: int,
    seed: int,
    replications: int,
    streams: int = 1,
    event_log: Optional[Path] = None,
) -> SimReport:
    """
    Run independent replications, each on its own substream of `seed`.

    The statistics do not depend on `streams` or on the executor: every
    replication draws from replication_rng(seed, index) and results are
    reduced by index.
    """
    if streams < 1:
        raise SimulationError(f"streams must be at least 1 (got {streams})")
    if replications < 1:
        raise SimulationError(f"replications must be at least 1 (got {replications})")

    system: Dict[str, Any] = cfg.to_json_dict()
    requests: List[ReplicationRequest] = [
        ReplicationRequest(
            system=system,
            cutoff=rule.cutoff,
            sigma=sigma,
            jobs=jobs,
            warmup=warmup,
            seed=seed,
            index=i,
            event_log=str(event_log) if (event_log is not None and i == 0) else None,
        )
        for i in range(replications)
    ]

    if settings.executor == "celery":
        results: List[ReplicationResult] = _run_celery(requests)
    elif streams == 1:
        results = [simulate_replication(r) for r in requests]
    else:
        with ProcessPoolExecutor(max_workers=streams) as pool:
            results = list(pool.map(simulate_replication, requests))

    return aggregate(results, seed)


def simulate(
    cfg: SystemConfig,
    rule: DispatchRule,
    sigma: float,
    jobs: int = 10**6,
    warmup: Optional[int] = None,
    seed: int = 0,
    replications: int = 20,
    streams: int = 1,
    event_log: Optional[Path] = None,
) -> SimReport:
    warmup = jobs // 10 if warmup is None else warmup
    if jobs <= warmup:
        raise SimulationError(f"jobs ({jobs}) must exceed warmup ({warmup})")
    if rule.n_servers != cfg.n_servers:
        raise SimulationError(f"rule is for {rule.n_servers} servers, system has {cfg.n_servers}")

    report = stability_report(cfg, rule, sigma)
    if not report.stable:
        raise UnstableSystemError(
            f"refusing to simulate an unstable system (c={rule.cutoff:g}, sigma={sigma:g})", condition="simulation"
        )
    margin: float = min(report.scheduler_margin, report.min_server_margin())
    if margin < LOW_MARGIN:
        logger.warning(f"stability margin {margin:.3g} is small; estimates will converge slowly")

    logger.info(f"simulating {replications} x {jobs} jobs (N={cfg.n_servers}, c={rule.cutoff:g}, sigma={sigma:g})")
    return replicate_parallel(cfg, rule, sigma, jobs, warmup, seed, replications, streams, event_log)
