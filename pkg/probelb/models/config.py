from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from probelb.models.profile import ProfileCurve, ProfileFamily
from probelb.models.workload import TwoPointJobDist, pareto_tail_dist


class CostFunction(BaseModel):
    """Cost f applied to the scheduler sojourn time: identity or f(t) = kappa * t."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["identity", "scaled"] = "identity"
    kappa: float = Field(default=1.0, gt=0.0)

    def __call__(self, t: float) -> float:
        if self.kind == "identity":
            return t
        return self.kappa * t

    def derivative_at_zero(self) -> float:
        return 1.0 if self.kind == "identity" else self.kappa


class SystemConfig(BaseModel):
    """
    N servers fed by one testing scheduler.

    Accepts either lambda_per_server or rho (lambda = rho / E[X]), and either
    an explicit two-point law or {"pareto": {...}} for the heavy-tail form.
    """

    model_config = ConfigDict(frozen=True)

    n_servers: int = Field(ge=2)
    lambda_per_server: float = Field(gt=0.0)
    dist: TwoPointJobDist
    profile: ProfileCurve
    cost_fn: CostFunction = Field(default_factory=CostFunction)

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data

        values: Dict[str, Any] = dict(data)

        dist = values.get("dist")
        if isinstance(dist, dict) and "pareto" in dist:
            dist = pareto_tail_dist(**dist["pareto"])
        elif isinstance(dist, dict):
            dist = TwoPointJobDist(**dist)
        values["dist"] = dist

        rho = values.pop("rho", None)
        if rho is not None:
            if "lambda_per_server" in values:
                raise ValueError("give either rho or lambda_per_server, not both")
            if isinstance(dist, TwoPointJobDist):
                values["lambda_per_server"] = float(rho) / dist.mean()

        profile = values.get("profile")
        if profile is None:
            profile = {"family": ProfileFamily.INDEPENDENT_CONSTANT}
        if isinstance(profile, dict) and isinstance(dist, TwoPointJobDist):
            profile = ProfileCurve(**{**profile, "dist": dist})
        values["profile"] = profile

        if values.get("cost_fn") is None:
            values.pop("cost_fn", None)
        return values

    @model_validator(mode="after")
    def _check_stability(self) -> "SystemConfig":
        if self.profile.dist != self.dist:
            raise ValueError("profile curve belongs to a different job-size distribution")
        if not self.rho < 1.0:
            raise ValueError(f"unstable system: network load rho = lambda * E[X] = {self.rho:.6g} must be < 1")
        return self

    @property
    def rho(self) -> float:
        return self.lambda_per_server * self.dist.mean()

    @property
    def total_arrival_rate(self) -> float:
        """Lambda = lambda * N."""
        return self.lambda_per_server * self.n_servers

    def with_servers(self, n_servers: int) -> "SystemConfig":
        return SystemConfig(**{**self._fields(), "n_servers": n_servers})

    def with_rho(self, rho: float) -> "SystemConfig":
        return SystemConfig(**{**self._fields(), "lambda_per_server": rho / self.dist.mean()})

    def with_profile(self, **profile: Any) -> "SystemConfig":
        return SystemConfig(**{**self._fields(), "profile": profile})

    def _fields(self) -> Dict[str, Any]:
        return {
            "n_servers": self.n_servers,
            "lambda_per_server": self.lambda_per_server,
            "dist": self.dist,
            "profile": self.profile,
            "cost_fn": self.cost_fn,
        }

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "n_servers": self.n_servers,
            "lambda_per_server": self.lambda_per_server,
            "dist": self.dist.model_dump(exclude_none=True),
            "profile": self.profile.model_dump(exclude_none=True, mode="json"),
            "cost_fn": self.cost_fn.model_dump(),
        }


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    sigma_max: Optional[float] = Field(default=None, alias="max", gt=0.0)
    points: int = Field(default=400, ge=2)
    spacing: Literal["hybrid", "linear", "geometric"] = "hybrid"


class SimulationSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    jobs: int = Field(default=10**6, ge=1)
    warmup: Optional[int] = Field(default=None, ge=0)
    seed: int = 20240101
    replications: int = Field(default=20, ge=1)

    @model_validator(mode="after")
    def _check_warmup(self) -> "SimulationSpec":
        if self.jobs <= self.effective_warmup:
            raise ValueError(f"jobs ({self.jobs}) must exceed warmup ({self.effective_warmup})")
        return self

    @property
    def effective_warmup(self) -> int:
        return self.warmup if self.warmup is not None else self.jobs // 10


class DesignSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: float = Field(default=10.0, gt=0.0)
    theta: Optional[float] = None
    tau: float = Field(default=1.0, ge=0.0)


class OutputSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    csv: Optional[str] = None
    svg: Optional[str] = None


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    system: SystemConfig
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    sim: SimulationSpec = Field(default_factory=SimulationSpec)
    design: DesignSpec = Field(default_factory=DesignSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)

    @model_validator(mode="before")
    @classmethod
    def _wrap_bare_system(cls, data: Any) -> Any:
        if isinstance(data, dict) and "system" not in data and "n_servers" in data:
            return {"system": data}
        return data

    def sigma_max(self) -> float:
        """Largest swept testing time; defaults to 99% of the scheduler stability limit 1/Lambda."""
        if self.sweep.sigma_max is not None:
            return self.sweep.sigma_max
        return 0.99 / self.system.total_arrival_rate

    def theta(self) -> Optional[float]:
        if self.design.theta is not None:
            return self.design.theta
        beta: Optional[float] = self.system.dist.beta
        return None if beta is None else beta / 2.0

    def validate_config(self, grid_points: int = 50) -> List[str]:
        errors: List[str] = []
        system: SystemConfig = self.system

        limit: float = 1.0 / system.total_arrival_rate
        sigma_max: float = self.sigma_max()
        if not sigma_max < limit:
            errors.append(f"sweep max {sigma_max:g} reaches the scheduler limit 1/Lambda = {limit:g}")

        grid: List[float] = [sigma_max * i / (grid_points - 1) for i in range(grid_points)]
        errors.extend(f"profile: {v}" for v in system.profile.check_assumptions(grid))

        theta: Optional[float] = self.theta()
        if theta is not None and system.dist.beta is not None and not (0.0 < theta < system.dist.beta):
            errors.append(f"design theta {theta:g} must lie in (0, beta={system.dist.beta:g})")
        if self.design.theta is not None and system.dist.beta is None:
            errors.append("design theta is set but the size distribution has no tail exponent beta")

        return errors

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "system": self.system.to_json_dict(),
            "sweep": self.sweep.model_dump(by_alias=True),
            "sim": self.sim.model_dump(),
            "design": self.design.model_dump(),
            "output": self.output.model_dump(),
        }
