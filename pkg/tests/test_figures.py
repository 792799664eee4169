from pathlib import Path

import pytest

from probelb.core.design import sigma_star
from probelb.core.figures import figure1_config, figure2, figure2_config, preset_config, sweep, write_sweep_csv
from probelb.errors import ConfigurationError
from probelb.models.config import SystemConfig
from probelb.utils.csvio import read_csv


@pytest.mark.parametrize("workload,mean", [("p50", 282.5), ("p20", 437.0), ("p80", 128.0)])
def test_figure2_workloads(workload: str, mean: float) -> None:
    cfg = figure2_config(workload, n_servers=10, rho=0.8)
    assert cfg.dist.mean() == pytest.approx(mean)
    assert cfg.rho == pytest.approx(0.8)
    assert cfg.profile.family == "no_false_small"


def test_figure1_config() -> None:
    cfg = figure1_config(beta=0.5, n_servers=100, rho=0.9, x_M=1e4)
    assert cfg.dist.p_large == pytest.approx(0.01)
    assert (cfg.profile.a, cfg.profile.b) == (10.0, 1.0)
    assert cfg.profile.pmm0 == pytest.approx(cfg.dist.p_small**2)


def test_unknown_presets() -> None:
    with pytest.raises(ConfigurationError):
        figure2_config("p99", n_servers=10, rho=0.8)
    with pytest.raises(ConfigurationError):
        preset_config("figure3")  # type: ignore[arg-type]


def test_sweep(es_example: SystemConfig, tmp_path: Path) -> None:
    result = sweep(es_example, points=12)
    assert result.sigma[0] == 0.0
    assert result.efficiency[0] == 1.0
    assert result.sigma[result.sigma_star_index] == pytest.approx(sigma_star(es_example, 10.0))
    assert result.efficiency_at_sigma_star() == result.efficiency[result.sigma_star_index]
    assert result.min_efficiency() <= 1.0

    path = write_sweep_csv(result, tmp_path / "sweep.csv", extra={"preset": "config"})
    metadata, rows = read_csv(path)
    assert metadata["preset"] == "config"
    assert metadata["profile"] == "exponential_saturating"
    assert len(rows) == len(result.sigma)
    assert sum(int(r["sigma_star_marker"]) for r in rows) == 1


def test_sweep_rejects_unstable_range(es_example: SystemConfig) -> None:
    with pytest.raises(ConfigurationError):
        sweep(es_example, sigma_max=1.0 / es_example.total_arrival_rate, points=5)


def test_figure2_panel(tmp_path: Path) -> None:
    written = figure2(tmp_path, points=8, workloads=("p80",), rhos=(0.8,), server_counts=(10,))
    assert [p.name for p in written] == ["figure2_p80_rho0.8_N10.csv", "figure2_rho0.8_N10.svg"]
    assert all(p.exists() for p in written)
