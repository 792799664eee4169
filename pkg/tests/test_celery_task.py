import pytest

from probelb.core.simulation import ReplicationRequest, ReplicationResult, simulate_replication
from probelb.models.config import SystemConfig
from probelb.tasks.simulation import ReplicationTaskError, run_replication


def _request(cfg: SystemConfig) -> ReplicationRequest:
    return ReplicationRequest(system=cfg.to_json_dict(), cutoff=1.0, sigma=0.1, jobs=2_000, warmup=200, seed=8, index=2)


def test_task_matches_local_replication(es_example: SystemConfig) -> None:
    request = _request(es_example)
    payload = run_replication.apply(args=(request.model_dump(),)).get()
    assert ReplicationResult(**payload) == simulate_replication(request)


def test_malformed_request() -> None:
    with pytest.raises(ReplicationTaskError, match="Malformed"):
        run_replication.apply(args=({"cutoff": 1.0},)).get()
