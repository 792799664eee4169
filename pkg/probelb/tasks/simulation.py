import logging
import time
from typing import Any, Dict

from probelb.config.celery_app import app
from probelb.core.simulation import ReplicationRequest, ReplicationResult, simulate_replication
from probelb.errors import SimulationError

logger = logging.getLogger(__name__)


class ReplicationTaskError(SimulationError):
    pass


@app.task(bind=True)
def run_replication(self: Any, request: Dict[str, Any]) -> Dict[str, Any]:
    """Run one simulation replication on a worker and return its per-replication statistics."""
    start_time: float = time.time()

    try:
        parsed: ReplicationRequest = ReplicationRequest(**request)
    except Exception as e:
        raise ReplicationTaskError(f"Malformed replication request: {e}") from e

    logger.info(f"Replication {parsed.index} started (task {self.request.id}, {parsed.jobs} jobs)")
    result: ReplicationResult = simulate_replication(parsed)
    logger.info(f"Replication {parsed.index} finished in {round(time.time() - start_time, 2)}s")

    return result.model_dump()
