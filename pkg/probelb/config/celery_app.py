from celery import Celery

from .settings import settings

app: Celery = Celery("probelb")

app.conf.update(
    broker_url=settings.celery_broker_url,
    result_backend=settings.celery_result_backend,
    task_serializer="json",
    accept_content=["json"],
    result_serializer="json",
    timezone="UTC",
    enable_utc=True,
    task_track_started=True,
    task_time_limit=settings.task_timeout,
    task_soft_time_limit=max(settings.task_timeout - 5 * 60, settings.task_timeout // 2),
    task_always_eager=settings.celery_always_eager,
    task_eager_propagates=True,
    worker_prefetch_multiplier=1,
    task_acks_late=True,
    worker_max_tasks_per_child=1000,
)

app.autodiscover_tasks(["probelb.tasks"])


if __name__ == "__main__":
    app.start()
