from app.services.deps import get_settings_service

_settings = get_settings_service().settings

broker_url = _settings.celery_broker_url
result_backend = _settings.celery_result_backend
accept_content = ["json"]
task_serializer = "json"
result_serializer = "json"
timezone = "UTC"
enable_utc = True
# calibrations hold a worker for tens of seconds
worker_prefetch_multiplier = 1
task_acks_late = True
