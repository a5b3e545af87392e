"""Celery app for calibrations and flight validations that outlive an HTTP request."""
from celery import Celery

celery_app = Celery("mpp", include=["celery_tasks.workers.calibration"])
celery_app.config_from_object("celery_tasks.celeryconfig")
