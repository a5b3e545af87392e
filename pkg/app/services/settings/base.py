from typing import Annotated

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    environment: Annotated[str, Field(alias="ENVIRONMENT")] = "development"
    log_level: Annotated[str, Field(alias="MPP_LOG_LEVEL")] = "INFO"
    log_dir: Annotated[str | None, Field(alias="MPP_LOG_DIR")] = None
    bundle_path: Annotated[str, Field(alias="MPP_BUNDLE_PATH")] = "bundle.json"
    api_host: Annotated[str, Field(alias="MPP_API_HOST")] = "0.0.0.0"
    api_port: Annotated[int, Field(gt=0, alias="MPP_API_PORT")] = 8000
    rho_ref: Annotated[float, Field(gt=0, alias="MPP_RHO_REF")] = 1.225
    q_min: Annotated[float, Field(ge=0, alias="MPP_Q_MIN")] = 2.0
    cutoff_hz: Annotated[float, Field(gt=0, alias="MPP_CUTOFF_HZ")] = 10.0
    vx_min: Annotated[float, Field(alias="MPP_VX_MIN")] = 1.0
    align_tol: Annotated[float, Field(gt=0, alias="MPP_ALIGN_TOL")] = 0.05
    max_workers: Annotated[int, Field(ge=1, alias="MPP_MAX_WORKERS")] = 4
    celery_broker_url: Annotated[str, Field(alias="MPP_CELERY_BROKER_URL")] = "redis://localhost:6379/1"
    celery_result_backend: Annotated[str, Field(alias="MPP_CELERY_RESULT_BACKEND")] = "redis://localhost:6379/0"
    # fixes every embedded timestamp for reproducible outputs
    source_date_epoch: Annotated[int | None, Field(alias="SOURCE_DATE_EPOCH")] = None

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        populate_by_name=True,
        validate_assignment=True,
    )
