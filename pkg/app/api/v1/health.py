from fastapi import APIRouter

import app
from app.api.util import SettingsDep

router = APIRouter(tags=["health"])


@router.get("/health")
async def health(settings_service: SettingsDep) -> dict[str, str]:
    return {
        "status": "ok",
        "version": app.__version__,
        "environment": settings_service.settings.environment,
    }
