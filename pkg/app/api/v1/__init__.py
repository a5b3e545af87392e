from app.api.v1.estimate import router as estimate_router
from app.api.v1.health import router as health_router

__all__ = ["estimate_router", "health_router"]
