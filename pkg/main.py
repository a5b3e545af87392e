from app.logging.logger import logger
from app.main import create_app
from app.services.deps import get_settings_service

if __name__ == "__main__":
    import uvicorn

    settings = get_settings_service().settings
    app = create_app()
    logger.debug(f"Serving on {settings.api_host}:{settings.api_port}")

    uvicorn.run(
        app,
        host=settings.api_host,
        port=settings.api_port,
        log_level="error",
        reload=False,
        loop="asyncio",
    )
