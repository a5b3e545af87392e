from __future__ import annotations

from pathlib import Path

from app.logging import configure, logger
from app.services.deps import get_bundle_service, get_settings_service
from app.services.manager import service_manager


def initialize_services() -> None:
    """Create the settings service, route logging through it and warm the bundle cache."""
    settings = get_settings_service().settings
    configure(settings.log_level, settings.log_dir)
    if Path(settings.bundle_path).is_file():
        bundle = get_bundle_service().get()
        logger.info(f"serving bundle {settings.bundle_path} (degree {bundle.degree})")
    else:
        logger.warning(f"bundle {settings.bundle_path} not found; estimate routes will fail until it exists")


async def teardown_services() -> None:
    """Teardown all the services."""
    await service_manager.teardown()
