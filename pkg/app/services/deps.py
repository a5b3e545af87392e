from __future__ import annotations

from typing import TYPE_CHECKING, cast

from app.services.schema import ServiceType

if TYPE_CHECKING:
    from app.services.base import Service
    from app.services.bundle.service import BundleService
    from app.services.factory import ServiceFactory
    from app.services.settings.service import SettingsService


def get_service(service_type: ServiceType, default: ServiceFactory | None = None) -> Service:
    from app.services.manager import service_manager

    if not service_manager.factories:
        service_manager.register_factories()
    return service_manager.get(service_type, default)


def get_settings_service() -> SettingsService:
    from app.services.settings.factory import SettingsServiceFactory

    return cast("SettingsService", get_service(ServiceType.SETTINGS_SERVICE, SettingsServiceFactory()))


def get_bundle_service() -> BundleService:
    from app.services.bundle.factory import BundleServiceFactory

    return cast("BundleService", get_service(ServiceType.BUNDLE_SERVICE, BundleServiceFactory()))
