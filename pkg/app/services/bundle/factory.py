from typing_extensions import override

from app.services.bundle.service import BundleService
from app.services.factory import ServiceFactory
from app.services.settings.service import SettingsService


class BundleServiceFactory(ServiceFactory):
    def __init__(self) -> None:
        super().__init__(BundleService)

    @override
    def create(self, settings_service: SettingsService) -> BundleService:
        return BundleService(settings_service)
