from typing_extensions import override

from app.services.factory import ServiceFactory
from app.services.settings.service import SettingsService


class SettingsServiceFactory(ServiceFactory):
    def __init__(self) -> None:
        super().__init__(SettingsService)

    @override
    def create(self) -> SettingsService:
        return SettingsService.initialize()
