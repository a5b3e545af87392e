from typing import Annotated

from fastapi import Depends

from app.services.bundle.service import BundleService
from app.services.deps import get_bundle_service, get_settings_service
from app.services.settings.service import SettingsService

SettingsDep = Annotated[SettingsService, Depends(get_settings_service)]
BundleDep = Annotated[BundleService, Depends(get_bundle_service)]
