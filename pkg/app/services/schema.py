from enum import Enum


class ServiceType(str, Enum):
    SETTINGS_SERVICE = "settings_service"
    BUNDLE_SERVICE = "bundle_service"
