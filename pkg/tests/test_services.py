import asyncio
from pathlib import Path

import pytest

from app.core.errors import DataValidationError
from app.core.estimate import StreamEstimator
from app.core.model import CalibrationBundle
from app.formats.bundle import save_bundle
from app.services.deps import get_bundle_service, get_settings_service
from app.services.schema import ServiceType
from app.services.settings.base import Settings


def test_settings_from_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("MPP_CUTOFF_HZ", "8.5")
    monkeypatch.setenv("MPP_MAX_WORKERS", "2")
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    settings = Settings()
    assert settings.cutoff_hz == 8.5
    assert settings.max_workers == 2
    assert settings.source_date_epoch == 0
    assert settings.q_min == 2.0


def test_settings_service_set(fresh_services) -> None:
    service = get_settings_service()
    assert service.set("log_level", "DEBUG").log_level == "DEBUG"
    assert get_settings_service().settings.log_level == "DEBUG"
    with pytest.raises(ValueError):
        service.set("cutoff_hz", -1.0)


def test_bundle_service_depends_on_settings(fresh_services) -> None:
    bundles = get_bundle_service()
    assert set(fresh_services.services) == {ServiceType.SETTINGS_SERVICE.value, ServiceType.BUNDLE_SERVICE.value}
    assert bundles.settings_service is get_settings_service()
    assert bundles.ready


def test_bundle_cache_and_invalidate(fresh_services, bundle: CalibrationBundle, tmp_path: Path) -> None:
    path = save_bundle(bundle, tmp_path / "b.json")
    service = get_bundle_service()
    first = service.get(path)
    assert service.get(str(path)) is first
    service.invalidate(path)
    assert service.get(path) is not first
    assert service.get(path) == first


def test_bundle_service_defaults_to_settings_path(fresh_services, bundle_file: Path) -> None:
    get_settings_service().set("bundle_path", str(bundle_file))
    service = get_bundle_service()
    assert service.get().degree == 3
    estimator = service.estimator(None, fs=33.0)
    assert isinstance(estimator, StreamEstimator)
    with pytest.raises(DataValidationError):
        service.get(bundle_file.with_name("other.json"))


def test_teardown_clears_services(fresh_services) -> None:
    get_bundle_service()
    asyncio.run(fresh_services.teardown())
    assert fresh_services.services == {}
    # factories are registered again on demand
    assert get_settings_service() is not None
