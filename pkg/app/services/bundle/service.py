from __future__ import annotations

from pathlib import Path

from app.core.estimate import StreamEstimator
from app.core.model import CalibrationBundle
from app.formats.bundle import load_bundle
from app.logging import logger
from app.services.base import Service
from app.services.settings.service import SettingsService
from app.util.concurrency import KeyedMemoryLockManager


class BundleService(Service):
    """Loads calibration bundles once per path and hands out per-stream estimators."""

    name = "bundle_service"

    def __init__(self, settings_service: SettingsService):
        super().__init__()
        self.settings_service = settings_service
        self.bundles: dict[str, CalibrationBundle] = {}
        self.keyed_lock = KeyedMemoryLockManager()

    def _resolve(self, path: str | Path | None) -> str:
        target = path if path is not None else self.settings_service.settings.bundle_path
        return str(Path(target).resolve())

    def get(self, path: str | Path | None = None) -> CalibrationBundle:
        key = self._resolve(path)
        with self.keyed_lock.lock(key):
            if key not in self.bundles:
                logger.debug(f"Load bundle {key}")
                self.bundles[key] = load_bundle(key)
        return self.bundles[key]

    def estimator(self, path: str | Path | None, fs: float, fc: float | None = None) -> StreamEstimator:
        cutoff = fc if fc is not None else self.settings_service.settings.cutoff_hz
        return StreamEstimator(self.get(path), fs, cutoff)

    def invalidate(self, path: str | Path | None = None) -> None:
        key = self._resolve(path)
        with self.keyed_lock.lock(key):
            self.bundles.pop(key, None)

    async def teardown(self) -> None:
        self.bundles.clear()
