from __future__ import annotations

from pathlib import Path

from pydantic import ValidationError

from app.core.errors import DataValidationError, SchemaError
from app.core.model import BUNDLE_SCHEMA_VERSION, CalibrationBundle
from app.formats.common import atomic_write_text


def save_bundle(bundle: CalibrationBundle, path: str | Path) -> Path:
    return atomic_write_text(path, bundle.model_dump_json(indent=2) + "\n")


def load_bundle(path: str | Path) -> CalibrationBundle:
    source = Path(path)
    if not source.is_file():
        msg = f"{source}: model bundle not found"
        raise DataValidationError(msg)
    try:
        bundle = CalibrationBundle.model_validate_json(source.read_text(encoding="utf-8"))
    except ValidationError as exc:
        msg = f"{source}: invalid model bundle: {exc.errors()[0]['msg']}"
        raise SchemaError(msg) from exc
    if bundle.schema_version != BUNDLE_SCHEMA_VERSION:
        msg = f"{source}: bundle schema_version {bundle.schema_version} is not supported"
        raise SchemaError(msg)
    return bundle
