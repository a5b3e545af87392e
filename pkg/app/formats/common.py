"""Shared file plumbing: atomic writes, versioned CSV headers, digests, report envelopes."""
from __future__ import annotations

import hashlib
import os
import tempfile
from collections.abc import Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

import app
from app.core.errors import DataValidationError, MissingColumnsError, SchemaError

SCHEMA_VERSION = 1
SCHEMA_COMMENT = f"# schema_version={SCHEMA_VERSION}\n"


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write via a temp file in the target directory, then rename over the target."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    body = frame.to_csv(index=False, lineterminator="\n")
    return atomic_write_text(path, SCHEMA_COMMENT + body)


def read_csv(path: str | Path, required: Sequence[str] = ()) -> pd.DataFrame:
    source = Path(path)
    if not source.is_file():
        msg = f"{source}: file not found"
        raise DataValidationError(msg)
    version = _csv_schema_version(source)
    if version is not None and version != SCHEMA_VERSION:
        msg = f"{source}: schema_version {version} is not supported (expected {SCHEMA_VERSION})"
        raise SchemaError(msg)
    try:
        frame = pd.read_csv(source, comment="#", skip_blank_lines=True, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame()
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        msg = f"{source}: unreadable CSV ({exc})"
        raise SchemaError(msg) from exc
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise MissingColumnsError(missing)
    return frame


def _csv_schema_version(path: Path) -> int | None:
    with path.open(encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first.startswith("#") and "schema_version=" in first:
        try:
            return int(first.split("schema_version=", 1)[1])
        except ValueError:
            return -1
    return None


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return f"sha256:{digest.hexdigest()}"


def build_time(source_date_epoch: int | None = None) -> datetime:
    """Fixed timestamp when SOURCE_DATE_EPOCH is set, wall clock otherwise."""
    if source_date_epoch is not None:
        return datetime.fromtimestamp(source_date_epoch, tz=timezone.utc)
    return datetime.now(timezone.utc)


class ReportEnvelope(BaseModel):
    """Header shared by every JSON report: tool version, seed and input digests."""

    model_config = ConfigDict(frozen=True)

    schema_version: int = SCHEMA_VERSION
    tool_version: str = Field(default_factory=lambda: app.__version__)
    kind: str
    seed: int | None = None
    inputs: dict[str, str] = Field(default_factory=dict)
    report: dict[str, Any]


def write_report(kind: str, report: BaseModel | dict[str, Any], path: str | Path, **meta: Any) -> Path:
    body = report.model_dump(mode="json") if isinstance(report, BaseModel) else report
    envelope = ReportEnvelope(kind=kind, report=body, **meta)
    return atomic_write_text(path, envelope.model_dump_json(indent=2) + "\n")


def sibling(path: str | Path, suffix: str) -> Path:
    """`out/model.json` + `.report.json` -> `out/model.report.json`."""
    p = Path(path)
    stem = p.name[: -len(p.suffix)] if p.suffix else p.name
    return p.with_name(stem + suffix)
