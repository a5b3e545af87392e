import sys
from pathlib import Path

from loguru import logger


def configure(level: str = "INFO", log_dir: str | Path | None = None) -> None:
    """Route loguru to stderr at `level`; add rotating JSON file sinks when a log directory is given."""
    handlers: list[dict] = [
        {
            "sink": sys.stderr,
            "level": level.upper(),
            "backtrace": True,
            "diagnose": False,
        },
    ]
    if log_dir is not None:
        directory = Path(log_dir)
        directory.mkdir(parents=True, exist_ok=True)
        handlers += [
            {
                "sink": directory / "mpp.log",
                "level": "DEBUG",
                "rotation": "100 MB",
                "retention": "30 days",
                "compression": "zip",
                "enqueue": True,
                "serialize": True,
            },
            {
                "sink": directory / "error.log",
                "level": "ERROR",
                "rotation": "100 MB",
                "retention": "90 days",
                "compression": "zip",
                "enqueue": True,
                "backtrace": True,
                "serialize": True,
            },
        ]
    logger.configure(handlers=handlers)
