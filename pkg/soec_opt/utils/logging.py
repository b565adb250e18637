"""JSON-lines logging for pipeline runs; structured context travels through ``extra``."""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone

UTC = timezone.utc
from pathlib import Path
from typing import Any, TextIO

import numpy as np

_RESERVED = frozenset(logging.LogRecord("", 0, "", 0, "", None, None).__dict__) | {"message", "asctime"}
# Per-request chatter from the download client.
_NOISY_LOGGERS = ("httpx", "httpcore")


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return value.as_posix()
    return str(value)


class JsonFormatter(logging.Formatter):
    """One JSON object per record: timestamp, level, logger, message and every ``extra`` field."""

    def format(self, record: logging.LogRecord) -> str:
        payload: dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, UTC).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        payload.update({key: value for key, value in record.__dict__.items() if key not in _RESERVED and not key.startswith("_")})
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=True, default=_jsonable)


def configure_logging(level: str, stream: TextIO | None = None) -> None:
    """Send every record to ``stream`` (stderr by default) as JSON lines."""

    root = logging.getLogger()
    root.setLevel(level.upper())
    handler = logging.StreamHandler(stream)
    handler.setFormatter(JsonFormatter())
    root.handlers = [handler]
    for name in _NOISY_LOGGERS:
        logging.getLogger(name).setLevel(max(root.level, logging.WARNING))
