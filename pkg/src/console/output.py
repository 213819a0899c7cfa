"""Console plumbing: JSON-lines events on stdout, rich logs and summaries on stderr."""

from __future__ import annotations

import json
import logging
import sys
from datetime import UTC, datetime
from pathlib import Path
from typing import IO, Any

from rich.console import Console
from rich.logging import RichHandler

stderr_console = Console(stderr=True)

PACKAGES = ('capture', 'config', 'console', 'detector', 'distribution')


def configure_logging(level: str | int = 'INFO') -> None:
    handler = RichHandler(console=stderr_console, show_path=False, rich_tracebacks=True)
    handler.setFormatter(logging.Formatter('%(name)s: %(message)s'))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.WARNING)
    for name in PACKAGES:
        logging.getLogger(name).setLevel(level)


def _default(value: object) -> Any:
    if isinstance(value, bytes):
        return value.hex()
    if isinstance(value, datetime):
        return value.astimezone(UTC).isoformat().replace('+00:00', 'Z')
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, set | frozenset):
        return list(value)
    msg = f'{type(value).__name__} is not JSON serializable'
    raise TypeError(msg)


class EventWriter:
    """One JSON object per line, each carrying an ``event`` key."""

    def __init__(self, stream: IO[str] | None = None) -> None:
        self.stream = stream

    def emit(self, event: str, **fields: Any) -> None:
        stream = self.stream or sys.stdout
        stream.write(json.dumps({'event': event, **fields}, default=_default) + '\n')
        stream.flush()


events = EventWriter()
