"""Single-file append log backing a platform's durable state.

One JSON object per line; replaying the file from the top reconstructs
users, plugin instances, and the per-instance datagram stores.  The format
is append-only so a half-written trailing line (crash mid-write) is dropped
on recovery rather than corrupting everything before it.
"""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path
from typing import Iterator

logger = logging.getLogger(__name__)


class EventLog:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._handle = open(self.path, "a", encoding="utf-8")

    def replay(self) -> Iterator[dict]:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError:
                    logger.warning("dropping unparseable log line %d in %s", lineno, self.path)

    def append(self, event: dict) -> None:
        line = json.dumps(event, separators=(",", ":"), ensure_ascii=False)
        with self._lock:
            self._handle.write(line + "\n")
            self._handle.flush()

    def close(self) -> None:
        with self._lock:
            self._handle.close()
