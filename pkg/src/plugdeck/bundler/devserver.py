"""Local preview: harness page, built files, rebuild-on-change.

The harness page (a static asset shared with the web client project) shows
two instances of the plugin talking through an in-memory loopback.  A
polling watcher rebuilds via the project's buildCommand whenever a source
file changes; the page notices the new build number and reloads.
"""

from __future__ import annotations

import logging
import mimetypes
import threading
import time
from importlib import resources
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse

from .build import run_build
from .project import BuildFailure, PluginProject

logger = logging.getLogger(__name__)


def _harness_html() -> str:
    return (resources.files("plugdeck.bundler") / "assets" / "dev-harness.html").read_text(
        encoding="utf-8"
    )


class DevSession:
    """Build state for one `dev` run."""

    def __init__(self, project: PluginProject):
        self.project = project
        self.build_count = 0
        self.last_error: Optional[str] = None
        self._snapshot: dict[Path, float] = {}

    def _scan(self) -> dict[Path, float]:
        return {
            p: p.stat().st_mtime
            for p in self.project.source_dir.rglob("*")
            if p.is_file()
        }

    def build(self) -> None:
        try:
            run_build(self.project)
            self.last_error = None
        except BuildFailure as exc:
            self.last_error = str(exc)
            logger.error("%s", exc)
        self._snapshot = self._scan()
        self.build_count += 1

    def rebuild_if_changed(self) -> bool:
        if self._scan() == self._snapshot:
            return False
        logger.info("source change detected; rebuilding %s", self.project.name)
        self.build()
        return True


def create_dev_app(session: DevSession) -> FastAPI:
    app = FastAPI(title="plugdeck dev harness", version="0.1.0")
    project = session.project

    @app.get("/", response_class=HTMLResponse)
    async def harness() -> str:
        return _harness_html()

    @app.get("/version")
    async def version() -> dict:
        return {"build": session.build_count, "lastError": session.last_error}

    @app.get("/manifest")
    async def manifest():
        path = project.output_dir / "remote_entry.json"
        if not path.is_file():
            return JSONResponse({"detail": "no build output yet"}, status_code=503)
        return FileResponse(path, media_type="application/json")

    @app.get("/bundle/{path:path}")
    async def bundle_file(path: str):
        base = project.output_dir.resolve()
        candidate = (base / path).resolve()
        if base != candidate and base not in candidate.parents:
            return JSONResponse({"detail": "path escapes the build output"}, status_code=400)
        if not candidate.is_file():
            return JSONResponse({"detail": "not found"}, status_code=404)
        media_type = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
        return FileResponse(candidate, media_type=media_type)

    return app


def run_dev(project: PluginProject, port: Optional[int] = None, poll_interval: float = 0.5) -> None:
    """Blocking entry point behind the `dev` subcommand."""
    import uvicorn

    session = DevSession(project)
    session.build()
    if session.last_error:
        raise BuildFailure(session.last_error)

    stop = threading.Event()

    def watch() -> None:
        while not stop.is_set():
            time.sleep(poll_interval)
            try:
                session.rebuild_if_changed()
            except OSError:
                logger.exception("watcher scan failed; retrying")

    watcher = threading.Thread(target=watch, name="dev-watcher", daemon=True)
    watcher.start()
    try:
        uvicorn.run(create_dev_app(session), host="127.0.0.1", port=port or project.dev_port)
    finally:
        stop.set()
        watcher.join(timeout=2)
