"""HTTP surface of the plugin registry.

Three routes close the publish/instantiate loop: multipart upload, a
metadata-only listing, and static serving of stored bundle files.  Bundle
responses carry permissive cross-origin headers because plugins are fetched
by web clients living on other origins.

The registry never relays platform traffic; its one job is handing out
plugin bundles.
"""

from __future__ import annotations

import logging
import mimetypes
import uuid
from typing import Optional

from fastapi import FastAPI, File, Form, Header, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse

from ..config import RegistryConfig
from .store import (
    BundleStore,
    MalformedArchive,
    PluginRecord,
    StorageFailure,
    UploadTooLarge,
)

logger = logging.getLogger(__name__)

_PERMISSIVE = {"Access-Control-Allow-Origin": "*"}


def create_registry_app(config: RegistryConfig, store: Optional[BundleStore] = None) -> FastAPI:
    if store is None:
        store = BundleStore(
            config.data_root,
            upload_limit_bytes=config.upload_limit_bytes,
            max_decompressed_ratio=config.max_decompressed_ratio,
        )
    base_url = (config.base_url or f"http://{config.host}:{config.port}").rstrip("/")

    app = FastAPI(title="plugdeck registry", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.store = store

    def record_json(record: PluginRecord) -> dict:
        return {
            "pluginKey": str(record.plugin_key),
            "name": record.name,
            "contentHash": record.content_hash,
            "remoteEntryURL": base_url + record.remote_entry_path,
        }

    @app.post("/upload", status_code=201)
    async def upload(
        plugin: UploadFile = File(...),
        name: str = Form(...),
        contentHash: Optional[str] = Form(None),
        x_upload_token: Optional[str] = Header(None),
    ):
        if config.upload_token is not None and x_upload_token != config.upload_token:
            return JSONResponse({"detail": "missing or wrong upload token"}, status_code=401)
        data = await plugin.read()
        try:
            record = store.accept_plugin(data, name, claimed_hash=contentHash)
        except UploadTooLarge as exc:
            return JSONResponse({"detail": str(exc)}, status_code=413)
        except MalformedArchive as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400)
        except StorageFailure as exc:
            logger.error("upload of %r failed: %s", name, exc)
            return JSONResponse({"detail": str(exc)}, status_code=500)
        return JSONResponse(record_json(record), status_code=201)

    @app.get("/plugins")
    async def list_plugins() -> list:
        return [record_json(record) for record in store.list_plugins()]

    @app.get("/plugins/{name}/versions")
    async def versions(name: str):
        history = store.version_history(name)
        if not history:
            return JSONResponse({"detail": f"no plugin named {name!r}"}, status_code=404)
        return [record_json(record) | {"uploadedAt": record.uploaded_at} for record in history]

    @app.get("/bundles/{plugin_key}/{content_hash}/{path:path}")
    async def bundle_file(plugin_key: uuid.UUID, content_hash: str, path: str):
        try:
            resolved = store.resolve_file(plugin_key, content_hash, path)
        except FileNotFoundError:
            return JSONResponse({"detail": "not found"}, status_code=404, headers=_PERMISSIVE)
        except MalformedArchive as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400, headers=_PERMISSIVE)
        media_type = mimetypes.guess_type(resolved.name)[0] or "application/octet-stream"
        return FileResponse(resolved, media_type=media_type, headers=_PERMISSIVE)

    return app
