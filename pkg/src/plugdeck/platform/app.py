"""HTTP and websocket surface of the platform server.

HTTP carries sign-on and instance management; the websocket at ``/ws``
carries the frame grammar from :mod:`plugdeck.protocol`.  Every handler is
async so all state access runs on the event loop, which together with the
core's lock keeps reads consistent with relay traffic.
"""

from __future__ import annotations

import asyncio
import logging
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response as HTTPResponse
from pydantic import BaseModel, Field

from ..config import PlatformConfig
from ..protocol import (
    ErrorInfo,
    FrameType,
    InvalidRequest,
    MalformedFrame,
    WireFrame,
    decode_frame,
    encode_frame,
    error_frame,
)
from .core import (
    AuthFailure,
    NotSignedOn,
    PlatformCore,
    PluginRef,
    SenderMismatch,
    Session,
    UnknownDatagram,
    UnknownInstance,
)
from .storage import EventLog

logger = logging.getLogger(__name__)

class WebSocketSession(Session):
    """Session whose deliveries drain through a bounded asyncio queue."""

    def __init__(self, client_id: uuid.UUID, buffer_limit: int):
        super().__init__(client_id)
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=max(1, buffer_limit))
        self.failed: Optional[ErrorInfo] = None

    def deliver(self, frame: WireFrame) -> bool:
        if self.failed is not None:
            return True  # already being torn down
        try:
            self.queue.put_nowait(frame)
            return True
        except asyncio.QueueFull:
            return False

    def close_with_error(self, error: ErrorInfo) -> None:
        self.failed = error


class AuthBody(BaseModel):
    name: str
    password: str = Field(alias="pass")


class InstanceBody(BaseModel):
    registry_key: uuid.UUID = Field(alias="registryKey")
    version: str
    remote_entry_url: str = Field(alias="remoteEntryURL")
    display_name: str = Field(alias="displayName")


def _frame_text(frame: WireFrame) -> str:
    return encode_frame(frame).decode("utf-8")


def handle_inbound(core: PlatformCore, session: Session, raw: str) -> None:
    """Process one inbound frame; protocol errors come back as error frames."""
    try:
        frame = decode_frame(raw.encode("utf-8"))
    except MalformedFrame as exc:
        session.deliver(error_frame("malformed-frame", str(exc)))
        return
    key = frame.instance_key
    try:
        if frame.frame_type == FrameType.SUBSCRIBE:
            core.subscribe(session, key)
        elif frame.frame_type == FrameType.UNSUBSCRIBE:
            core.unsubscribe(session, key)
        elif frame.frame_type == FrameType.SEND:
            core.handle_send(session, frame.body)
        else:
            session.deliver(
                error_frame("unexpected-frame", f"clients may not send {frame.frame_type.value} frames", key)
            )
    except UnknownInstance:
        session.deliver(error_frame("unknown-instance", f"no live plugin instance {key}", key))
    except UnknownDatagram as exc:
        session.deliver(error_frame("unknown-datagram", f"no persisted datagram {exc}", key))
    except SenderMismatch as exc:
        session.deliver(error_frame("sender-mismatch", str(exc), key))
    except NotSignedOn as exc:
        session.deliver(error_frame("not-signed-on", str(exc), key))
    except InvalidRequest as exc:
        session.deliver(error_frame("invalid-request", str(exc), key))


async def _writer(websocket: WebSocket, session: WebSocketSession) -> None:
    try:
        while True:
            frame = await session.queue.get()
            if session.failed is not None:
                await websocket.send_text(
                    _frame_text(error_frame(session.failed.code, session.failed.message))
                )
                await websocket.close(code=1013)
                return
            await websocket.send_text(_frame_text(frame))
    except Exception:  # connection torn down under us; reader handles cleanup
        return


def create_app(config: PlatformConfig, core: Optional[PlatformCore] = None) -> FastAPI:
    if core is None:
        log = EventLog(Path(config.data_dir) / "platform-events.jsonl")
        core = PlatformCore(config, log)

    app = FastAPI(title="plugdeck platform", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.core = core

    @app.get("/passkey")
    async def passkey() -> dict:
        return core.passkey_info()

    @app.post("/auth")
    async def auth(body: AuthBody) -> JSONResponse:
        try:
            client_id = core.get_user_id(body.name, body.password)
        except AuthFailure as exc:
            return JSONResponse({"detail": str(exc)}, status_code=401)
        return JSONResponse({"clientID": str(client_id)})

    @app.get("/instances")
    async def list_instances() -> list:
        return [instance.to_json() for instance in core.list_instances()]

    @app.post("/instances", status_code=201)
    async def add_instance(body: InstanceBody) -> dict:
        instance = core.add_instance(
            PluginRef(
                registry_key=body.registry_key,
                version=body.version,
                remote_entry_url=body.remote_entry_url,
            ),
            body.display_name,
        )
        return {"instanceKey": str(instance.instance_key)}

    @app.delete("/instances/{instance_key}", status_code=204)
    async def remove_instance(instance_key: uuid.UUID, purge: Optional[bool] = None) -> HTTPResponse:
        try:
            core.remove_instance(instance_key, purge=purge)
        except UnknownInstance:
            return JSONResponse({"detail": "unknown instance"}, status_code=404)
        return HTTPResponse(status_code=204)

    @app.get("/instances/{instance_key}/history")
    async def history(instance_key: uuid.UUID):
        from ..protocol import response_to_json

        try:
            records = core.fetch_history(instance_key)
        except UnknownInstance:
            return JSONResponse({"detail": "unknown instance"}, status_code=404)
        return [response_to_json(r) for r in records]

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket) -> None:
        await websocket.accept()
        raw = websocket.query_params.get("clientID", "")
        client_id: Optional[uuid.UUID] = None
        try:
            client_id = uuid.UUID(raw)
        except ValueError:
            pass
        if client_id is None or not core.is_known_client(client_id):
            await websocket.send_text(
                _frame_text(error_frame("unknown-client", "clientID is missing or not signed on"))
            )
            await websocket.close(code=4401)
            return
        session = WebSocketSession(client_id, config.delivery_buffer_limit)
        core.attach(session)
        writer = asyncio.create_task(_writer(websocket, session))
        try:
            while True:
                text = await websocket.receive_text()
                handle_inbound(core, session, text)
        except WebSocketDisconnect:
            pass
        finally:
            core.detach(session)
            writer.cancel()
            try:
                await writer
            except asyncio.CancelledError:
                pass

    return app
