"""HTTP bridge over the multicast probe.

Browsers cannot open multicast sockets, so the web client calls this tiny
local service instead: GET /discover runs one probe and returns the found
platforms as JSON.  It reveals LAN topology, hence the loopback-only
default bind.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..config import DiscoveryConfig
from .beacon import SocketUnavailable
from .probe import probe_multicast


def create_gateway_app(config: DiscoveryConfig, interface: str = "0.0.0.0") -> FastAPI:
    app = FastAPI(title="plugdeck discovery gateway", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/discover")
    def discover() -> JSONResponse:
        try:
            infos = probe_multicast(
                config.group,
                config.port,
                config.codeword,
                timeout=config.timeout_ms / 1000.0,
                interface=interface,
            )
        except SocketUnavailable as exc:
            return JSONResponse({"detail": str(exc)}, status_code=503)
        return JSONResponse([info.to_json() for info in infos])

    return app
