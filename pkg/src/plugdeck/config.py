"""Configuration for the platform server, discovery, and registry.

One JSON file with a section per service, every key overridable through the
environment as ``PLUGDECK_<SECTION>_<KEY>`` (e.g. ``PLUGDECK_PLATFORM_PORT``).
Missing file or missing keys fall back to the defaults below.
"""

from __future__ import annotations

import json
import os
import typing
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Optional


@dataclass
class PlatformConfig:
    host: str = "0.0.0.0"
    port: int = 8450
    passkey: str = "plugdeck-passkey"
    name: str = "plugdeck platform"
    data_dir: str = "./platform-data"
    delivery_buffer_limit: int = 256
    open_registration: bool = True
    purge_on_remove: bool = False
    password_iterations: int = 100_000


@dataclass
class DiscoveryConfig:
    enabled: bool = True
    group: str = "239.255.77.77"
    port: int = 40777
    codeword: str = "PLUGDECK_DISCOVERY_V1"
    buffer_size: int = 256
    timeout_ms: int = 1000
    # the gateway reveals LAN topology, so it binds loopback by default
    gateway_host: str = "127.0.0.1"
    gateway_port: int = 8451


@dataclass
class RegistryConfig:
    host: str = "0.0.0.0"
    port: int = 8452
    data_root: str = "./registry-data"
    upload_limit_bytes: int = 32 * 1024 * 1024
    max_decompressed_ratio: int = 100
    upload_token: Optional[str] = None
    # absolute base for remoteEntryURLs; defaults to http://<host>:<port>
    base_url: Optional[str] = None


@dataclass
class Config:
    platform: PlatformConfig = field(default_factory=PlatformConfig)
    discovery: DiscoveryConfig = field(default_factory=DiscoveryConfig)
    registry: RegistryConfig = field(default_factory=RegistryConfig)


def _coerce(raw: str, kind: type) -> Any:
    if kind is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if kind is int:
        return int(raw)
    return raw


def _apply_section(section: Any, values: Mapping[str, Any], env: Mapping[str, str], prefix: str) -> None:
    hints = typing.get_type_hints(type(section))
    for f in fields(section):
        if f.name in values:
            setattr(section, f.name, values[f.name])
        env_key = f"{prefix}_{f.name.upper()}"
        if env_key in env:
            base = hints[f.name]
            if typing.get_origin(base) is typing.Union:
                base = next(a for a in typing.get_args(base) if a is not type(None))
            setattr(section, f.name, _coerce(env[env_key], base))


def load_config(path: Optional[str] = None, env: Optional[Mapping[str, str]] = None) -> Config:
    env = os.environ if env is None else env
    doc: dict = {}
    if path is not None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ValueError(f"config root must be a JSON object: {path}")
    config = Config()
    _apply_section(config.platform, doc.get("platform", {}), env, "PLUGDECK_PLATFORM")
    _apply_section(config.discovery, doc.get("discovery", {}), env, "PLUGDECK_DISCOVERY")
    _apply_section(config.registry, doc.get("registry", {}), env, "PLUGDECK_REGISTRY")
    return config
