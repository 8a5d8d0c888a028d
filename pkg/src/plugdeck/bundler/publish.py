"""Publishing a bundled archive to a registry over its upload route."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import requests

from ..registry.store import hash_archive
from .project import RegistryRejected, RegistryUnreachable

logger = logging.getLogger(__name__)


def publish_archive(
    archive_path: str | Path,
    registry_url: str,
    name: str,
    token: Optional[str] = None,
    timeout: float = 30.0,
) -> dict:
    """Multipart-POST the archive; returns the registry's record JSON.

    The local content hash travels with the upload so the registry can
    reject a corrupted transfer.
    """
    archive_path = Path(archive_path)
    data = archive_path.read_bytes()
    headers = {} if token is None else {"X-Upload-Token": token}
    try:
        response = requests.post(
            registry_url.rstrip("/") + "/upload",
            files={"plugin": (archive_path.name, data, "application/zip")},
            data={"name": name, "contentHash": hash_archive(data)},
            headers=headers,
            timeout=timeout,
        )
    except requests.RequestException as exc:
        raise RegistryUnreachable(f"cannot reach registry at {registry_url}: {exc}") from exc
    if response.status_code >= 400:
        raise RegistryRejected(response.status_code, response.text)
    return response.json()
