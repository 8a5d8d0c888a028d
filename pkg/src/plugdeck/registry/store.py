"""Bundle storage for the plugin registry.

Uploads arrive as zip archives.  Each archive is content-addressed by the
SHA-256 of its bytes; archives sharing a declared name share one logical
plugin key and pile up as that plugin's version history.  Metadata lives in
an embedded SQLite database, file trees under ``<data_root>/bundles/``;
extraction goes through a temp directory and an atomic rename so a route is
never exposed to a half-written tree.
"""

from __future__ import annotations

import hashlib
import io
import logging
import shutil
import sqlite3
import threading
import uuid
import zipfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path, PurePosixPath
from typing import Optional

logger = logging.getLogger(__name__)

#: Canonical root path of the remote-entry manifest inside every bundle.
MANIFEST_NAME = "remote_entry.json"


class MalformedArchive(Exception):
    """Bad zip, missing manifest, traversal attempt, or bomb heuristics."""


class HashMismatch(MalformedArchive):
    """Uploader-declared digest disagrees with the received bytes."""


class UploadTooLarge(Exception):
    pass


class StorageFailure(Exception):
    pass


def hash_archive(data: bytes) -> str:
    """Content hash of an archive: SHA-256 over the raw bytes, lowercase hex."""
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class PluginRecord:
    plugin_key: uuid.UUID
    name: str
    content_hash: str
    location: str
    uploaded_at: str

    @property
    def remote_entry_path(self) -> str:
        return f"/bundles/{self.plugin_key}/{self.content_hash}/{MANIFEST_NAME}"


def _validate_entry_name(name: str) -> PurePosixPath:
    path = PurePosixPath(name.replace("\\", "/"))
    if path.is_absolute() or any(part in ("..", "") for part in path.parts) or ":" in name:
        raise MalformedArchive(f"archive entry escapes the bundle root: {name!r}")
    return path


class BundleStore:
    def __init__(
        self,
        data_root: str | Path,
        upload_limit_bytes: int = 32 * 1024 * 1024,
        max_decompressed_ratio: int = 100,
    ):
        self.data_root = Path(data_root)
        self.bundles_dir = self.data_root / "bundles"
        self.bundles_dir.mkdir(parents=True, exist_ok=True)
        (self.data_root / "tmp").mkdir(exist_ok=True)
        self.upload_limit_bytes = upload_limit_bytes
        self.max_decompressed_ratio = max_decompressed_ratio
        self._lock = threading.Lock()
        self._db = sqlite3.connect(self.data_root / "registry.sqlite3", check_same_thread=False)
        with self._lock:
            self._db.executescript(
                """
                CREATE TABLE IF NOT EXISTS plugins (
                    plugin_key TEXT PRIMARY KEY,
                    name TEXT UNIQUE NOT NULL
                );
                CREATE TABLE IF NOT EXISTS versions (
                    plugin_key TEXT NOT NULL REFERENCES plugins(plugin_key),
                    content_hash TEXT NOT NULL,
                    location TEXT NOT NULL,
                    uploaded_at TEXT NOT NULL,
                    PRIMARY KEY (plugin_key, content_hash)
                );
                """
            )
            self._db.commit()

    def close(self) -> None:
        with self._lock:
            self._db.close()

    # --- upload path -------------------------------------------------------

    def _check_archive(self, data: bytes) -> zipfile.ZipFile:
        if len(data) > self.upload_limit_bytes:
            raise UploadTooLarge(f"archive exceeds {self.upload_limit_bytes} bytes")
        try:
            archive = zipfile.ZipFile(io.BytesIO(data))
        except zipfile.BadZipFile as exc:
            raise MalformedArchive(f"not a zip archive: {exc}") from exc
        total_uncompressed = 0
        names = set()
        for info in archive.infolist():
            _validate_entry_name(info.filename)
            total_uncompressed += info.file_size
            names.add(info.filename.rstrip("/"))
        budget = self.max_decompressed_ratio * max(len(data), 64 * 1024)
        if total_uncompressed > budget:
            raise MalformedArchive("decompressed size is wildly out of proportion to the upload")
        if MANIFEST_NAME not in names:
            raise MalformedArchive(f"bundle is missing its manifest at {MANIFEST_NAME}")
        return archive

    def _extract(self, archive: zipfile.ZipFile, destination: Path) -> None:
        staging = self.data_root / "tmp" / uuid.uuid4().hex
        try:
            staging.mkdir(parents=True)
            for info in archive.infolist():
                relative = _validate_entry_name(info.filename)
                target = staging / Path(*relative.parts)
                if info.is_dir():
                    target.mkdir(parents=True, exist_ok=True)
                    continue
                target.parent.mkdir(parents=True, exist_ok=True)
                with archive.open(info) as src, open(target, "wb") as dst:
                    shutil.copyfileobj(src, dst)
            destination.parent.mkdir(parents=True, exist_ok=True)
            Path(staging).replace(destination)
        except OSError as exc:
            shutil.rmtree(staging, ignore_errors=True)
            raise StorageFailure(f"cannot write bundle tree: {exc}") from exc

    def accept_plugin(
        self, data: bytes, declared_name: str, claimed_hash: Optional[str] = None
    ) -> PluginRecord:
        """Store one uploaded bundle and return its (possibly existing) record.

        The first upload of a name mints the logical plugin key; later
        uploads join its version history keyed by content hash.  Re-uploading
        identical bytes is a no-op that returns the existing record.
        """
        if not declared_name or "/" in declared_name:
            raise MalformedArchive(f"invalid plugin name: {declared_name!r}")
        content_hash = hash_archive(data)
        if claimed_hash is not None and claimed_hash.lower() != content_hash:
            raise HashMismatch(
                f"declared content hash {claimed_hash} does not match received bytes"
            )
        archive = self._check_archive(data)
        with self._lock:
            row = self._db.execute(
                "SELECT plugin_key FROM plugins WHERE name = ?", (declared_name,)
            ).fetchone()
            if row is None:
                plugin_key = uuid.uuid4()
                self._db.execute(
                    "INSERT INTO plugins (plugin_key, name) VALUES (?, ?)",
                    (str(plugin_key), declared_name),
                )
            else:
                plugin_key = uuid.UUID(row[0])

            location = self.bundles_dir / str(plugin_key) / content_hash
            existing = self._db.execute(
                "SELECT uploaded_at FROM versions WHERE plugin_key = ? AND content_hash = ?",
                (str(plugin_key), content_hash),
            ).fetchone()
            if existing is not None:
                self._db.commit()
                return PluginRecord(plugin_key, declared_name, content_hash, str(location), existing[0])

            if not location.exists():
                self._extract(archive, location)
            uploaded_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
            try:
                self._db.execute(
                    "INSERT INTO versions (plugin_key, content_hash, location, uploaded_at)"
                    " VALUES (?, ?, ?, ?)",
                    (str(plugin_key), content_hash, str(location), uploaded_at),
                )
                self._db.commit()
            except sqlite3.Error as exc:
                raise StorageFailure(f"metadata write failed: {exc}") from exc
            return PluginRecord(plugin_key, declared_name, content_hash, str(location), uploaded_at)

    # --- read side ------------------------------------------------------------

    def list_plugins(self) -> list[PluginRecord]:
        """Latest record per logical plugin, in first-upload order."""
        with self._lock:
            rows = self._db.execute(
                """
                SELECT p.plugin_key, p.name, v.content_hash, v.location, v.uploaded_at
                FROM plugins p JOIN versions v ON v.plugin_key = p.plugin_key
                WHERE v.rowid = (
                    SELECT MAX(v2.rowid) FROM versions v2 WHERE v2.plugin_key = p.plugin_key
                )
                ORDER BY p.rowid
                """
            ).fetchall()
        return [PluginRecord(uuid.UUID(k), n, h, loc, at) for k, n, h, loc, at in rows]

    def version_history(self, name: str) -> list[PluginRecord]:
        with self._lock:
            rows = self._db.execute(
                """
                SELECT p.plugin_key, p.name, v.content_hash, v.location, v.uploaded_at
                FROM plugins p JOIN versions v ON v.plugin_key = p.plugin_key
                WHERE p.name = ? ORDER BY v.rowid
                """,
                (name,),
            ).fetchall()
        return [PluginRecord(uuid.UUID(k), n, h, loc, at) for k, n, h, loc, at in rows]

    def resolve_file(self, plugin_key: uuid.UUID, content_hash: str, relative: str) -> Path:
        """Map a bundle route to a real file, refusing anything outside it.

        Raises FileNotFoundError for unknown versions/paths and
        MalformedArchive for escape attempts.
        """
        base = (self.bundles_dir / str(plugin_key) / content_hash).resolve()
        if not base.is_dir():
            raise FileNotFoundError(f"unknown bundle version {plugin_key}/{content_hash}")
        candidate = (base / relative).resolve()
        if base != candidate and base not in candidate.parents:
            raise MalformedArchive(f"path escapes the bundle tree: {relative!r}")
        if not candidate.is_file():
            raise FileNotFoundError(relative)
        return candidate
