"""Bundling: external build, manifest completion, deterministic zip.

Transpiling/minifying belongs to the plugin's own toolchain (the project's
buildCommand); this module only normalises what comes out of it.  The zip
is reproducible -- sorted entries, zeroed timestamps, fixed compression --
so the same build output always yields the same archive content hash, and
the hash definition is shared with the registry.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import subprocess
import zipfile
from dataclasses import dataclass
from pathlib import Path

from ..registry.store import MANIFEST_NAME, hash_archive
from .project import BuildFailure, ManifestMissing, PluginProject

logger = logging.getLogger(__name__)

_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


@dataclass(frozen=True)
class BundleResult:
    archive_path: Path
    sidecar_path: Path
    content_hash: str
    manifest: dict


def run_build(project: PluginProject) -> None:
    """Run the configured buildCommand, surfacing its output on failure."""
    completed = subprocess.run(
        project.build_command,
        shell=True,
        cwd=project.root,
        capture_output=True,
        text=True,
    )
    if completed.returncode != 0:
        raise BuildFailure(
            f"build command {project.build_command!r} exited {completed.returncode}\n"
            f"--- stdout ---\n{completed.stdout}--- stderr ---\n{completed.stderr}"
        )


def _output_files(project: PluginProject) -> list[Path]:
    return sorted(
        p for p in project.output_dir.rglob("*") if p.is_file()
    )


def _tree_hash(files: list[tuple[str, Path]]) -> str:
    """Digest of the built file tree (paths + contents), manifest excluded.

    This is what goes *inside* the manifest; the archive's own content hash
    cannot, since the manifest is part of the archive.
    """
    digest = hashlib.sha256()
    for relative, path in files:
        digest.update(relative.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(hashlib.sha256(path.read_bytes()).digest())
        digest.update(b"\x00")
    return digest.hexdigest()


def complete_manifest(project: PluginProject) -> dict:
    """Fill the manifest's file listing and tree hash from the build output."""
    manifest_path = project.output_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ManifestMissing(
            f"build output has no {MANIFEST_NAME}; the build must emit/copy the manifest"
        )
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestMissing(f"{manifest_path} is not valid JSON: {exc}") from exc
    listed = [
        (p.relative_to(project.output_dir).as_posix(), p)
        for p in _output_files(project)
        if p != manifest_path
    ]
    manifest["files"] = [relative for relative, _ in listed]
    manifest["contentHash"] = _tree_hash(listed)
    entry = manifest.get("entry")
    if entry not in manifest["files"]:
        raise ManifestMissing(f"manifest entry {entry!r} is not among the built files")
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def deterministic_zip(root: Path) -> bytes:
    """Zip a tree reproducibly: sorted paths, epoch timestamps, fixed mode."""
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        for path in sorted(root.rglob("*")):
            if not path.is_file():
                continue
            info = zipfile.ZipInfo(path.relative_to(root).as_posix(), date_time=_ZIP_EPOCH)
            info.external_attr = 0o644 << 16
            info.compress_type = zipfile.ZIP_DEFLATED
            archive.writestr(info, path.read_bytes(), compresslevel=9)
    return buffer.getvalue()


def bundle(project: PluginProject) -> BundleResult:
    """Build, complete the manifest, and emit archive plus sidecar digest."""
    run_build(project)
    manifest = complete_manifest(project)
    data = deterministic_zip(project.output_dir)
    content_hash = hash_archive(data)
    archive_path = project.root / f"{project.name}.plugin.zip"
    archive_path.write_bytes(data)
    sidecar_path = archive_path.with_suffix(".zip.sha256")
    sidecar_path.write_text(f"{content_hash}  {archive_path.name}\n", encoding="utf-8")
    logger.info("bundled %s -> %s (%d bytes, %s)", project.name, archive_path, len(data), content_hash)
    return BundleResult(archive_path, sidecar_path, content_hash, manifest)
