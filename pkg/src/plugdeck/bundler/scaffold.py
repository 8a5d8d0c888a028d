"""Project scaffolding from templates embedded in the package.

Nothing is fetched over the network: the whole starter tree ships inside
the CLI, so a scaffold always succeeds offline and bundles with zero edits.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from .project import DirNotEmpty, PluginProject

_NAME_PATTERN = re.compile(r"^[a-z][a-z0-9-]{0,63}$")


def _render(text: str, name: str) -> str:
    return text.replace("{{name}}", name)


def _walk(node, prefix=""):
    for entry in sorted(node.iterdir(), key=lambda e: e.name):
        relative = f"{prefix}{entry.name}"
        if entry.is_dir():
            yield from _walk(entry, prefix=f"{relative}/")
        elif entry.name.endswith(".tmpl"):
            yield relative[: -len(".tmpl")], entry.read_text(encoding="utf-8")


def _template_files():
    yield from _walk(resources.files("plugdeck.bundler") / "templates")


def scaffold(target_dir: str | Path, name: str) -> PluginProject:
    """Write the starter plugin tree into ``target_dir`` and load it."""
    if not _NAME_PATTERN.match(name):
        raise ValueError(
            f"plugin name {name!r} must be lowercase letters/digits/hyphens, starting with a letter"
        )
    target = Path(target_dir)
    if target.exists() and any(target.iterdir()):
        raise DirNotEmpty(f"{target} already has contents; refusing to scaffold over them")
    for relative, text in _template_files():
        destination = target / relative
        destination.parent.mkdir(parents=True, exist_ok=True)
        destination.write_text(_render(text, name), encoding="utf-8")
    return PluginProject.load(target)
