"""Plugin project model and the bundler's error taxonomy."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

CONFIG_NAME = "plugin.json"


class ProjectConfigError(Exception):
    """plugin.json is missing, unparseable, or self-contradictory."""


class DirNotEmpty(Exception):
    pass


class BuildFailure(Exception):
    """The external build command failed; carries its output verbatim."""


class ManifestMissing(Exception):
    pass


class RegistryUnreachable(Exception):
    pass


class RegistryRejected(Exception):
    def __init__(self, status_code: int, body: str):
        super().__init__(f"registry rejected the upload ({status_code}): {body}")
        self.status_code = status_code
        self.body = body


@dataclass
class PluginProject:
    root: Path
    name: str
    build_command: str
    source_dir: Path
    output_dir: Path
    dev_port: int

    @classmethod
    def load(cls, root: str | Path) -> "PluginProject":
        root = Path(root).resolve()
        config_path = root / CONFIG_NAME
        if not config_path.is_file():
            raise ProjectConfigError(f"{config_path} not found; is this a plugin project?")
        try:
            doc = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ProjectConfigError(f"{config_path} is not valid JSON: {exc}") from exc
        for field in ("name", "buildCommand", "sourceDir", "outputDir"):
            if field not in doc:
                raise ProjectConfigError(f"{config_path} is missing {field!r}")
        source_dir = root / doc["sourceDir"]
        output_dir = root / doc["outputDir"]
        if source_dir.resolve() == output_dir.resolve():
            raise ProjectConfigError("outputDir must be distinct from sourceDir")
        return cls(
            root=root,
            name=str(doc["name"]),
            build_command=str(doc["buildCommand"]),
            source_dir=source_dir,
            output_dir=output_dir,
            dev_port=int(doc.get("devPort", 4100)),
        )
