from .build import BundleResult, bundle, deterministic_zip
from .project import (
    BuildFailure,
    DirNotEmpty,
    ManifestMissing,
    PluginProject,
    ProjectConfigError,
    RegistryRejected,
    RegistryUnreachable,
)
from .publish import publish_archive
from .scaffold import scaffold

__all__ = [
    "BundleResult",
    "BuildFailure",
    "DirNotEmpty",
    "ManifestMissing",
    "PluginProject",
    "ProjectConfigError",
    "RegistryRejected",
    "RegistryUnreachable",
    "bundle",
    "deterministic_zip",
    "publish_archive",
    "scaffold",
]
