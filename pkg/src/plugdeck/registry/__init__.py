from .store import (
    MANIFEST_NAME,
    BundleStore,
    HashMismatch,
    MalformedArchive,
    PluginRecord,
    StorageFailure,
    UploadTooLarge,
    hash_archive,
)

__all__ = [
    "MANIFEST_NAME",
    "BundleStore",
    "HashMismatch",
    "MalformedArchive",
    "PluginRecord",
    "StorageFailure",
    "UploadTooLarge",
    "hash_archive",
]
