"""Default build backend: mirror the source tree into the output directory.

The starter plugin is a plain ES module, so "building" it is a copy.  Real
toolchains replace this via the project's buildCommand.

Usage: python3 -m plugdeck.bundler.copy_build <sourceDir> <outputDir>
"""

from __future__ import annotations

import shutil
import sys
from pathlib import Path


def main(argv: list[str]) -> int:
    if len(argv) != 2:
        print("usage: copy_build <sourceDir> <outputDir>", file=sys.stderr)
        return 2
    source, output = Path(argv[0]), Path(argv[1])
    if not source.is_dir():
        print(f"source directory {source} does not exist", file=sys.stderr)
        return 1
    if output.exists():
        shutil.rmtree(output)
    shutil.copytree(source, output)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
