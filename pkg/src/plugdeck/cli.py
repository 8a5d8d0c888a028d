"""Command-line entry points.

Plugin toolchain: scaffold, dev, bundle, publish.
Services: server (platform + beacon), registry, gateway.

Exit codes: 0 success, 1 validation/build error, 2 network error.
"""

from __future__ import annotations

import logging
import socket
from pathlib import Path
from typing import Optional

import click

from .bundler.build import bundle as bundle_project
from .bundler.devserver import run_dev
from .bundler.project import (
    BuildFailure,
    DirNotEmpty,
    ManifestMissing,
    PluginProject,
    ProjectConfigError,
    RegistryRejected,
    RegistryUnreachable,
)
from .bundler.publish import publish_archive
from .bundler.scaffold import scaffold as scaffold_project
from .config import load_config

logger = logging.getLogger(__name__)

VALIDATION_ERROR = 1
NETWORK_ERROR = 2


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    raise SystemExit(code)


def _load_project(project_dir: str) -> PluginProject:
    try:
        return PluginProject.load(project_dir)
    except ProjectConfigError as exc:
        _fail(VALIDATION_ERROR, str(exc))


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Path to the plugdeck JSON config file.")
@click.option("--registry", "registry_url", default=None, help="Registry base URL (for publish).")
@click.option("--yes", is_flag=True, default=False, help="Skip interactive confirmations (CI).")
@click.option("-v", "--verbose", is_flag=True, default=False, help="Debug logging.")
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str], registry_url: Optional[str], yes: bool, verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = {"config_path": config_path, "registry_url": registry_url, "yes": yes}


# --- plugin toolchain --------------------------------------------------------


@main.command()
@click.argument("target_dir", type=click.Path(file_okay=False))
@click.argument("name", required=False)
def scaffold(target_dir: str, name: Optional[str]) -> None:
    """Write a ready-to-bundle starter plugin into TARGET_DIR."""
    name = name or Path(target_dir).name.lower().replace("_", "-")
    try:
        project = scaffold_project(target_dir, name)
    except DirNotEmpty as exc:
        _fail(VALIDATION_ERROR, str(exc))
    except (ValueError, OSError) as exc:
        _fail(VALIDATION_ERROR, str(exc))
    click.echo(f"scaffolded plugin {project.name!r} in {project.root}")
    click.echo("next: plugdeck dev  (live preview)  /  plugdeck bundle  (make an archive)")


@main.command()
@click.argument("project_dir", type=click.Path(exists=True, file_okay=False), default=".")
@click.option("--port", type=int, default=None, help="Preview port (default from plugin.json).")
def dev(project_dir: str, port: Optional[int]) -> None:
    """Preview two live instances of the plugin with rebuild-on-change."""
    project = _load_project(project_dir)
    try:
        run_dev(project, port=port)
    except BuildFailure as exc:
        _fail(VALIDATION_ERROR, str(exc))


@main.command()
@click.argument("project_dir", type=click.Path(exists=True, file_okay=False), default=".")
def bundle(project_dir: str) -> None:
    """Build the plugin and zip it into a publishable archive."""
    project = _load_project(project_dir)
    try:
        result = bundle_project(project)
    except (BuildFailure, ManifestMissing, OSError) as exc:
        _fail(VALIDATION_ERROR, str(exc))
    click.echo(f"archive:      {result.archive_path}")
    click.echo(f"content hash: {result.content_hash}")
    click.echo(f"sidecar:      {result.sidecar_path}")


@main.command()
@click.argument("project_dir", type=click.Path(exists=True, file_okay=False), default=".")
@click.option("--archive", "archive_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Publish this archive instead of re-bundling.")
@click.option("--name", default=None, help="Published plugin name (defaults to the project name).")
@click.option("--token", default=None, help="Upload token, if the registry requires one.")
@click.pass_context
def publish(ctx: click.Context, project_dir: str, archive_path: Optional[str], name: Optional[str], token: Optional[str]) -> None:
    """Upload the plugin archive to the registry."""
    registry_url = ctx.obj.get("registry_url")
    if not registry_url:
        _fail(VALIDATION_ERROR, "no registry URL; pass --registry http://host:port")
    project = _load_project(project_dir)
    if archive_path is None:
        try:
            archive_path = str(bundle_project(project).archive_path)
        except (BuildFailure, ManifestMissing, OSError) as exc:
            _fail(VALIDATION_ERROR, str(exc))
    if name is None:
        name = project.name if ctx.obj["yes"] else click.prompt("Plugin name", default=project.name)
    if not ctx.obj["yes"] and not click.confirm(f"Publish {archive_path} as {name!r} to {registry_url}?"):
        _fail(VALIDATION_ERROR, "publish cancelled")
    try:
        record = publish_archive(archive_path, registry_url, name, token=token)
    except RegistryUnreachable as exc:
        _fail(NETWORK_ERROR, str(exc))
    except RegistryRejected as exc:
        _fail(VALIDATION_ERROR, str(exc))
    click.echo(f"pluginKey:      {record['pluginKey']}")
    click.echo(f"contentHash:    {record['contentHash']}")
    click.echo(f"remoteEntryURL: {record['remoteEntryURL']}")


# --- services -------------------------------------------------------------------


def _advertised_address(configured_host: str, probe_group: str) -> str:
    if configured_host not in ("", "0.0.0.0"):
        return configured_host
    try:
        with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
            sock.connect((probe_group, 1))
            return sock.getsockname()[0]
    except OSError:
        return "127.0.0.1"


@main.command()
@click.pass_context
def server(ctx: click.Context) -> None:
    """Run the platform server (and its discovery beacon, if enabled)."""
    import uvicorn

    from .discovery import BeaconConfig, DiscoveryBeacon, ServerInfo, SocketUnavailable
    from .platform.app import create_app

    config = load_config(ctx.obj.get("config_path"))
    app = create_app(config.platform)
    beacon = None
    if config.discovery.enabled:
        info = ServerInfo(
            name=config.platform.name,
            address=_advertised_address(config.platform.host, config.discovery.group),
            port=config.platform.port,
            passkey=config.platform.passkey,
        )
        beacon = DiscoveryBeacon(
            BeaconConfig(
                group=config.discovery.group,
                port=config.discovery.port,
                codeword=config.discovery.codeword,
                buffer_size=config.discovery.buffer_size,
                response_info=info,
            )
        )
        try:
            beacon.start()
        except SocketUnavailable as exc:
            _fail(NETWORK_ERROR, f"discovery beacon failed to start: {exc}")
    try:
        uvicorn.run(app, host=config.platform.host, port=config.platform.port)
    finally:
        if beacon is not None:
            beacon.stop()


@main.command()
@click.pass_context
def registry(ctx: click.Context) -> None:
    """Run the plugin registry."""
    import uvicorn

    from .registry.app import create_registry_app

    config = load_config(ctx.obj.get("config_path"))
    uvicorn.run(
        create_registry_app(config.registry),
        host=config.registry.host,
        port=config.registry.port,
    )


@main.command()
@click.pass_context
def gateway(ctx: click.Context) -> None:
    """Run the loopback discovery gateway used by browser clients."""
    import uvicorn

    from .discovery.gateway import create_gateway_app

    config = load_config(ctx.obj.get("config_path"))
    uvicorn.run(
        create_gateway_app(config.discovery),
        host=config.discovery.gateway_host,
        port=config.discovery.gateway_port,
    )


if __name__ == "__main__":
    main()
