from .beacon import BeaconConfig, DiscoveryBeacon, ServerInfo, SocketUnavailable
from .probe import probe_multicast, sweep_http

__all__ = [
    "BeaconConfig",
    "DiscoveryBeacon",
    "ServerInfo",
    "SocketUnavailable",
    "probe_multicast",
    "sweep_http",
]
