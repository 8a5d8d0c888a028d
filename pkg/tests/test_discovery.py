import json
import socket
import time
import uuid

import pytest
from fastapi.testclient import TestClient

from netutil import AppServer, DecoyServer, free_udp_port, json_decoy
from plugdeck.config import DiscoveryConfig, PlatformConfig
from plugdeck.discovery import (
    BeaconConfig,
    DiscoveryBeacon,
    ServerInfo,
    SocketUnavailable,
    probe_multicast,
    sweep_http,
)
from plugdeck.discovery.gateway import create_gateway_app
from plugdeck.platform.app import create_app
from plugdeck.platform.core import PlatformCore

GROUP = "239.255.77.42"
LOOPBACK = "127.0.0.1"


def beacon_config(port, codeword="SECRET_HANDSHAKE", name="test platform", http_port=8450):
    return BeaconConfig(
        group=GROUP,
        port=port,
        codeword=codeword,
        response_info=ServerInfo(name=name, address=LOOPBACK, port=http_port, passkey="pk"),
        interface=LOOPBACK,
    )


def test_probe_finds_running_beacon():
    port = free_udp_port()
    with DiscoveryBeacon(beacon_config(port)):
        found = probe_multicast(GROUP, port, "SECRET_HANDSHAKE", timeout=0.5, interface=LOOPBACK)
    assert [info.name for info in found] == ["test platform"]
    assert found[0].address == LOOPBACK
    assert found[0].passkey == "pk"


def test_wrong_codeword_gets_no_reply():
    port = free_udp_port()
    with DiscoveryBeacon(beacon_config(port)):
        found = probe_multicast(GROUP, port, "hello", timeout=0.4, interface=LOOPBACK)
    assert found == []


def test_no_beacons_times_out_empty():
    port = free_udp_port()
    found = probe_multicast(GROUP, port, "SECRET_HANDSHAKE", timeout=0.2, interface=LOOPBACK)
    assert found == []


def test_two_beacons_both_discovered():
    port = free_udp_port()
    with DiscoveryBeacon(beacon_config(port, name="alpha", http_port=1111)), DiscoveryBeacon(
        beacon_config(port, name="beta", http_port=2222)
    ):
        found = probe_multicast(GROUP, port, "SECRET_HANDSHAKE", timeout=0.5, interface=LOOPBACK)
    assert {info.name for info in found} == {"alpha", "beta"}


def test_beacon_replies_once_per_matching_probe():
    port = free_udp_port()
    n = 50
    with DiscoveryBeacon(beacon_config(port)):
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM, socket.IPPROTO_UDP)
        sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_IF, socket.inet_aton(LOOPBACK))
        sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_LOOP, 1)
        with sock:
            for _ in range(n):
                sock.sendto(b"SECRET_HANDSHAKE", (GROUP, port))
            replies = 0
            sock.settimeout(0.3)
            while True:
                try:
                    payload, _ = sock.recvfrom(4096)
                except socket.timeout:
                    break
                assert json.loads(payload)["name"] == "test platform"
                replies += 1
    assert replies == n


def test_padded_codeword_still_matches():
    # a probe built on a fixed 256-byte buffer arrives NUL-padded
    port = free_udp_port()
    with DiscoveryBeacon(beacon_config(port)):
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM, socket.IPPROTO_UDP)
        sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_IF, socket.inet_aton(LOOPBACK))
        sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_LOOP, 1)
        with sock:
            padded = b"SECRET_HANDSHAKE" + b"\x00" * (256 - len(b"SECRET_HANDSHAKE"))
            sock.sendto(padded, (GROUP, port))
            sock.settimeout(0.5)
            payload, _ = sock.recvfrom(4096)
    assert json.loads(payload)["passkey"] == "pk"


def test_beacon_config_validation():
    with pytest.raises(ValueError):
        BeaconConfig(
            group="10.0.0.1",  # not multicast
            port=1,
            codeword="x",
            response_info=ServerInfo("n", "a", 1, "p"),
        ).validate()
    with pytest.raises(ValueError):
        BeaconConfig(
            group=GROUP,
            port=1,
            codeword="x" * 300,
            response_info=ServerInfo("n", "a", 1, "p"),
            buffer_size=256,
        ).validate()


# --- HTTP passkey sweep ---------------------------------------------------------


def test_sweep_finds_platform_among_decoys(tmp_path):
    config = PlatformConfig(passkey="sweep-pk", data_dir=str(tmp_path), password_iterations=1000)
    app = create_app(config, core=PlatformCore(config))
    with AppServer(app) as platform, DecoyServer() as decoy_a, json_decoy(
        {"passkey": "not-it"}
    ) as decoy_b, DecoyServer(status=404) as decoy_c:
        candidates = [decoy_a.address, platform.address, decoy_b.address, decoy_c.address]
        assert sweep_http(candidates, "sweep-pk", timeout=2.0) == [platform.address]


def test_sweep_of_closed_port_is_empty():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        closed = f"127.0.0.1:{sock.getsockname()[1]}"
    assert sweep_http([closed], "pk", timeout=0.5) == []


def test_sweep_empty_candidates():
    assert sweep_http([], "pk") == []


# --- gateway -----------------------------------------------------------------------


def test_gateway_discovers_beacon():
    port = free_udp_port()
    config = DiscoveryConfig(group=GROUP, port=port, codeword="SECRET_HANDSHAKE", timeout_ms=400)
    gateway = TestClient(create_gateway_app(config, interface=LOOPBACK))
    with DiscoveryBeacon(beacon_config(port)):
        response = gateway.get("/discover")
    assert response.status_code == 200
    assert [info["name"] for info in response.json()] == ["test platform"]
    # read-only: a second call behaves identically with no beacon state change
    with DiscoveryBeacon(beacon_config(port)):
        again = gateway.get("/discover")
    assert [info["name"] for info in again.json()] == ["test platform"]


def test_gateway_empty_when_no_beacons():
    config = DiscoveryConfig(group=GROUP, port=free_udp_port(), codeword="X", timeout_ms=200)
    gateway = TestClient(create_gateway_app(config, interface=LOOPBACK))
    response = gateway.get("/discover")
    assert response.status_code == 200
    assert response.json() == []
