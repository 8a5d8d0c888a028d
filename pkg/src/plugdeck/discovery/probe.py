"""Client-side discovery: multicast codeword probe and HTTP passkey sweep.

Both mechanisms find platforms on the local network.  The multicast probe
is the primary path; the sweep is the fallback for networks where multicast
is filtered, probing a finite candidate list and keeping exactly the
addresses that answer ``GET /passkey`` with the expected passkey.
"""

from __future__ import annotations

import json
import logging
import socket
import time
from concurrent.futures import ThreadPoolExecutor

import requests

from .beacon import ServerInfo, SocketUnavailable

logger = logging.getLogger(__name__)


def probe_multicast(
    group: str,
    port: int,
    codeword: str,
    timeout: float = 1.0,
    interface: str = "0.0.0.0",
) -> list[ServerInfo]:
    """Multicast the codeword once and collect unicast replies until timeout.

    Returns one ServerInfo per distinct address:port; beacons that expect a
    different codeword simply never answer.
    """
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM, socket.IPPROTO_UDP)
        if interface != "0.0.0.0":
            sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_IF, socket.inet_aton(interface))
        sock.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_LOOP, 1)
        sock.sendto(codeword.encode("utf-8"), (group, port))
    except OSError as exc:
        raise SocketUnavailable(f"cannot probe {group}:{port}: {exc}") from exc

    found: dict[tuple[str, int], ServerInfo] = {}
    deadline = time.monotonic() + timeout
    with sock:
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            sock.settimeout(remaining)
            try:
                payload, sender = sock.recvfrom(4096)
            except socket.timeout:
                break
            except OSError:
                break
            try:
                doc = json.loads(payload.decode("utf-8"))
                if not doc.get("address"):
                    doc["address"] = sender[0]
                info = ServerInfo.from_json(doc)
            except (ValueError, KeyError, UnicodeDecodeError):
                logger.debug("ignoring unparseable discovery reply from %s", sender)
                continue
            found.setdefault((info.address, info.port), info)
    return list(found.values())


def _has_passkey(address: str, expected: str, timeout: float) -> bool:
    try:
        response = requests.get(f"http://{address}/passkey", timeout=timeout)
        return response.json().get("passkey") == expected
    except (requests.RequestException, ValueError):
        return False


def sweep_http(candidates: list[str], expected_passkey: str, timeout: float = 1.0) -> list[str]:
    """Keep exactly the ``host:port`` candidates that answer with the passkey.

    Candidates are probed concurrently; unreachable or non-platform hosts
    are silently excluded.  Result preserves input order.
    """
    if not candidates:
        return []
    with ThreadPoolExecutor(max_workers=min(16, len(candidates))) as pool:
        verdicts = list(pool.map(lambda c: _has_passkey(c, expected_passkey, timeout), candidates))
    return [c for c, ok in zip(candidates, verdicts) if ok]
