"""Codeword beacon: how a platform announces itself on the LAN.

The beacon joins a multicast group and waits.  Any UDP datagram whose
payload is exactly the shared codeword gets one unicast JSON reply with the
platform's connection details; anything else is ignored.  The codeword is
fixed per deployment and set in config (randomising or encrypting it is a
known hardening avenue, out of scope here).
"""

from __future__ import annotations

import ipaddress
import json
import logging
import socket
import struct
import threading
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)


class SocketUnavailable(Exception):
    """The probe or beacon socket could not be opened/joined."""


@dataclass(frozen=True)
class ServerInfo:
    """What a platform reveals about itself to a discovering client."""

    name: str
    address: str
    port: int
    passkey: str

    def to_json(self) -> dict:
        return {"name": self.name, "address": self.address, "port": self.port, "passkey": self.passkey}

    @classmethod
    def from_json(cls, doc: dict) -> "ServerInfo":
        return cls(
            name=str(doc["name"]),
            address=str(doc["address"]),
            port=int(doc["port"]),
            passkey=str(doc["passkey"]),
        )


@dataclass
class BeaconConfig:
    group: str
    port: int
    codeword: str
    response_info: ServerInfo
    buffer_size: int = 256
    # interface whose address we join the group on; 0.0.0.0 lets the kernel pick
    interface: str = "0.0.0.0"

    def validate(self) -> None:
        if not ipaddress.ip_address(self.group).is_multicast:
            raise ValueError(f"{self.group} is not a multicast address")
        if self.buffer_size < len(self.codeword.encode("utf-8")):
            raise ValueError("bufferSize must hold the whole codeword")


def _matches_codeword(payload: bytes, codeword: str) -> bool:
    # senders reusing a fixed-size buffer pad the tail with NULs; trim those
    # before the exact-match comparison
    return payload.rstrip(b"\x00") == codeword.encode("utf-8")


class DiscoveryBeacon:
    """Long-lived receive loop answering codeword probes with ServerInfo.

    Stateless by design: the reply depends only on config, never on probe
    history, so any number of probes get identical answers.
    """

    def __init__(self, config: BeaconConfig):
        config.validate()
        self.config = config
        self._sock: socket.socket | None = None
        self._thread: threading.Thread | None = None
        self._stopped = threading.Event()

    def start(self) -> None:
        config = self.config
        try:
            sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM, socket.IPPROTO_UDP)
            sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            if hasattr(socket, "SO_REUSEPORT"):
                sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEPORT, 1)
            sock.bind(("", config.port))
            mreq = struct.pack(
                "4s4s", socket.inet_aton(config.group), socket.inet_aton(config.interface)
            )
            sock.setsockopt(socket.IPPROTO_IP, socket.IP_ADD_MEMBERSHIP, mreq)
            sock.settimeout(0.5)
        except OSError as exc:
            raise SocketUnavailable(f"cannot join {config.group}:{config.port}: {exc}") from exc
        self._sock = sock
        self._reply = json.dumps(config.response_info.to_json()).encode("utf-8")
        self._thread = threading.Thread(target=self._run, name="discovery-beacon", daemon=True)
        self._thread.start()
        logger.info("beacon listening on %s:%d", config.group, config.port)

    def _run(self) -> None:
        assert self._sock is not None
        while not self._stopped.is_set():
            try:
                payload, sender = self._sock.recvfrom(self.config.buffer_size)
            except socket.timeout:
                continue
            except OSError:
                if self._stopped.is_set():
                    return
                logger.exception("beacon receive failed; continuing")
                continue
            if not _matches_codeword(payload, self.config.codeword):
                continue
            try:
                self._sock.sendto(self._reply, sender)
            except OSError:
                logger.exception("beacon reply to %s failed; continuing", sender)

    def stop(self) -> None:
        self._stopped.set()
        if self._thread is not None:
            self._thread.join(timeout=2)
        if self._sock is not None:
            self._sock.close()

    def __enter__(self) -> "DiscoveryBeacon":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()
