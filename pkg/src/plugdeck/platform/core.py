"""Transport-independent platform state machine.

Holds users, plugin instances, per-instance datagram stores, and the
subscriber sets; every mutation funnels through one lock, which is the
ordering point that gives all subscribers of an instance the same delivery
sequence.  Transports (the websocket layer, tests) plug in by subclassing
:class:`Session` and implementing ``deliver``.

The relay path never talks to the registry: instances reference plugin
bundles by key/URL only, so registry downtime cannot affect message flow.
"""

from __future__ import annotations

import hashlib
import hmac
import logging
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from ..config import PlatformConfig
from ..protocol import (
    ABSENT,
    ErrorInfo,
    FrameType,
    ProtocolKind,
    Request,
    Response,
    WireFrame,
    to_response,
)
from .storage import EventLog

logger = logging.getLogger(__name__)


class AuthFailure(Exception):
    """Name exists but the password does not verify (or registration closed)."""


class NotSignedOn(Exception):
    """Session tried to use the relay before reaching plugin access."""


class UnknownInstance(Exception):
    pass


class UnknownDatagram(Exception):
    pass


class SenderMismatch(Exception):
    pass


@dataclass
class UserRecord:
    user_id: uuid.UUID
    name: str
    salt: bytes
    digest: bytes
    iterations: int


@dataclass(frozen=True)
class PluginRef:
    registry_key: uuid.UUID
    version: str
    remote_entry_url: str


@dataclass(frozen=True)
class PluginInstance:
    instance_key: uuid.UUID
    plugin_ref: PluginRef
    display_name: str
    created_at: str

    def to_json(self) -> dict:
        return {
            "instanceKey": str(self.instance_key),
            "pluginRef": {
                "registryKey": str(self.plugin_ref.registry_key),
                "version": self.plugin_ref.version,
                "remoteEntryURL": self.plugin_ref.remote_entry_url,
            },
            "displayName": self.display_name,
            "createdAt": self.created_at,
        }


class SessionState(Enum):
    LANDING = "landing"
    PLUGIN_ACCESS = "pluginAccess"


class Session:
    """One signed-on connection.  Transports implement ``deliver``."""

    def __init__(self, client_id: uuid.UUID):
        self.client_id = client_id
        self.state = SessionState.LANDING
        self.subscriptions: set[uuid.UUID] = set()

    def deliver(self, frame: WireFrame) -> bool:
        """Enqueue a frame for this client; False means the buffer is full."""
        raise NotImplementedError

    def close_with_error(self, error: ErrorInfo) -> None:
        """Called when the platform gives up on the connection (overflow)."""


def hash_password(password: str, salt: bytes, iterations: int) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, iterations)


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


BUFFER_OVERFLOW = ErrorInfo("buffer-overflow", "delivery buffer limit exceeded; connection closed")


class PlatformCore:
    """State and rules of one platform instance."""

    def __init__(self, config: PlatformConfig, log: Optional[EventLog] = None):
        self.config = config
        self._lock = threading.RLock()
        self._users: dict[str, UserRecord] = {}
        self._users_by_id: dict[uuid.UUID, UserRecord] = {}
        self._instances: dict[uuid.UUID, PluginInstance] = {}
        # keeps stores of removed instances too (frozen), unless purged
        self._stores: dict[uuid.UUID, dict[uuid.UUID, Response]] = {}
        self._subscribers: dict[uuid.UUID, set[Session]] = {}
        self._sessions: set[Session] = set()
        self._log = log
        if log is not None:
            for event in log.replay():
                self._apply_event(event)

    # --- persistence -----------------------------------------------------

    def _record(self, event: dict) -> None:
        if self._log is not None:
            self._log.append(event)

    def _apply_event(self, event: dict) -> None:
        kind = event["event"]
        if kind == "user-registered":
            record = UserRecord(
                user_id=uuid.UUID(event["userID"]),
                name=event["name"],
                salt=bytes.fromhex(event["salt"]),
                digest=bytes.fromhex(event["digest"]),
                iterations=event["iterations"],
            )
            self._users[record.name] = record
            self._users_by_id[record.user_id] = record
        elif kind == "instance-added":
            instance = PluginInstance(
                instance_key=uuid.UUID(event["instanceKey"]),
                plugin_ref=PluginRef(
                    registry_key=uuid.UUID(event["registryKey"]),
                    version=event["version"],
                    remote_entry_url=event["remoteEntryURL"],
                ),
                display_name=event["displayName"],
                created_at=event["createdAt"],
            )
            self._instances[instance.instance_key] = instance
            self._stores[instance.instance_key] = {}
        elif kind == "instance-removed":
            key = uuid.UUID(event["instanceKey"])
            self._instances.pop(key, None)
            if event.get("purge"):
                self._stores.pop(key, None)
        elif kind == "datagram-created":
            from ..protocol import response_from_json

            resp = response_from_json(event["response"])
            self._stores[resp.plugin_id][resp.datagram_id] = resp
        elif kind == "datagram-updated":
            key = uuid.UUID(event["instanceKey"])
            datagram_id = uuid.UUID(event["datagramID"])
            old = self._stores[key][datagram_id]
            self._stores[key][datagram_id] = Response(
                datagram_id=old.datagram_id,
                sender_id=old.sender_id,
                plugin_id=old.plugin_id,
                protocol=old.protocol,
                payload=event["payload"],
            )
        elif kind == "datagram-deleted":
            key = uuid.UUID(event["instanceKey"])
            del self._stores[key][uuid.UUID(event["datagramID"])]
        else:
            logger.warning("skipping unknown event kind in log: %s", kind)

    # --- users -------------------------------------------------------------

    def passkey_info(self) -> dict:
        return {"passkey": self.config.passkey, "name": self.config.name}

    def get_user_id(self, name: str, password: str) -> uuid.UUID:
        """Look up or register a user, per the joining protocol.

        Known name + verifying password returns the stored id; unknown name
        registers a fresh one (unless registration is closed); known name
        with a bad password is an auth failure, never a new account.
        """
        if not name or not password:
            raise AuthFailure("name and password must be non-empty")
        with self._lock:
            record = self._users.get(name)
            if record is not None:
                candidate = hash_password(password, record.salt, record.iterations)
                if not hmac.compare_digest(candidate, record.digest):
                    raise AuthFailure("password does not verify")
                return record.user_id
            if not self.config.open_registration:
                raise AuthFailure("registration is closed on this platform")
            salt = os.urandom(16)
            iterations = self.config.password_iterations
            record = UserRecord(
                user_id=uuid.uuid4(),
                name=name,
                salt=salt,
                digest=hash_password(password, salt, iterations),
                iterations=iterations,
            )
            self._users[name] = record
            self._users_by_id[record.user_id] = record
            self._record(
                {
                    "event": "user-registered",
                    "userID": str(record.user_id),
                    "name": name,
                    "salt": salt.hex(),
                    "digest": record.digest.hex(),
                    "iterations": iterations,
                }
            )
            return record.user_id

    def is_known_client(self, client_id: uuid.UUID) -> bool:
        with self._lock:
            return client_id in self._users_by_id

    # --- sessions ----------------------------------------------------------

    def attach(self, session: Session) -> None:
        with self._lock:
            session.state = SessionState.PLUGIN_ACCESS
            self._sessions.add(session)

    def detach(self, session: Session) -> None:
        with self._lock:
            self._sessions.discard(session)
            for key in session.subscriptions:
                subs = self._subscribers.get(key)
                if subs is not None:
                    subs.discard(session)
            session.subscriptions.clear()

    def _drop_overflowed(self, session: Session) -> None:
        logger.warning("dropping slow client %s: delivery buffer full", session.client_id)
        self.detach(session)
        session.close_with_error(BUFFER_OVERFLOW)

    def _fanout(self, key: uuid.UUID, frame: WireFrame) -> None:
        for subscriber in list(self._subscribers.get(key, ())):
            if not subscriber.deliver(frame):
                self._drop_overflowed(subscriber)

    def _broadcast_instances_changed(self, key: uuid.UUID, event: str) -> None:
        frame = WireFrame(FrameType.INSTANCES_CHANGED, instance_key=key, body={"event": event})
        for session in list(self._sessions):
            if not session.deliver(frame):
                self._drop_overflowed(session)

    # --- plugin instances ---------------------------------------------------

    def add_instance(self, ref: PluginRef, display_name: str) -> PluginInstance:
        if not ref.remote_entry_url.startswith(("http://", "https://")):
            # the platform is registry-agnostic at relay time, so an odd
            # reference is only worth a warning
            logger.warning("plugin reference %r has a non-http remote entry URL", ref.remote_entry_url)
        with self._lock:
            instance = PluginInstance(
                instance_key=uuid.uuid4(),
                plugin_ref=ref,
                display_name=display_name,
                created_at=_now_iso(),
            )
            self._instances[instance.instance_key] = instance
            self._stores[instance.instance_key] = {}
            self._record(
                {
                    "event": "instance-added",
                    "instanceKey": str(instance.instance_key),
                    "registryKey": str(ref.registry_key),
                    "version": ref.version,
                    "remoteEntryURL": ref.remote_entry_url,
                    "displayName": display_name,
                    "createdAt": instance.created_at,
                }
            )
            self._broadcast_instances_changed(instance.instance_key, "added")
            return instance

    def remove_instance(self, key: uuid.UUID, purge: Optional[bool] = None) -> None:
        purge = self.config.purge_on_remove if purge is None else purge
        with self._lock:
            if key not in self._instances:
                raise UnknownInstance(str(key))
            del self._instances[key]
            if purge:
                self._stores.pop(key, None)
            subscribers = self._subscribers.pop(key, set())
            for session in subscribers:
                session.subscriptions.discard(key)
            self._record({"event": "instance-removed", "instanceKey": str(key), "purge": purge})
            self._broadcast_instances_changed(key, "removed")

    def list_instances(self) -> list[PluginInstance]:
        with self._lock:
            return list(self._instances.values())

    def fetch_history(self, key: uuid.UUID) -> list[Response]:
        """Surviving persisted responses in acceptance order (frozen stores
        of removed instances stay readable unless they were purged)."""
        with self._lock:
            store = self._stores.get(key)
            if store is None:
                raise UnknownInstance(str(key))
            return list(store.values())

    # --- relay ---------------------------------------------------------------

    def subscribe(self, session: Session, key: uuid.UUID) -> list[Response]:
        """Register for deliveries and push the history snapshot.

        The snapshot and the registration happen atomically, so the history
        frame plus subsequent deliver frames reconstruct the instance's
        sequence without gaps or duplicates.
        """
        with self._lock:
            if key not in self._instances:
                raise UnknownInstance(str(key))
            self._subscribers.setdefault(key, set()).add(session)
            session.subscriptions.add(key)
            snapshot = list(self._stores[key].values())
            if not session.deliver(WireFrame(FrameType.HISTORY, instance_key=key, body=snapshot)):
                self._drop_overflowed(session)
            return snapshot

    def unsubscribe(self, session: Session, key: uuid.UUID) -> None:
        with self._lock:
            subs = self._subscribers.get(key)
            if subs is not None:
                subs.discard(session)
            session.subscriptions.discard(key)

    def handle_send(self, session: Session, req: Request) -> Response:
        """Accept one request: mutate the store if asked, then fan out.

        Store mutation and fan-out happen under the instance's ordering
        point, so every subscriber (sender included) sees the same sequence
        exactly once.
        """
        req.validate()
        if session.state != SessionState.PLUGIN_ACCESS:
            raise NotSignedOn("session has not reached plugin access")
        if req.sender_id != session.client_id:
            raise SenderMismatch(f"senderID {req.sender_id} != session client {session.client_id}")
        with self._lock:
            if req.plugin_id not in self._instances:
                raise UnknownInstance(str(req.plugin_id))
            store = self._stores[req.plugin_id]
            if req.intent == ProtocolKind.CREATE:
                resp = to_response(req, uuid.uuid4())
                if req.should_persist:
                    store[resp.datagram_id] = resp
                    from ..protocol import response_to_json

                    self._record({"event": "datagram-created", "response": response_to_json(resp)})
            else:
                target = req.target_datagram_id
                if req.should_persist and target not in store:
                    # ephemeral sends may reference datagrams the store never
                    # held, but a persistent mutation needs a live record
                    raise UnknownDatagram(str(target))
                resp = to_response(req, target)
                if req.should_persist and req.intent == ProtocolKind.UPDATE:
                    old = store[target]
                    store[target] = Response(
                        datagram_id=old.datagram_id,
                        sender_id=old.sender_id,
                        plugin_id=old.plugin_id,
                        protocol=old.protocol,
                        payload=req.payload,
                    )
                    self._record(
                        {
                            "event": "datagram-updated",
                            "instanceKey": str(req.plugin_id),
                            "datagramID": str(target),
                            "payload": req.payload,
                        }
                    )
                elif req.should_persist:
                    del store[target]
                    self._record(
                        {
                            "event": "datagram-deleted",
                            "instanceKey": str(req.plugin_id),
                            "datagramID": str(target),
                        }
                    )
            self._fanout(req.plugin_id, WireFrame(FrameType.DELIVER, instance_key=req.plugin_id, body=resp))
            return resp
