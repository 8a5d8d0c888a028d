"""Datagram data model and wire codec.

Everything relayed through a platform travels as newline-delimited UTF-8
JSON frames over the duplex channel.  A ``Request`` is the inbound unit
(client -> server), a ``Response`` the outbound one (server -> client); the
server turns one into the other with :func:`to_response`, which strips the
persistence flag and stamps a datagram id and protocol kind.

The exact grammar is documented in ``docs/wire-format.md``; that document is
the compatibility contract with the web client.  All functions here are pure
and safe to call from any thread.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Union


class MalformedFrame(Exception):
    """Inbound bytes do not parse into a valid frame.

    Signals that the connection should receive an error frame, not be
    dropped.
    """


class InvalidRequest(Exception):
    """A request value violates its own invariants."""


class ProtocolKind(str, Enum):
    CREATE = "create"
    UPDATE = "update"
    DELETE = "delete"


class _Absent:
    """Marker for a JSON field that is not present (distinct from null)."""

    _instance: Optional["_Absent"] = None

    def __new__(cls) -> "_Absent":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ABSENT"

    def __bool__(self) -> bool:
        return False


#: Singleton used for optional payload fields; `None` means JSON null.
ABSENT = _Absent()

JsonValue = Any

NIL_UUID = uuid.UUID(int=0)


def canonical_payload(value: JsonValue) -> str:
    """Canonical JSON serialisation used for payload comparison.

    Key order is ignored and number formats are normalised, so two payloads
    are "the same datagram" iff their canonical strings are equal.
    """
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class Request:
    """Client-to-server datagram, per the request column of the schema."""

    sender_id: uuid.UUID
    plugin_id: uuid.UUID
    intent: ProtocolKind
    should_persist: bool
    payload: JsonValue = ABSENT
    target_datagram_id: Optional[uuid.UUID] = None

    def validate(self) -> None:
        if self.sender_id == NIL_UUID:
            raise InvalidRequest("senderID must be a non-nil UUID")
        if self.plugin_id == NIL_UUID:
            raise InvalidRequest("pluginID must be a non-nil UUID")
        wants_payload = self.intent in (ProtocolKind.CREATE, ProtocolKind.UPDATE)
        if wants_payload and self.payload is ABSENT:
            raise InvalidRequest(f"{self.intent.value} request requires a payload")
        if not wants_payload and self.payload is not ABSENT:
            raise InvalidRequest("delete request must not carry a payload")
        wants_target = self.intent in (ProtocolKind.UPDATE, ProtocolKind.DELETE)
        if wants_target and self.target_datagram_id is None:
            raise InvalidRequest(f"{self.intent.value} request requires targetDatagramID")
        if not wants_target and self.target_datagram_id is not None:
            raise InvalidRequest("create request must not carry targetDatagramID")


@dataclass(frozen=True)
class Response:
    """Server-to-client datagram: request fields minus the persistence flag,
    plus the server-stamped datagramID and protocol kind."""

    datagram_id: uuid.UUID
    sender_id: uuid.UUID
    plugin_id: uuid.UUID
    protocol: ProtocolKind
    payload: JsonValue = ABSENT

    def validate(self) -> None:
        if self.datagram_id == NIL_UUID:
            raise MalformedFrame("datagramID must be a non-nil UUID")


@dataclass(frozen=True)
class ErrorInfo:
    code: str
    message: str


class FrameType(str, Enum):
    SUBSCRIBE = "subscribe"
    UNSUBSCRIBE = "unsubscribe"
    SEND = "send"
    DELIVER = "deliver"
    HISTORY = "history"
    ERROR = "error"
    # Server-pushed control frame announcing a hot-plug event.
    INSTANCES_CHANGED = "instances-changed"


FrameBody = Union[Request, Response, list, ErrorInfo, dict, None]


@dataclass(frozen=True)
class WireFrame:
    """One unit on the duplex channel: a typed envelope around a body.

    ``instance_key`` names the plugin instance the frame concerns; it is
    required for every frame type except ``error``.  For send/deliver frames
    it must agree with the body's pluginID, and every response in a history
    body must carry it as pluginID.
    """

    frame_type: FrameType
    instance_key: Optional[uuid.UUID] = None
    body: FrameBody = None

    def validate(self) -> None:
        ft = self.frame_type
        if ft != FrameType.ERROR and self.instance_key is None:
            raise MalformedFrame(f"{ft.value} frame requires instanceKey")
        if ft in (FrameType.SUBSCRIBE, FrameType.UNSUBSCRIBE):
            if self.body is not None:
                raise MalformedFrame(f"{ft.value} frame carries no body")
        elif ft == FrameType.SEND:
            if not isinstance(self.body, Request):
                raise MalformedFrame("send frame requires a request body")
            self.body.validate()
            if self.body.plugin_id != self.instance_key:
                raise MalformedFrame("send frame instanceKey must equal request pluginID")
        elif ft == FrameType.DELIVER:
            if not isinstance(self.body, Response):
                raise MalformedFrame("deliver frame requires a response body")
            self.body.validate()
            if self.body.plugin_id != self.instance_key:
                raise MalformedFrame("deliver frame instanceKey must equal response pluginID")
        elif ft == FrameType.HISTORY:
            if not isinstance(self.body, list) or not all(
                isinstance(r, Response) for r in self.body
            ):
                raise MalformedFrame("history frame requires a list of responses")
            for r in self.body:
                r.validate()
                if r.plugin_id != self.instance_key:
                    raise MalformedFrame("history entries must belong to the frame's instance")
        elif ft == FrameType.ERROR:
            if not isinstance(self.body, ErrorInfo):
                raise MalformedFrame("error frame requires an error body")
        elif ft == FrameType.INSTANCES_CHANGED:
            if not (isinstance(self.body, dict) and self.body.get("event") in ("added", "removed")):
                raise MalformedFrame("instances-changed frame requires an event body")


def to_response(req: Request, fresh_id: uuid.UUID) -> Response:
    """Turn an accepted request into the response that gets fanned out.

    For a create, ``fresh_id`` is a newly generated UUID; for update/delete
    it must be the request's target.  The payload passes through untouched.
    """
    req.validate()
    if fresh_id == NIL_UUID:
        raise InvalidRequest("response datagramID must be a non-nil UUID")
    if req.intent != ProtocolKind.CREATE and fresh_id != req.target_datagram_id:
        raise InvalidRequest("update/delete response id must equal targetDatagramID")
    return Response(
        datagram_id=fresh_id,
        sender_id=req.sender_id,
        plugin_id=req.plugin_id,
        protocol=req.intent,
        payload=req.payload,
    )


# --- wire codec ----------------------------------------------------------


def _uuid_str(value: uuid.UUID) -> str:
    return str(value)


def request_to_json(req: Request) -> dict:
    doc: dict = {
        "senderID": _uuid_str(req.sender_id),
        "pluginID": _uuid_str(req.plugin_id),
        "shouldPersist": req.should_persist,
        "intent": req.intent.value,
    }
    if req.payload is not ABSENT:
        doc["payload"] = req.payload
    if req.target_datagram_id is not None:
        doc["targetDatagramID"] = _uuid_str(req.target_datagram_id)
    return doc


def response_to_json(resp: Response) -> dict:
    doc: dict = {
        "datagramID": _uuid_str(resp.datagram_id),
        "senderID": _uuid_str(resp.sender_id),
        "pluginID": _uuid_str(resp.plugin_id),
        "protocol": resp.protocol.value,
    }
    if resp.payload is not ABSENT:
        doc["payload"] = resp.payload
    return doc


def encode_frame(frame: WireFrame) -> bytes:
    """Encode a valid frame as one newline-terminated UTF-8 JSON line."""
    frame.validate()
    doc: dict = {"frameType": frame.frame_type.value}
    if frame.instance_key is not None:
        doc["instanceKey"] = _uuid_str(frame.instance_key)
    if isinstance(frame.body, Request):
        doc["body"] = request_to_json(frame.body)
    elif isinstance(frame.body, Response):
        doc["body"] = response_to_json(frame.body)
    elif frame.frame_type == FrameType.HISTORY:
        doc["body"] = [response_to_json(r) for r in frame.body]
    elif isinstance(frame.body, ErrorInfo):
        doc["body"] = {"code": frame.body.code, "message": frame.body.message}
    elif frame.body is not None:
        doc["body"] = frame.body
    return (json.dumps(doc, separators=(",", ":"), ensure_ascii=False) + "\n").encode("utf-8")


def _parse_uuid(value: Any, field: str) -> uuid.UUID:
    if not isinstance(value, str):
        raise MalformedFrame(f"{field} must be a UUID string")
    try:
        parsed = uuid.UUID(value)
    except (ValueError, AttributeError, TypeError):
        raise MalformedFrame(f"{field} is not a valid UUID: {value!r}") from None
    return parsed


def _parse_kind(value: Any, field: str) -> ProtocolKind:
    try:
        return ProtocolKind(value)
    except ValueError:
        raise MalformedFrame(f"{field} must be one of create/update/delete, got {value!r}") from None


def request_from_json(doc: Any) -> Request:
    if not isinstance(doc, dict):
        raise MalformedFrame("request body must be a JSON object")
    for field in ("senderID", "pluginID", "shouldPersist", "intent"):
        if field not in doc:
            raise MalformedFrame(f"request body missing {field}")
    if not isinstance(doc["shouldPersist"], bool):
        raise MalformedFrame("shouldPersist must be a boolean")
    target = doc.get("targetDatagramID")
    return Request(
        sender_id=_parse_uuid(doc["senderID"], "senderID"),
        plugin_id=_parse_uuid(doc["pluginID"], "pluginID"),
        intent=_parse_kind(doc["intent"], "intent"),
        should_persist=doc["shouldPersist"],
        payload=doc["payload"] if "payload" in doc else ABSENT,
        target_datagram_id=_parse_uuid(target, "targetDatagramID") if target is not None else None,
    )


def response_from_json(doc: Any) -> Response:
    if not isinstance(doc, dict):
        raise MalformedFrame("response body must be a JSON object")
    for field in ("datagramID", "senderID", "pluginID", "protocol"):
        if field not in doc:
            raise MalformedFrame(f"response body missing {field}")
    if "shouldPersist" in doc:
        raise MalformedFrame("response body must not carry shouldPersist")
    return Response(
        datagram_id=_parse_uuid(doc["datagramID"], "datagramID"),
        sender_id=_parse_uuid(doc["senderID"], "senderID"),
        plugin_id=_parse_uuid(doc["pluginID"], "pluginID"),
        protocol=_parse_kind(doc["protocol"], "protocol"),
        payload=doc["payload"] if "payload" in doc else ABSENT,
    )


def decode_frame(data: bytes) -> WireFrame:
    """Parse one frame line; raises :class:`MalformedFrame` on any defect."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedFrame("frame is not valid UTF-8") from None
    text = text.strip()
    if not text:
        raise MalformedFrame("empty frame")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"frame is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedFrame("frame must be a JSON object")
    try:
        frame_type = FrameType(doc.get("frameType"))
    except ValueError:
        raise MalformedFrame(f"unknown frameType: {doc.get('frameType')!r}") from None
    instance_key = None
    if "instanceKey" in doc:
        instance_key = _parse_uuid(doc["instanceKey"], "instanceKey")

    raw_body = doc.get("body")
    body: FrameBody = None
    if frame_type == FrameType.SEND:
        body = request_from_json(raw_body)
    elif frame_type == FrameType.DELIVER:
        body = response_from_json(raw_body)
    elif frame_type == FrameType.HISTORY:
        if not isinstance(raw_body, list):
            raise MalformedFrame("history body must be a JSON array")
        body = [response_from_json(entry) for entry in raw_body]
    elif frame_type == FrameType.ERROR:
        if not isinstance(raw_body, dict) or "code" not in raw_body or "message" not in raw_body:
            raise MalformedFrame("error body must carry code and message")
        body = ErrorInfo(code=str(raw_body["code"]), message=str(raw_body["message"]))
    elif frame_type == FrameType.INSTANCES_CHANGED:
        body = raw_body
    elif raw_body is not None:
        raise MalformedFrame(f"{frame_type.value} frame carries no body")

    frame = WireFrame(frame_type=frame_type, instance_key=instance_key, body=body)
    try:
        frame.validate()
    except InvalidRequest as exc:
        raise MalformedFrame(str(exc)) from None
    return frame


def error_frame(code: str, message: str, instance_key: Optional[uuid.UUID] = None) -> WireFrame:
    return WireFrame(
        frame_type=FrameType.ERROR,
        instance_key=instance_key,
        body=ErrorInfo(code=code, message=message),
    )
