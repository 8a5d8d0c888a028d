import json
import uuid

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plugdeck.protocol import (
    ABSENT,
    ErrorInfo,
    FrameType,
    InvalidRequest,
    MalformedFrame,
    ProtocolKind,
    Request,
    Response,
    WireFrame,
    canonical_payload,
    decode_frame,
    encode_frame,
    error_frame,
    to_response,
)

# --- strategies -----------------------------------------------------------

json_values = st.recursive(
    st.none()
    | st.booleans()
    | st.integers(min_value=-(2**53), max_value=2**53)
    | st.floats(allow_nan=False, allow_infinity=False)
    | st.text(max_size=20),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(max_size=8), children, max_size=4),
    max_leaves=10,
)

uuids = st.uuids(version=4).filter(lambda u: u.int != 0)


@st.composite
def requests(draw, intent=None):
    kind = intent if intent is not None else draw(st.sampled_from(list(ProtocolKind)))
    payload = draw(json_values) if kind != ProtocolKind.DELETE else ABSENT
    target = draw(uuids) if kind != ProtocolKind.CREATE else None
    return Request(
        sender_id=draw(uuids),
        plugin_id=draw(uuids),
        intent=kind,
        should_persist=draw(st.booleans()),
        payload=payload,
        target_datagram_id=target,
    )


@st.composite
def responses(draw, plugin_id=None):
    kind = draw(st.sampled_from(list(ProtocolKind)))
    return Response(
        datagram_id=draw(uuids),
        sender_id=draw(uuids),
        plugin_id=plugin_id if plugin_id is not None else draw(uuids),
        protocol=kind,
        payload=draw(json_values) if kind != ProtocolKind.DELETE else ABSENT,
    )


@st.composite
def frames(draw):
    frame_type = draw(st.sampled_from(list(FrameType)))
    key = draw(uuids)
    if frame_type in (FrameType.SUBSCRIBE, FrameType.UNSUBSCRIBE):
        return WireFrame(frame_type=frame_type, instance_key=key)
    if frame_type == FrameType.SEND:
        req = draw(requests())
        return WireFrame(frame_type=frame_type, instance_key=req.plugin_id, body=req)
    if frame_type == FrameType.DELIVER:
        resp = draw(responses(plugin_id=key))
        return WireFrame(frame_type=frame_type, instance_key=key, body=resp)
    if frame_type == FrameType.HISTORY:
        body = draw(st.lists(responses(plugin_id=key), max_size=5))
        return WireFrame(frame_type=frame_type, instance_key=key, body=body)
    if frame_type == FrameType.ERROR:
        return WireFrame(
            frame_type=frame_type,
            instance_key=draw(st.none() | uuids),
            body=ErrorInfo(code=draw(st.text(min_size=1, max_size=10)), message=draw(st.text(max_size=30))),
        )
    return WireFrame(
        frame_type=FrameType.INSTANCES_CHANGED,
        instance_key=key,
        body={"event": draw(st.sampled_from(["added", "removed"]))},
    )


# --- frame codec ----------------------------------------------------------


def test_subscribe_frame_is_single_json_object():
    key = uuid.uuid4()
    raw = encode_frame(WireFrame(FrameType.SUBSCRIBE, instance_key=key))
    assert raw.endswith(b"\n")
    doc = json.loads(raw)
    assert doc == {"frameType": "subscribe", "instanceKey": str(key)}


def test_deliver_frame_carries_all_five_response_fields():
    resp = Response(
        datagram_id=uuid.uuid4(),
        sender_id=uuid.uuid4(),
        plugin_id=uuid.uuid4(),
        protocol=ProtocolKind.CREATE,
        payload={"text": "hi"},
    )
    doc = json.loads(encode_frame(WireFrame(FrameType.DELIVER, resp.plugin_id, resp)))
    assert set(doc["body"].keys()) == {"datagramID", "senderID", "pluginID", "payload", "protocol"}


@settings(max_examples=1000, deadline=None)
@given(frames())
def test_encode_decode_roundtrip(frame):
    assert decode_frame(encode_frame(frame)) == frame


def test_decode_empty_bytes_is_malformed():
    with pytest.raises(MalformedFrame):
        decode_frame(b"")


def test_decode_rejects_unknown_protocol_kind():
    # every string outside the three-variant enum must be rejected
    key = str(uuid.uuid4())
    for bad in ["upsert", "CREATE", "Create", "remove", "", "creat", "deletee"]:
        doc = {
            "frameType": "send",
            "instanceKey": key,
            "body": {
                "senderID": str(uuid.uuid4()),
                "pluginID": key,
                "payload": {},
                "shouldPersist": True,
                "intent": bad,
            },
        }
        with pytest.raises(MalformedFrame):
            decode_frame(json.dumps(doc).encode())


def test_decode_rejects_non_json_and_missing_fields():
    with pytest.raises(MalformedFrame):
        decode_frame(b"not json at all")
    with pytest.raises(MalformedFrame):
        decode_frame(b'{"frameType": "teleport"}')
    with pytest.raises(MalformedFrame):
        decode_frame(b'{"frameType": "send", "instanceKey": "nope", "body": {}}')
    # send body missing intent
    key = str(uuid.uuid4())
    with pytest.raises(MalformedFrame):
        decode_frame(
            json.dumps(
                {
                    "frameType": "send",
                    "instanceKey": key,
                    "body": {"senderID": key, "pluginID": key, "shouldPersist": True},
                }
            ).encode()
        )


def test_decode_rejects_instance_key_mismatch():
    req = Request(
        sender_id=uuid.uuid4(),
        plugin_id=uuid.uuid4(),
        intent=ProtocolKind.CREATE,
        should_persist=True,
        payload=1,
    )
    doc = json.loads(encode_frame(WireFrame(FrameType.SEND, req.plugin_id, req)))
    doc["instanceKey"] = str(uuid.uuid4())
    with pytest.raises(MalformedFrame):
        decode_frame(json.dumps(doc).encode())


def test_decoded_send_frame_roundtrips():
    req = Request(
        sender_id=uuid.uuid4(),
        plugin_id=uuid.uuid4(),
        intent=ProtocolKind.UPDATE,
        should_persist=False,
        payload=["a", {"b": 2}],
        target_datagram_id=uuid.uuid4(),
    )
    frame = WireFrame(FrameType.SEND, req.plugin_id, req)
    assert decode_frame(encode_frame(frame)) == frame


def test_error_frame_helper_roundtrips():
    frame = error_frame("unknown-instance", "no such instance")
    decoded = decode_frame(encode_frame(frame))
    assert decoded.body == ErrorInfo("unknown-instance", "no such instance")


def test_protocol_kind_serialisation_bijection():
    assert {k.value for k in ProtocolKind} == {"create", "update", "delete"}
    assert len(ProtocolKind) == 3
    for k in ProtocolKind:
        assert ProtocolKind(k.value) is k


# --- toResponse -----------------------------------------------------------


def test_to_response_create_stamps_fresh_id():
    req = Request(
        sender_id=uuid.uuid4(),
        plugin_id=uuid.uuid4(),
        intent=ProtocolKind.CREATE,
        should_persist=True,
        payload={"text": "hi"},
    )
    fresh = uuid.uuid4()
    resp = to_response(req, fresh)
    assert resp.datagram_id == fresh
    assert resp.protocol == ProtocolKind.CREATE
    assert resp.payload == {"text": "hi"}
    assert resp.sender_id == req.sender_id
    assert resp.plugin_id == req.plugin_id


def test_to_response_delete_has_no_payload():
    target = uuid.uuid4()
    req = Request(
        sender_id=uuid.uuid4(),
        plugin_id=uuid.uuid4(),
        intent=ProtocolKind.DELETE,
        should_persist=True,
        target_datagram_id=target,
    )
    resp = to_response(req, target)
    assert resp.datagram_id == target
    assert resp.protocol == ProtocolKind.DELETE
    assert resp.payload is ABSENT
    assert "payload" not in json.loads(encode_frame(WireFrame(FrameType.DELIVER, resp.plugin_id, resp)))["body"]


@settings(max_examples=500, deadline=None)
@given(requests(intent=ProtocolKind.CREATE), uuids)
def test_to_response_field_set_law(req, fresh):
    # response field set = request fields - shouldPersist + {datagramID, protocol}
    req_doc = json.loads(encode_frame(WireFrame(FrameType.SEND, req.plugin_id, req)))["body"]
    resp = to_response(req, fresh)
    resp_doc = json.loads(encode_frame(WireFrame(FrameType.DELIVER, resp.plugin_id, resp)))["body"]
    expected = (set(req_doc) - {"shouldPersist", "intent"}) | {"datagramID", "protocol"}
    assert set(resp_doc) == expected
    assert "shouldPersist" not in resp_doc


@settings(max_examples=200, deadline=None)
@given(requests())
def test_to_response_payload_opacity(req):
    fresh = uuid.uuid4() if req.intent == ProtocolKind.CREATE else req.target_datagram_id
    resp = to_response(req, fresh)
    if req.payload is ABSENT:
        assert resp.payload is ABSENT
    else:
        assert canonical_payload(resp.payload) == canonical_payload(req.payload)


def test_to_response_rejects_invalid_requests():
    with pytest.raises(InvalidRequest):
        to_response(
            Request(
                sender_id=uuid.UUID(int=0),
                plugin_id=uuid.uuid4(),
                intent=ProtocolKind.CREATE,
                should_persist=True,
                payload=1,
            ),
            uuid.uuid4(),
        )
    # create without payload
    with pytest.raises(InvalidRequest):
        to_response(
            Request(
                sender_id=uuid.uuid4(),
                plugin_id=uuid.uuid4(),
                intent=ProtocolKind.CREATE,
                should_persist=True,
            ),
            uuid.uuid4(),
        )
    # update whose fresh id disagrees with its target
    with pytest.raises(InvalidRequest):
        to_response(
            Request(
                sender_id=uuid.uuid4(),
                plugin_id=uuid.uuid4(),
                intent=ProtocolKind.UPDATE,
                should_persist=True,
                payload=2,
                target_datagram_id=uuid.uuid4(),
            ),
            uuid.uuid4(),
        )


def test_scalar_payloads_are_accepted():
    # JsonNode covers any JSON value, not just objects
    for payload in ["bare string", 42, 3.5, True, None, []]:
        req = Request(
            sender_id=uuid.uuid4(),
            plugin_id=uuid.uuid4(),
            intent=ProtocolKind.CREATE,
            should_persist=False,
            payload=payload,
        )
        frame = WireFrame(FrameType.SEND, req.plugin_id, req)
        assert decode_frame(encode_frame(frame)) == frame


def test_canonical_payload_normalises_key_order():
    assert canonical_payload({"b": 1, "a": [1.0, 2]}) == canonical_payload({"a": [1.0, 2], "b": 1})
