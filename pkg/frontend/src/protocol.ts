/**
 * Wire protocol mirror of the platform server (see docs/wire-format.md in
 * the repo root — that document is normative, this file follows it).
 *
 * Frames are single JSON objects, UTF-8, newline-terminated; over the
 * websocket each text message carries exactly one frame.
 */

export type ProtocolKind = "create" | "update" | "delete";

export type JsonValue =
  | null
  | boolean
  | number
  | string
  | JsonValue[]
  | { [key: string]: JsonValue };

export interface RequestBody {
  senderID: string;
  pluginID: string;
  shouldPersist: boolean;
  intent: ProtocolKind;
  payload?: JsonValue;
  targetDatagramID?: string;
}

export interface ResponseRecord {
  datagramID: string;
  senderID: string;
  pluginID: string;
  protocol: ProtocolKind;
  payload?: JsonValue;
}

export interface ErrorBody {
  code: string;
  message: string;
}

export type WireFrame =
  | { frameType: "subscribe" | "unsubscribe"; instanceKey: string }
  | { frameType: "send"; instanceKey: string; body: RequestBody }
  | { frameType: "deliver"; instanceKey: string; body: ResponseRecord }
  | { frameType: "history"; instanceKey: string; body: ResponseRecord[] }
  | { frameType: "error"; instanceKey?: string; body: ErrorBody }
  | { frameType: "instances-changed"; instanceKey: string; body: { event: "added" | "removed" } };

export class MalformedFrame extends Error {}

const UUID_PATTERN = /^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$/;
const KINDS: ReadonlySet<string> = new Set(["create", "update", "delete"]);

function requireUuid(value: unknown, field: string): string {
  if (typeof value !== "string" || !UUID_PATTERN.test(value)) {
    throw new MalformedFrame(`${field} must be a lowercase hyphenated UUID, got ${JSON.stringify(value)}`);
  }
  return value;
}

function parseRequest(doc: unknown): RequestBody {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new MalformedFrame("request body must be a JSON object");
  }
  const raw = doc as Record<string, unknown>;
  if (typeof raw.shouldPersist !== "boolean") {
    throw new MalformedFrame("shouldPersist must be a boolean");
  }
  if (typeof raw.intent !== "string" || !KINDS.has(raw.intent)) {
    throw new MalformedFrame(`intent must be create/update/delete, got ${JSON.stringify(raw.intent)}`);
  }
  const intent = raw.intent as ProtocolKind;
  const body: RequestBody = {
    senderID: requireUuid(raw.senderID, "senderID"),
    pluginID: requireUuid(raw.pluginID, "pluginID"),
    shouldPersist: raw.shouldPersist,
    intent,
  };
  const hasPayload = "payload" in raw;
  if (intent === "delete" ? hasPayload : !hasPayload) {
    throw new MalformedFrame(`payload present iff intent is create/update (intent=${intent})`);
  }
  if (hasPayload) body.payload = raw.payload as JsonValue;
  const hasTarget = "targetDatagramID" in raw && raw.targetDatagramID !== null;
  if (intent === "create" ? hasTarget : !hasTarget) {
    throw new MalformedFrame(`targetDatagramID present iff intent is update/delete (intent=${intent})`);
  }
  if (hasTarget) body.targetDatagramID = requireUuid(raw.targetDatagramID, "targetDatagramID");
  return body;
}

function parseResponse(doc: unknown): ResponseRecord {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new MalformedFrame("response body must be a JSON object");
  }
  const raw = doc as Record<string, unknown>;
  if ("shouldPersist" in raw) {
    throw new MalformedFrame("response body must not carry shouldPersist");
  }
  if (typeof raw.protocol !== "string" || !KINDS.has(raw.protocol)) {
    throw new MalformedFrame(`protocol must be create/update/delete, got ${JSON.stringify(raw.protocol)}`);
  }
  const record: ResponseRecord = {
    datagramID: requireUuid(raw.datagramID, "datagramID"),
    senderID: requireUuid(raw.senderID, "senderID"),
    pluginID: requireUuid(raw.pluginID, "pluginID"),
    protocol: raw.protocol as ProtocolKind,
  };
  if ("payload" in raw) record.payload = raw.payload as JsonValue;
  return record;
}

export function encodeFrame(frame: WireFrame): string {
  return JSON.stringify(frame) + "\n";
}

export function decodeFrame(text: string): WireFrame {
  let doc: unknown;
  try {
    doc = JSON.parse(text.trim());
  } catch (error) {
    throw new MalformedFrame(`frame is not valid JSON: ${String(error)}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new MalformedFrame("frame must be a JSON object");
  }
  const raw = doc as Record<string, unknown>;
  const frameType = raw.frameType;
  const key = "instanceKey" in raw ? requireUuid(raw.instanceKey, "instanceKey") : undefined;
  const needKey = (): string => {
    if (key === undefined) throw new MalformedFrame(`${String(frameType)} frame requires instanceKey`);
    return key;
  };
  switch (frameType) {
    case "subscribe":
    case "unsubscribe":
      return { frameType, instanceKey: needKey() };
    case "send": {
      const body = parseRequest(raw.body);
      if (body.pluginID !== needKey()) {
        throw new MalformedFrame("send frame instanceKey must equal request pluginID");
      }
      return { frameType, instanceKey: body.pluginID, body };
    }
    case "deliver": {
      const body = parseResponse(raw.body);
      if (body.pluginID !== needKey()) {
        throw new MalformedFrame("deliver frame instanceKey must equal response pluginID");
      }
      return { frameType, instanceKey: body.pluginID, body };
    }
    case "history": {
      if (!Array.isArray(raw.body)) throw new MalformedFrame("history body must be an array");
      const records = raw.body.map(parseResponse);
      const instanceKey = needKey();
      for (const record of records) {
        if (record.pluginID !== instanceKey) {
          throw new MalformedFrame("history entries must belong to the frame's instance");
        }
      }
      return { frameType, instanceKey, body: records };
    }
    case "error": {
      const body = raw.body as Record<string, unknown> | undefined;
      if (!body || typeof body.code !== "string" || typeof body.message !== "string") {
        throw new MalformedFrame("error body must carry code and message");
      }
      return key === undefined
        ? { frameType, body: { code: body.code, message: body.message } }
        : { frameType, instanceKey: key, body: { code: body.code, message: body.message } };
    }
    case "instances-changed": {
      const body = raw.body as Record<string, unknown> | undefined;
      if (!body || (body.event !== "added" && body.event !== "removed")) {
        throw new MalformedFrame("instances-changed frame requires an event body");
      }
      return { frameType, instanceKey: needKey(), body: { event: body.event } };
    }
    default:
      throw new MalformedFrame(`unknown frameType: ${JSON.stringify(frameType)}`);
  }
}

/**
 * Client-side replay rule: how one deliver frame mutates a history array.
 * Mirrors the server's store semantics, so history + delivers reconstructs
 * exactly what fetchHistory would return.
 */
export function applyResponse(history: ResponseRecord[], record: ResponseRecord): void {
  if (record.protocol === "create") {
    history.push(record);
    return;
  }
  const index = history.findIndex((entry) => entry.datagramID === record.datagramID);
  if (index === -1) return; // unpersisted target; nothing to do
  if (record.protocol === "update") {
    const existing = history[index]!;
    history[index] = { ...existing, payload: record.payload };
  } else {
    history.splice(index, 1);
  }
}
