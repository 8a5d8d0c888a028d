import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  applyResponse,
  decodeFrame,
  encodeFrame,
  MalformedFrame,
  ResponseRecord,
  WireFrame,
} from "../src/protocol.js";

const KEY = "11111111-1111-4111-8111-111111111111";
const SENDER = "22222222-2222-4222-8222-222222222222";
const DATAGRAM = "33333333-3333-4333-8333-333333333333";

function record(overrides: Partial<ResponseRecord> = {}): ResponseRecord {
  return {
    datagramID: DATAGRAM,
    senderID: SENDER,
    pluginID: KEY,
    protocol: "create",
    payload: { x: 1 },
    ...overrides,
  };
}

describe("frame codec", () => {
  it("round-trips every frame type", () => {
    const frames: WireFrame[] = [
      { frameType: "subscribe", instanceKey: KEY },
      { frameType: "unsubscribe", instanceKey: KEY },
      {
        frameType: "send",
        instanceKey: KEY,
        body: { senderID: SENDER, pluginID: KEY, shouldPersist: true, intent: "create", payload: null },
      },
      { frameType: "deliver", instanceKey: KEY, body: record() },
      { frameType: "history", instanceKey: KEY, body: [record(), record({ protocol: "update" })] },
      { frameType: "error", body: { code: "x", message: "y" } },
      { frameType: "instances-changed", instanceKey: KEY, body: { event: "added" } },
    ];
    for (const frame of frames) {
      expect(decodeFrame(encodeFrame(frame))).toEqual(frame);
    }
  });

  it("accepts frames with or without the trailing newline", () => {
    const text = encodeFrame({ frameType: "subscribe", instanceKey: KEY });
    expect(text.endsWith("\n")).toBe(true);
    expect(decodeFrame(text)).toEqual(decodeFrame(text.trimEnd()));
  });

  it("decodes every golden frame produced by the server implementation", () => {
    const fixture = fileURLToPath(new URL("./fixtures/golden-frames.jsonl", import.meta.url));
    const lines = readFileSync(fixture, "utf-8").trim().split("\n");
    expect(lines.length).toBeGreaterThanOrEqual(10);
    const seen = new Set<string>();
    for (const line of lines) {
      const frame = decodeFrame(line);
      seen.add(frame.frameType);
      // structural re-encode must survive the local decoder too
      expect(decodeFrame(encodeFrame(frame))).toEqual(frame);
    }
    expect(seen).toEqual(
      new Set(["subscribe", "unsubscribe", "send", "deliver", "history", "error", "instances-changed"])
    );
  });

  it("rejects malformed frames", () => {
    expect(() => decodeFrame("")).toThrow(MalformedFrame);
    expect(() => decodeFrame("not json")).toThrow(MalformedFrame);
    expect(() => decodeFrame('{"frameType":"teleport"}')).toThrow(MalformedFrame);
    expect(() => decodeFrame('{"frameType":"subscribe"}')).toThrow(MalformedFrame);
    expect(() =>
      decodeFrame(
        JSON.stringify({
          frameType: "send",
          instanceKey: KEY,
          body: { senderID: SENDER, pluginID: KEY, shouldPersist: true, intent: "upsert", payload: 1 },
        })
      )
    ).toThrow(MalformedFrame);
    // UPPERCASE uuids are not on the wire contract
    expect(() =>
      decodeFrame(JSON.stringify({ frameType: "subscribe", instanceKey: KEY.toUpperCase() }))
    ).toThrow(MalformedFrame);
    // instanceKey must match body pluginID
    expect(() =>
      decodeFrame(
        JSON.stringify({
          frameType: "deliver",
          instanceKey: SENDER,
          body: { datagramID: DATAGRAM, senderID: SENDER, pluginID: KEY, protocol: "create", payload: 1 },
        })
      )
    ).toThrow(MalformedFrame);
  });

  it("rejects payload/target presence violations", () => {
    const base = { senderID: SENDER, pluginID: KEY, shouldPersist: true };
    const bad = [
      { ...base, intent: "create" }, // create without payload
      { ...base, intent: "delete", payload: 1, targetDatagramID: DATAGRAM }, // delete with payload
      { ...base, intent: "update", payload: 1 }, // update without target
      { ...base, intent: "create", payload: 1, targetDatagramID: DATAGRAM }, // create with target
    ];
    for (const body of bad) {
      expect(() => decodeFrame(JSON.stringify({ frameType: "send", instanceKey: KEY, body }))).toThrow(
        MalformedFrame
      );
    }
  });
});

describe("applyResponse", () => {
  it("appends creates, rewrites updates in place, removes deletes", () => {
    const history: ResponseRecord[] = [];
    const first = record({ datagramID: DATAGRAM, payload: { v: 1 } });
    const second = record({ datagramID: SENDER, payload: { v: 2 } });
    applyResponse(history, first);
    applyResponse(history, second);
    applyResponse(history, record({ datagramID: DATAGRAM, protocol: "update", payload: { v: 9 } }));
    expect(history.map((r) => [r.datagramID, r.payload])).toEqual([
      [DATAGRAM, { v: 9 }],
      [SENDER, { v: 2 }],
    ]);
    applyResponse(history, { ...record({ datagramID: DATAGRAM, protocol: "delete" }), payload: undefined });
    expect(history.map((r) => r.datagramID)).toEqual([SENDER]);
  });

  it("ignores updates and deletes for unknown datagrams", () => {
    const history: ResponseRecord[] = [record()];
    applyResponse(history, record({ datagramID: SENDER, protocol: "update", payload: 1 }));
    applyResponse(history, record({ datagramID: "99999999-9999-4999-8999-999999999999", protocol: "delete" }));
    expect(history).toHaveLength(1);
  });
});
