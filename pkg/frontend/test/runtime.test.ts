/**
 * Drives the in-frame runtime directly with a fake window: this is the
 * code a plugin actually meets inside the sandbox, so the Table-2
 * conformance check lives here.
 */

import { afterEach, describe, expect, it, vi } from "vitest";

import { frameRuntime, frameSrcdoc } from "../src/runtime.js";

const PROBE_URL = new URL("./fixtures/probe-plugin.mjs", import.meta.url).href;
const EXPLODING_URL = new URL("./fixtures/exploding-plugin.mjs", import.meta.url).href;

const KEY = "11111111-1111-4111-8111-111111111111";
const ME = "22222222-2222-4222-8222-222222222222";
const D1 = "33333333-3333-4333-8333-333333333333";

interface FakeFrameWindow {
  win: Record<string, unknown>;
  parentPosts: unknown[];
  emit(data: unknown, source?: unknown): void;
}

function makeFrameWindow(): FakeFrameWindow {
  document.body.innerHTML = '<div id="plugin-root"></div>';
  const parentPosts: unknown[] = [];
  const parent = { postMessage: (message: unknown) => parentPosts.push(message) };
  const handlers = new Map<string, (event: unknown) => void>();
  const win = {
    document,
    parent,
    CustomEvent,
    addEventListener: (type: string, handler: (event: unknown) => void) => handlers.set(type, handler),
    __plugdeckImport: (url: string) => import(url),
  };
  return {
    win,
    parentPosts,
    emit(data, source = parent) {
      handlers.get("message")?.({ source, data });
    },
  };
}

function initMessage(entryUrl = PROBE_URL, channelOpen = true) {
  return { type: "plugdeck-init", entryUrl, clientID: ME, pluginKey: KEY, channelOpen };
}

async function probeResult(): Promise<{ container: HTMLElement; wrapper: Record<string, unknown>; keys: string[] }> {
  await vi.waitFor(() => {
    if (!(globalThis as Record<string, unknown>).__probeResult) throw new Error("not mounted yet");
  });
  return (globalThis as Record<string, never>).__probeResult;
}

afterEach(() => {
  delete (globalThis as Record<string, unknown>).__probeResult;
  delete (globalThis as Record<string, unknown>).__probeHistoryEvents;
});

describe("frame runtime", () => {
  it("hands the plugin exactly the Table-style wrapper surface", async () => {
    const frame = makeFrameWindow();
    frameRuntime(frame.win);
    expect(frame.parentPosts).toEqual([{ type: "plugdeck-ready" }]);
    frame.emit(initMessage());
    const probe = await probeResult();
    expect(probe.keys.sort()).toEqual([
      "client",
      "clientID",
      "messageHistory",
      "pluginKey",
      "sendCreateMessage",
      "sendDeleteMessage",
      "sendUpdateMessage",
    ]);
    expect(probe.wrapper.clientID).toBe(ME);
    expect(probe.wrapper.pluginKey).toBe(KEY);
    expect(Object.isFrozen(probe.wrapper.client)).toBe(true);
    expect(Array.isArray(probe.wrapper.messageHistory)).toBe(true);
  });

  it("bridges sends to the parent and honours channel status", async () => {
    const frame = makeFrameWindow();
    frameRuntime(frame.win);
    frame.emit(initMessage());
    const probe = await probeResult();
    const wrapper = probe.wrapper as {
      sendCreateMessage(payload: unknown): boolean;
      sendUpdateMessage(payload: unknown, id: string): boolean;
      sendDeleteMessage(id: string): boolean;
    };
    frame.parentPosts.length = 0;

    expect(wrapper.sendCreateMessage({ a: 1 })).toBe(true);
    expect(wrapper.sendUpdateMessage({ b: 2 }, D1)).toBe(true);
    expect(wrapper.sendDeleteMessage(D1)).toBe(true);
    expect(frame.parentPosts).toEqual([
      { type: "plugdeck-send", intent: "create", payload: { a: 1 } },
      { type: "plugdeck-send", intent: "update", payload: { b: 2 }, targetDatagramID: D1 },
      { type: "plugdeck-send", intent: "delete", targetDatagramID: D1 },
    ]);

    frame.emit({ type: "plugdeck-channel", open: false });
    frame.parentPosts.length = 0;
    expect(wrapper.sendCreateMessage({})).toBe(false);
    expect(frame.parentPosts).toEqual([]);
  });

  it("applies history and deliver messages and fires history-changed", async () => {
    const frame = makeFrameWindow();
    frameRuntime(frame.win);
    frame.emit(initMessage());
    const probe = await probeResult();
    const history = probe.wrapper.messageHistory as Array<{ datagramID: string; payload: unknown }>;

    frame.emit({
      type: "plugdeck-history",
      records: [{ datagramID: D1, senderID: ME, pluginID: KEY, protocol: "create", payload: { v: 1 } }],
    });
    expect(history.map((r) => r.payload)).toEqual([{ v: 1 }]);
    frame.emit({
      type: "plugdeck-deliver",
      record: { datagramID: D1, senderID: ME, pluginID: KEY, protocol: "update", payload: { v: 2 } },
    });
    expect(history.map((r) => r.payload)).toEqual([{ v: 2 }]);
    frame.emit({
      type: "plugdeck-deliver",
      record: { datagramID: D1, senderID: ME, pluginID: KEY, protocol: "delete" },
    });
    expect(history).toEqual([]);
    expect((globalThis as Record<string, unknown>).__probeHistoryEvents).toBeGreaterThanOrEqual(3);
  });

  it("ignores messages that are not from the parent window", async () => {
    const frame = makeFrameWindow();
    frameRuntime(frame.win);
    frame.emit(initMessage(), { not: "the parent" });
    await new Promise((resolve) => setTimeout(resolve, 30));
    expect((globalThis as Record<string, unknown>).__probeResult).toBeUndefined();
  });

  it("reports a throwing plugin instead of crashing the frame", async () => {
    const frame = makeFrameWindow();
    frameRuntime(frame.win);
    frame.emit(initMessage(EXPLODING_URL));
    await vi.waitFor(() => {
      const error = frame.parentPosts.find(
        (message) => (message as { type?: string }).type === "plugdeck-error"
      );
      expect(error).toBeDefined();
      expect(String((error as { message: string }).message)).toContain("deliberate detonation");
    });
  });
});

describe("frame srcdoc", () => {
  it("embeds the runtime and the plugin root", () => {
    const doc = frameSrcdoc();
    expect(doc).toContain('id="plugin-root"');
    expect(doc).toContain("frameRuntime");
    expect(doc).toContain("__plugdeckImport");
    // the embedded runtime must be the real function, not a stub
    expect(doc).toContain("plugdeck-ready");
  });
});
