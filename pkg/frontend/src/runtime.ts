/**
 * Code that runs *inside* the sandboxed plugin iframe.
 *
 * The frame is `sandbox="allow-scripts"` without `allow-same-origin`, so
 * this runtime is the plugin's entire world: it builds the wrapper object,
 * imports the plugin module, and speaks a small postMessage protocol with
 * the host.  Only wrapper calls and history snapshots cross the boundary.
 *
 * `frameRuntime` is deliberately self-contained (no imports, no captured
 * bindings): it is embedded into the iframe by stringifying the function,
 * and unit-tested by calling it with a fake window.  postMessage targets
 * "*" because a sandboxed srcdoc frame has a null origin; both sides
 * authenticate by comparing event.source instead.
 */

export interface InitMessage {
  type: "plugdeck-init";
  entryUrl: string;
  styleUrl?: string;
  clientID: string;
  pluginKey: string;
  channelOpen: boolean;
}

export interface HistoryMessage {
  type: "plugdeck-history";
  records: unknown[];
}

export interface DeliverMessage {
  type: "plugdeck-deliver";
  record: unknown;
}

export interface ChannelMessage {
  type: "plugdeck-channel";
  open: boolean;
}

export type HostToFrame = InitMessage | HistoryMessage | DeliverMessage | ChannelMessage;

export interface SendMessage {
  type: "plugdeck-send";
  intent: "create" | "update" | "delete";
  payload?: unknown;
  targetDatagramID?: string;
}

export type FrameToHost =
  | { type: "plugdeck-ready" }
  | SendMessage
  | { type: "plugdeck-error"; message: string };

// Keep this function free of outer references: it is serialised with
// Function.prototype.toString() and executed in the iframe as-is.
export function frameRuntime(win: any): void {
  const doc = win.document;
  let container: any = null;
  let channelOpen = false;
  let mounted = false;
  const messageHistory: any[] = [];

  function post(message: any): void {
    win.parent.postMessage(message, "*");
  }

  function notifyHistoryChanged(): void {
    if (container) {
      container.dispatchEvent(new win.CustomEvent("history-changed"));
    }
  }

  function applyRecord(record: any): void {
    if (record.protocol === "create") {
      messageHistory.push(record);
      return;
    }
    for (let i = 0; i < messageHistory.length; i += 1) {
      if (messageHistory[i].datagramID === record.datagramID) {
        if (record.protocol === "update") {
          const replaced: any = {};
          for (const key of Object.keys(messageHistory[i])) replaced[key] = messageHistory[i][key];
          replaced.payload = record.payload;
          messageHistory[i] = replaced;
        } else {
          messageHistory.splice(i, 1);
        }
        return;
      }
    }
  }

  function buildWrapper(clientID: string, pluginKey: string): any {
    function dispatch(intent: string, payload: any, targetDatagramID: any): boolean {
      if (!channelOpen) return false;
      const message: any = { type: "plugdeck-send", intent };
      if (intent !== "delete") message.payload = payload;
      if (intent !== "create") message.targetDatagramID = targetDatagramID;
      post(message);
      return true;
    }
    return {
      client: Object.freeze({ kind: "plugdeck-channel" }),
      clientID,
      pluginKey,
      messageHistory,
      sendCreateMessage: (payload: any) => dispatch("create", payload, undefined),
      sendUpdateMessage: (payload: any, datagramID: string) => dispatch("update", payload, datagramID),
      sendDeleteMessage: (datagramID: string) => dispatch("delete", undefined, datagramID),
    };
  }

  function mount(init: any): void {
    if (mounted) return;
    mounted = true;
    channelOpen = !!init.channelOpen;
    container = doc.getElementById("plugin-root");
    if (init.styleUrl) {
      const link = doc.createElement("link");
      link.rel = "stylesheet";
      link.href = init.styleUrl;
      doc.head.appendChild(link);
    }
    const wrapper = buildWrapper(init.clientID, init.pluginKey);
    win
      .__plugdeckImport(init.entryUrl)
      .then((module: any) => {
        if (!module || typeof module.mount !== "function") {
          throw new Error("plugin entry module has no mount(container, wrapper) export");
        }
        module.mount(container, wrapper);
        notifyHistoryChanged();
      })
      .catch((error: any) => {
        post({ type: "plugdeck-error", message: String((error && error.stack) || error) });
      });
  }

  win.addEventListener("message", (event: any) => {
    if (event.source !== win.parent) return; // only the host may drive us
    const data = event.data;
    if (!data || typeof data.type !== "string") return;
    if (data.type === "plugdeck-init") {
      mount(data);
    } else if (data.type === "plugdeck-history") {
      messageHistory.length = 0;
      for (const record of data.records) messageHistory.push(record);
      notifyHistoryChanged();
    } else if (data.type === "plugdeck-deliver") {
      applyRecord(data.record);
      notifyHistoryChanged();
    } else if (data.type === "plugdeck-channel") {
      channelOpen = !!data.open;
    }
  });

  win.addEventListener("error", (event: any) => {
    post({ type: "plugdeck-error", message: String(event && event.message) });
  });

  post({ type: "plugdeck-ready" });
}

/**
 * The srcdoc document for a plugin frame.  `__plugdeckImport` pins dynamic
 * import so the runtime body stays serialisable (an inline `import()` in a
 * stringified function is fine in browsers, but this keeps it explicit and
 * stubbable in tests).
 */
export function frameSrcdoc(): string {
  return [
    "<!DOCTYPE html>",
    '<html><head><meta charset="utf-8"></head>',
    '<body style="margin:0"><div id="plugin-root"></div>',
    "<script>window.__plugdeckImport = (url) => import(url);</script>",
    `<script>(${frameRuntime.toString()})(window);</script>`,
    "</body></html>",
  ].join("\n");
}
