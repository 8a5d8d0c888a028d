/**
 * Host side of plugin isolation.
 *
 * Every plugin instance lives in its own iframe with
 * `sandbox="allow-scripts"` and *never* `allow-same-origin`: the browser
 * gives the frame a null origin, cutting it off from the host document,
 * cookies, storage, and sibling frames.  The only channel in or out is
 * postMessage, and the host forwards nothing but wrapper sends (validated
 * here) and history snapshots.
 */

import { JsonValue, RequestBody, ResponseRecord } from "./protocol.js";
import { frameSrcdoc } from "./runtime.js";

/** The exact sandbox token set; adding allow-same-origin would void isolation. */
export const SANDBOX_TOKENS = "allow-scripts";

export const MANIFEST_SCOPE = "plugdeck-plugin@1";

export interface RemoteEntryManifest {
  scope: string;
  module: string;
  entry: string;
  style?: string;
  files?: string[];
  contentHash?: string | null;
}

export class LoadFailure extends Error {}

export function parseManifest(doc: unknown): RemoteEntryManifest {
  if (typeof doc !== "object" || doc === null) {
    throw new LoadFailure("manifest must be a JSON object");
  }
  const raw = doc as Record<string, unknown>;
  if (raw.scope !== MANIFEST_SCOPE) {
    throw new LoadFailure(`unsupported plugin scope ${JSON.stringify(raw.scope)}; expected ${MANIFEST_SCOPE}`);
  }
  if (typeof raw.module !== "string" || typeof raw.entry !== "string") {
    throw new LoadFailure("manifest must name module and entry");
  }
  const manifest: RemoteEntryManifest = { scope: raw.scope, module: raw.module, entry: raw.entry };
  if (typeof raw.style === "string") manifest.style = raw.style;
  if (Array.isArray(raw.files)) manifest.files = raw.files.filter((f): f is string => typeof f === "string");
  return manifest;
}

/** Resolve a bundle-relative path against the manifest's own URL. */
export function resolveBundleUrl(remoteEntryUrl: string, relative: string): string {
  return new URL(relative, remoteEntryUrl).toString();
}

export interface MountOptions {
  hostWindow: Window;
  container: HTMLElement;
  manifest: RemoteEntryManifest;
  manifestUrl: string;
  clientID: string;
  instanceKey: string;
  sendRequest: (body: RequestBody) => boolean;
  channelOpen: () => boolean;
  defaultPersist?: boolean;
  onPluginError?: (message: string) => void;
}

const INTENTS: ReadonlySet<string> = new Set(["create", "update", "delete"]);

export class MountedPlugin {
  readonly frame: HTMLIFrameElement;
  private readonly listener: (event: MessageEvent) => void;
  private disposed = false;

  constructor(private readonly options: MountOptions) {
    const doc = options.container.ownerDocument;
    this.frame = doc.createElement("iframe");
    this.frame.setAttribute("sandbox", SANDBOX_TOKENS);
    this.frame.setAttribute("title", options.manifest.module);
    this.frame.srcdoc = frameSrcdoc();
    this.frame.style.border = "0";
    this.frame.style.width = "100%";
    this.frame.style.height = "100%";
    options.container.appendChild(this.frame);

    this.listener = (event) => this.handleMessage(event);
    options.hostWindow.addEventListener("message", this.listener);
  }

  /** Only messages provably from this frame's window are considered. */
  private handleMessage(event: MessageEvent): void {
    if (this.disposed) return;
    if (event.source === null || event.source !== this.frame.contentWindow) return;
    const data = event.data as Record<string, unknown> | null;
    if (!data || typeof data.type !== "string") return;
    if (data.type === "plugdeck-ready") {
      this.postInit();
    } else if (data.type === "plugdeck-send") {
      this.forwardSend(data);
    } else if (data.type === "plugdeck-error") {
      this.options.onPluginError?.(String(data.message));
    }
  }

  private postInit(): void {
    const { manifest, manifestUrl } = this.options;
    this.postToFrame({
      type: "plugdeck-init",
      entryUrl: resolveBundleUrl(manifestUrl, manifest.entry),
      styleUrl: manifest.style ? resolveBundleUrl(manifestUrl, manifest.style) : undefined,
      clientID: this.options.clientID,
      pluginKey: this.options.instanceKey,
      channelOpen: this.options.channelOpen(),
    });
  }

  /** Validate and translate a wrapper send into a platform request. */
  private forwardSend(data: Record<string, unknown>): void {
    const intent = data.intent;
    if (typeof intent !== "string" || !INTENTS.has(intent)) return;
    const body: RequestBody = {
      senderID: this.options.clientID,
      pluginID: this.options.instanceKey,
      shouldPersist: this.options.defaultPersist ?? true,
      intent: intent as RequestBody["intent"],
    };
    if (intent !== "delete") body.payload = data.payload as JsonValue;
    if (intent !== "create") {
      if (typeof data.targetDatagramID !== "string") return;
      body.targetDatagramID = data.targetDatagramID;
    }
    this.options.sendRequest(body);
  }

  private postToFrame(message: unknown): void {
    this.frame.contentWindow?.postMessage(message, "*");
  }

  deliverHistory(records: ResponseRecord[]): void {
    this.postToFrame({ type: "plugdeck-history", records });
  }

  deliverResponse(record: ResponseRecord): void {
    this.postToFrame({ type: "plugdeck-deliver", record });
  }

  setChannelOpen(open: boolean): void {
    this.postToFrame({ type: "plugdeck-channel", open });
  }

  /** Hot-unplug: drop the frame and its listener; siblings are untouched. */
  dispose(): void {
    if (this.disposed) return;
    this.disposed = true;
    this.options.hostWindow.removeEventListener("message", this.listener);
    this.frame.remove();
  }
}

export function mountPlugin(options: MountOptions): MountedPlugin {
  return new MountedPlugin(options);
}
