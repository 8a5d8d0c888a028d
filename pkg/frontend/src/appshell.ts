/**
 * The platform client shell: find a platform, sign on, show its plugin
 * instances, keep them fed.
 *
 * View state follows the joining protocol: "landing" until a sign-on
 * succeeds, then "pluginAccess"; a lost connection flips back only the
 * channel, not the view (plugins grey out and recover on reconnect).
 */

import { PlatformConnection, WebSocketLike } from "./connection.js";
import { RequestBody } from "./protocol.js";
import { LoadFailure, MountedPlugin, mountPlugin, parseManifest } from "./sandbox.js";

export type ViewState = "landing" | "pluginAccess";

export interface DiscoveredPlatform {
  name: string;
  address: string;
  port: number;
  passkey: string;
}

export interface PluginInstanceInfo {
  instanceKey: string;
  displayName: string;
  pluginRef: { registryKey: string; version: string; remoteEntryURL: string };
  createdAt: string;
}

export interface AppShellOptions {
  gatewayUrl?: string;
  fetchFn?: typeof fetch;
  createSocket?: (url: string) => WebSocketLike;
  /** ws:// URL builder, overridable for tests. */
  wsUrl?: (address: string, clientID: string) => string;
}

export class AppShell {
  state: ViewState = "landing";
  clientID: string | null = null;
  platformAddress: string | null = null;
  connection: PlatformConnection | null = null;
  readonly mounted = new Map<string, MountedPlugin>();

  private readonly fetchFn: typeof fetch;

  constructor(private readonly root: HTMLElement, private readonly options: AppShellOptions = {}) {
    this.fetchFn = options.fetchFn ?? ((...args) => fetch(...args));
  }

  // --- landing ---------------------------------------------------------

  async init(): Promise<void> {
    this.renderLanding();
    await this.discover();
  }

  private renderLanding(): void {
    this.state = "landing";
    this.root.innerHTML = `
      <div class="landing">
        <h1>plugdeck</h1>
        <p class="discovery-notice" hidden></p>
        <ul class="discovery-list"></ul>
        <form class="signon-form">
          <input name="address" class="manual-address" placeholder="host:port" required />
          <input name="name" placeholder="name" required />
          <input name="pass" type="password" placeholder="password" required />
          <button type="submit">Sign on</button>
        </form>
        <p class="signon-error" hidden></p>
      </div>
    `;
    const form = this.root.querySelector<HTMLFormElement>(".signon-form")!;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const address = (form.elements.namedItem("address") as HTMLInputElement).value.trim();
      const name = (form.elements.namedItem("name") as HTMLInputElement).value;
      const pass = (form.elements.namedItem("pass") as HTMLInputElement).value;
      void this.signOn(address, name, pass);
    });
  }

  async discover(): Promise<DiscoveredPlatform[]> {
    const notice = this.root.querySelector<HTMLElement>(".discovery-notice")!;
    const list = this.root.querySelector<HTMLElement>(".discovery-list")!;
    if (!this.options.gatewayUrl) {
      notice.hidden = false;
      notice.textContent = "No discovery gateway configured; enter a platform address.";
      return [];
    }
    try {
      const response = await this.fetchFn(`${this.options.gatewayUrl}/discover`);
      if (!response.ok) throw new Error(`gateway answered ${response.status}`);
      const found = (await response.json()) as DiscoveredPlatform[];
      list.innerHTML = "";
      for (const platform of found) {
        const item = list.ownerDocument.createElement("li");
        const button = list.ownerDocument.createElement("button");
        button.type = "button";
        button.className = "discovery-entry";
        button.textContent = `${platform.name} (${platform.address}:${platform.port})`;
        button.addEventListener("click", () => {
          this.root.querySelector<HTMLInputElement>(".manual-address")!.value =
            `${platform.address}:${platform.port}`;
        });
        item.appendChild(button);
        list.appendChild(item);
      }
      return found;
    } catch {
      notice.hidden = false;
      notice.textContent = "Discovery unavailable; enter a platform address manually.";
      return [];
    }
  }

  // --- sign-on -----------------------------------------------------------

  async signOn(address: string, name: string, pass: string): Promise<boolean> {
    const errorLine = this.root.querySelector<HTMLElement>(".signon-error");
    try {
      const response = await this.fetchFn(`http://${address}/auth`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ name, pass }),
      });
      if (!response.ok) {
        if (errorLine) {
          errorLine.hidden = false;
          errorLine.textContent =
            response.status === 401 ? "Wrong name or password." : `Sign-on failed (${response.status}).`;
        }
        return false;
      }
      const doc = (await response.json()) as { clientID: string };
      this.clientID = doc.clientID;
      this.platformAddress = address;
    } catch {
      if (errorLine) {
        errorLine.hidden = false;
        errorLine.textContent = "Platform unreachable.";
      }
      return false;
    }
    await this.enterPlatform();
    return true;
  }

  // --- plugin access --------------------------------------------------------

  private async enterPlatform(): Promise<void> {
    this.state = "pluginAccess";
    this.root.innerHTML = `
      <div class="platform-home">
        <header>
          <span class="platform-name">${this.platformAddress}</span>
          <span class="channel-status">connecting</span>
        </header>
        <div class="plugin-tiles"></div>
      </div>
    `;
    const wsUrl =
      this.options.wsUrl?.(this.platformAddress!, this.clientID!) ??
      `ws://${this.platformAddress}/ws?clientID=${this.clientID}`;
    this.connection = new PlatformConnection({
      url: wsUrl,
      createSocket: this.options.createSocket,
      onStatusChange: (status) => {
        const line = this.root.querySelector<HTMLElement>(".channel-status");
        if (line) line.textContent = status;
        for (const plugin of this.mounted.values()) plugin.setChannelOpen(status === "open");
      },
      onHistory: (key, records) => this.mounted.get(key)?.deliverHistory(records),
      onDeliver: (key, record) => this.mounted.get(key)?.deliverResponse(record),
      onInstancesChanged: () => void this.refreshInstances(),
      onErrorFrame: (error) => {
        console.warn("platform error frame:", error.code, error.message);
      },
    });
    this.connection.start();
    await this.refreshInstances();
  }

  async refreshInstances(): Promise<void> {
    if (this.state !== "pluginAccess") return;
    const response = await this.fetchFn(`http://${this.platformAddress}/instances`);
    const instances = (await response.json()) as PluginInstanceInfo[];
    const alive = new Set(instances.map((instance) => instance.instanceKey));

    for (const [key, plugin] of [...this.mounted]) {
      if (!alive.has(key)) {
        plugin.dispose();
        this.mounted.delete(key);
        this.connection?.unsubscribe(key);
        this.root.querySelector(`[data-instance="${key}"]`)?.remove();
      }
    }
    for (const instance of instances) {
      if (!this.mounted.has(instance.instanceKey)) {
        await this.mountInstance(instance);
      }
    }
  }

  private async mountInstance(instance: PluginInstanceInfo): Promise<void> {
    const tiles = this.root.querySelector<HTMLElement>(".plugin-tiles")!;
    const doc = tiles.ownerDocument;
    const tile = doc.createElement("section");
    tile.className = "plugin-tile";
    tile.dataset.instance = instance.instanceKey;
    tile.innerHTML = `<h2>${instance.displayName}</h2><div class="plugin-frame-slot"></div>`;
    tiles.appendChild(tile);
    const slot = tile.querySelector<HTMLElement>(".plugin-frame-slot")!;

    try {
      const manifestUrl = instance.pluginRef.remoteEntryURL;
      const response = await this.fetchFn(manifestUrl);
      if (!response.ok) throw new LoadFailure(`manifest fetch failed (${response.status})`);
      const manifest = parseManifest(await response.json());
      const plugin = mountPlugin({
        hostWindow: this.root.ownerDocument.defaultView as Window,
        container: slot,
        manifest,
        manifestUrl,
        clientID: this.clientID!,
        instanceKey: instance.instanceKey,
        sendRequest: (body: RequestBody) => this.connection?.send(body) ?? false,
        channelOpen: () => this.connection?.isOpen ?? false,
        onPluginError: (message) => this.showErrorTile(slot, message),
      });
      this.mounted.set(instance.instanceKey, plugin);
      this.connection?.subscribe(instance.instanceKey);
    } catch (error) {
      // a broken plugin gets an error tile; siblings stay untouched
      this.showErrorTile(slot, String(error));
    }
  }

  private showErrorTile(slot: HTMLElement, message: string): void {
    slot.innerHTML = "";
    const tile = slot.ownerDocument.createElement("div");
    tile.className = "plugin-error-tile";
    tile.textContent = `plugin failed: ${message}`;
    slot.appendChild(tile);
  }

  dispose(): void {
    this.connection?.stop();
    for (const plugin of this.mounted.values()) plugin.dispose();
    this.mounted.clear();
  }
}
