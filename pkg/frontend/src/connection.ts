/**
 * Websocket client for one platform: frame routing, subscription tracking,
 * and reconnect with exponential backoff.  On every (re)connect all tracked
 * subscriptions are re-sent, so the server answers with fresh history
 * frames and downstream wrappers replace their state instead of appending.
 */

import {
  decodeFrame,
  encodeFrame,
  ErrorBody,
  MalformedFrame,
  RequestBody,
  ResponseRecord,
  WireFrame,
} from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((event?: unknown) => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event?: unknown) => void) | null;
  onerror: ((event?: unknown) => void) | null;
}

export type ConnectionStatus = "idle" | "connecting" | "open" | "stopped";

export interface ConnectionHandlers {
  onDeliver?: (instanceKey: string, record: ResponseRecord) => void;
  onHistory?: (instanceKey: string, records: ResponseRecord[]) => void;
  onInstancesChanged?: (instanceKey: string, event: "added" | "removed") => void;
  onErrorFrame?: (error: ErrorBody, instanceKey?: string) => void;
  onStatusChange?: (status: ConnectionStatus) => void;
}

export interface ConnectionOptions extends ConnectionHandlers {
  url: string;
  createSocket?: (url: string) => WebSocketLike;
  backoffBaseMs?: number;
  backoffMaxMs?: number;
}

function defaultFactory(url: string): WebSocketLike {
  return new WebSocket(url) as unknown as WebSocketLike;
}

export class PlatformConnection {
  readonly subscriptions = new Set<string>();
  private socket: WebSocketLike | null = null;
  private socketOpen = false;
  private attempts = 0;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private _status: ConnectionStatus = "idle";

  constructor(private readonly options: ConnectionOptions) {}

  get status(): ConnectionStatus {
    return this._status;
  }

  get isOpen(): boolean {
    return this.socketOpen;
  }

  start(): void {
    if (this._status !== "idle" && this._status !== "stopped") return;
    this.connect();
  }

  stop(): void {
    this.setStatus("stopped");
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    const socket = this.socket;
    this.socket = null;
    this.socketOpen = false;
    if (socket) {
      socket.onclose = null;
      socket.close();
    }
  }

  subscribe(instanceKey: string): void {
    this.subscriptions.add(instanceKey);
    if (this.socketOpen) {
      this.sendFrame({ frameType: "subscribe", instanceKey });
    }
  }

  unsubscribe(instanceKey: string): void {
    this.subscriptions.delete(instanceKey);
    if (this.socketOpen) {
      this.sendFrame({ frameType: "unsubscribe", instanceKey });
    }
  }

  /** Enqueue one request; false when the channel is down. */
  send(body: RequestBody): boolean {
    if (!this.socketOpen) return false;
    return this.sendFrame({ frameType: "send", instanceKey: body.pluginID, body });
  }

  private sendFrame(frame: WireFrame): boolean {
    if (!this.socket) return false;
    try {
      this.socket.send(encodeFrame(frame));
      return true;
    } catch {
      return false;
    }
  }

  private setStatus(status: ConnectionStatus): void {
    if (this._status === status) return;
    this._status = status;
    this.options.onStatusChange?.(status);
  }

  private connect(): void {
    const factory = this.options.createSocket ?? defaultFactory;
    this.setStatus("connecting");
    let socket: WebSocketLike;
    try {
      socket = factory(this.options.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.socketOpen = true;
      this.attempts = 0;
      this.setStatus("open");
      for (const instanceKey of this.subscriptions) {
        this.sendFrame({ frameType: "subscribe", instanceKey });
      }
    };
    socket.onmessage = (event) => this.handleMessage(String(event.data));
    socket.onerror = () => {
      /* onclose follows; nothing to do here */
    };
    socket.onclose = () => {
      this.socketOpen = false;
      this.socket = null;
      if (this._status !== "stopped") this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    this.setStatus("connecting");
    const base = this.options.backoffBaseMs ?? 500;
    const max = this.options.backoffMaxMs ?? 10_000;
    const delay = Math.min(base * 2 ** this.attempts, max);
    this.attempts += 1;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      if (this._status !== "stopped") this.connect();
    }, delay);
  }

  private handleMessage(text: string): void {
    let frame: WireFrame;
    try {
      frame = decodeFrame(text);
    } catch (error) {
      if (error instanceof MalformedFrame) return; // tolerate unknown server frames
      throw error;
    }
    switch (frame.frameType) {
      case "deliver":
        this.options.onDeliver?.(frame.instanceKey, frame.body);
        break;
      case "history":
        this.options.onHistory?.(frame.instanceKey, frame.body);
        break;
      case "instances-changed":
        this.options.onInstancesChanged?.(frame.instanceKey, frame.body.event);
        break;
      case "error":
        this.options.onErrorFrame?.(frame.body, frame.instanceKey);
        break;
      default:
        break; // clients never receive subscribe/send frames
    }
  }
}
