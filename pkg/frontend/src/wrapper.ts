/**
 * The wrapper: the one object a plugin ever sees.
 *
 * Everything distributed — the websocket, frames, subscriptions, reconnect
 * — is occluded behind exactly seven members: client, clientID, pluginKey,
 * messageHistory, and the three send methods.  The conformance test
 * enumerates them; nothing else may leak through.
 */

import { applyResponse, JsonValue, RequestBody, ResponseRecord } from "./protocol.js";

export interface WrapperContext {
  readonly client: unknown;
  readonly clientID: string;
  readonly pluginKey: string;
  readonly messageHistory: ResponseRecord[];
  sendCreateMessage(payload: JsonValue): boolean;
  sendUpdateMessage(payload: JsonValue, datagramID: string): boolean;
  sendDeleteMessage(datagramID: string): boolean;
}

export interface WrapperHandle {
  context: WrapperContext;
  /** History frame arrived (initial subscribe or reconnect): replace wholesale. */
  replaceHistory(records: ResponseRecord[]): void;
  /** Live deliver frame arrived. */
  applyDeliver(record: ResponseRecord): void;
  setChannelOpen(open: boolean): void;
}

export interface WrapperOptions {
  clientID: string;
  pluginKey: string;
  sendRequest: (body: RequestBody) => boolean;
  onHistoryChanged?: () => void;
  /** Host-configured persistence default for the three send methods. */
  defaultPersist?: boolean;
}

export function createWrapper(options: WrapperOptions): WrapperHandle {
  const { clientID, pluginKey, sendRequest, onHistoryChanged } = options;
  const persist = options.defaultPersist ?? true;
  const messageHistory: ResponseRecord[] = [];
  let channelOpen = true;

  function dispatch(body: RequestBody): boolean {
    if (!channelOpen) return false;
    return sendRequest(body);
  }

  const context: WrapperContext = {
    client: Object.freeze({ kind: "plugdeck-channel" }),
    clientID,
    pluginKey,
    messageHistory,
    sendCreateMessage: (payload) =>
      dispatch({ senderID: clientID, pluginID: pluginKey, shouldPersist: persist, intent: "create", payload }),
    sendUpdateMessage: (payload, datagramID) =>
      dispatch({
        senderID: clientID,
        pluginID: pluginKey,
        shouldPersist: persist,
        intent: "update",
        payload,
        targetDatagramID: datagramID,
      }),
    sendDeleteMessage: (datagramID) =>
      dispatch({
        senderID: clientID,
        pluginID: pluginKey,
        shouldPersist: persist,
        intent: "delete",
        targetDatagramID: datagramID,
      }),
  };

  return {
    context,
    replaceHistory(records) {
      messageHistory.length = 0;
      messageHistory.push(...records);
      onHistoryChanged?.();
    },
    applyDeliver(record) {
      applyResponse(messageHistory, record);
      onHistoryChanged?.();
    },
    setChannelOpen(open) {
      channelOpen = open;
    },
  };
}
