/**
 * Session: one connection to the panel server. Sends the hello, feeds
 * announce/state/frame messages into the workspace, and turns user
 * actions (pointer, wheel, key, drag, resize) into protocol messages
 * with a strictly increasing client_seq.
 */

import {
  decodeControl,
  decodeFrame,
  encodeControl,
  PROTOCOL_VERSION,
  type ControlMessage,
  type ErrorMsg,
  type Pose,
  type Vec3,
} from "./protocol";
import { Workspace } from "./workspace";

/** Transport abstraction so tests can drive a session without a browser. */
export interface Transport {
  send(data: string | Uint8Array): void;
  close(): void;
  onOpen(cb: () => void): void;
  onMessage(cb: (data: string | Uint8Array) => void): void;
  onClose(cb: () => void): void;
}

export interface SessionOptions {
  clientName?: string;
  token?: string;
}

export class PanelSession {
  readonly workspace: Workspace;
  connected = false;
  lastError: ErrorMsg | null = null;
  onError: ((err: ErrorMsg) => void) | null = null;
  onAnnounce: (() => void) | null = null;
  private clientSeq = 0;
  private readonly clientName: string;
  private readonly token: string;

  constructor(
    private readonly transport: Transport,
    workspace?: Workspace,
    options: SessionOptions = {},
  ) {
    this.workspace = workspace ?? new Workspace();
    this.clientName = options.clientName ?? "panel-client";
    this.token = options.token ?? "";
    transport.onOpen(() => this.hello());
    transport.onMessage((data) => this.receive(data));
    transport.onClose(() => {
      this.connected = false;
    });
  }

  private hello(): void {
    this.connected = true;
    this.transport.send(
      encodeControl({
        type: "hello",
        client_name: this.clientName,
        protocol_version: PROTOCOL_VERSION,
        token: this.token,
      }),
    );
  }

  private receive(data: string | Uint8Array): void {
    if (typeof data !== "string") {
      try {
        this.workspace.ingestFrame(decodeFrame(data));
      } catch {
        // Malformed frame: drop; pixels are recoverable.
      }
      return;
    }
    let message: ControlMessage;
    try {
      message = decodeControl(data);
    } catch {
      return;
    }
    if (message.type === "layout_announce") {
      this.workspace.applyAnnounce(message);
      this.onAnnounce?.();
    } else if (message.type === "panel_state") {
      this.workspace.applyState(message);
    } else if (message.type === "error") {
      this.lastError = message;
      this.onError?.(message);
    }
  }

  private nextSeq(): number {
    this.clientSeq += 1;
    return this.clientSeq;
  }

  sendPointer(panelId: string, kind: string, u: number, v: number, button = "left", modifiers = 0): void {
    this.transport.send(
      encodeControl({
        type: "input_event",
        panel_id: panelId,
        kind,
        client_seq: this.nextSeq(),
        u,
        v,
        button,
        modifiers,
      }),
    );
  }

  sendWheel(panelId: string, u: number, v: number, deltaX: number, deltaY: number): void {
    this.transport.send(
      encodeControl({
        type: "input_event",
        panel_id: panelId,
        kind: "wheel",
        client_seq: this.nextSeq(),
        u,
        v,
        delta_x: deltaX,
        delta_y: deltaY,
      }),
    );
  }

  sendKey(panelId: string, key: string, text = ""): void {
    this.transport.send(
      encodeControl({
        type: "input_event",
        panel_id: panelId,
        kind: "key",
        client_seq: this.nextSeq(),
        key,
        text,
      }),
    );
  }

  /** Drag: move a panel's center, keeping orientation and size. */
  dragPanelTo(panelId: string, position: Vec3): void {
    const panel = this.workspace.get(panelId);
    if (!panel) {
      return;
    }
    this.sendTransform(panelId, { ...panel.pose, position });
  }

  /** Resize: scale a panel, keeping position and orientation. */
  resizePanel(panelId: string, size: [number, number]): void {
    const panel = this.workspace.get(panelId);
    if (!panel) {
      return;
    }
    this.sendTransform(panelId, { ...panel.pose, size });
  }

  sendTransform(panelId: string, pose: Pose): void {
    this.transport.send(
      encodeControl({
        type: "panel_transform",
        panel_id: panelId,
        pose,
        client_seq: this.nextSeq(),
      }),
    );
  }

  close(): void {
    this.transport.close();
  }
}

/** Wrap a browser/ws WebSocket (binaryType arraybuffer) as a Transport. */
export function webSocketTransport(socket: WebSocket): Transport {
  socket.binaryType = "arraybuffer";
  return {
    send: (data) => socket.send(data),
    close: () => socket.close(),
    onOpen: (cb) => {
      if (socket.readyState === 1) {
        cb();
      } else {
        socket.addEventListener("open", cb);
      }
    },
    onMessage: (cb) =>
      socket.addEventListener("message", (event: MessageEvent) => {
        const payload = event.data;
        cb(typeof payload === "string" ? payload : new Uint8Array(payload as ArrayBuffer));
      }),
    onClose: (cb) => socket.addEventListener("close", cb),
  };
}
