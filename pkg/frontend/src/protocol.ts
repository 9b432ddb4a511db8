/**
 * Wire protocol (version 1) between the panel server and this client.
 *
 * Control messages are JSON text frames; panel pixel frames are binary:
 * a 24-byte little-endian header (panel id hash u32, source seq u32,
 * x/y/w/h u16, format u8, 7 reserved bytes) followed by the payload.
 * Format 0 is raw RGBA, format 1 is PNG. w = h = 0 marks an
 * off-viewport panel.
 */

export const PROTOCOL_VERSION = 1;
export const FORMAT_RAW = 0;
export const FORMAT_PNG = 1;
export const FRAME_HEADER_SIZE = 24;

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export interface Pose {
  position: Vec3;
  orientation: Quat;
  size: [number, number];
}

export interface RegionRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface HelloMsg {
  type: "hello";
  client_name: string;
  protocol_version: number;
  token: string;
}

export interface AnnouncedPanel {
  panel_id: string;
  display_name: string;
  role: string;
  region: RegionRect;
  anchoring: string;
  zone: string;
  distance: string;
  scale: number;
  interaction: string;
  pose: Pose;
  anchored: boolean;
  input_mode: string;
}

export interface LayoutAnnounceMsg {
  type: "layout_announce";
  layout_name: string;
  url: string;
  protocol_version: number;
  panels: AnnouncedPanel[];
}

export interface InputEventMsg {
  type: "input_event";
  panel_id: string;
  kind: string;
  client_seq: number;
  u?: number;
  v?: number;
  button?: string;
  modifiers?: number;
  delta_x?: number;
  delta_y?: number;
  key?: string;
  text?: string;
}

export interface PanelTransformMsg {
  type: "panel_transform";
  panel_id: string;
  pose: Pose;
  client_seq: number;
}

export interface PanelStateMsg {
  type: "panel_state";
  panel_id: string;
  pose: Pose;
  anchored: boolean;
  input_mode: string;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  detail: string;
}

export type ControlMessage =
  | HelloMsg
  | LayoutAnnounceMsg
  | InputEventMsg
  | PanelTransformMsg
  | PanelStateMsg
  | ErrorMsg;

export interface PanelFrameMsg {
  panelIdHash: number;
  sourceSeq: number;
  x: number;
  y: number;
  w: number;
  h: number;
  format: number;
  payload: Uint8Array;
}

const CONTROL_TYPES = new Set([
  "hello",
  "layout_announce",
  "input_event",
  "panel_transform",
  "panel_state",
  "error",
]);

export class WireError extends Error {}

// crc32 (same polynomial/parameters as zlib); panel ids hash with this.
const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(text: string): number {
  const bytes = new TextEncoder().encode(text);
  let crc = 0xffffffff;
  for (const byte of bytes) {
    crc = CRC_TABLE[(crc ^ byte) & 0xff]! ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

/** JSON with sorted keys, matching the server's canonical text frames. */
function stableStringify(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return `[${value.map(stableStringify).join(",")}]`;
  }
  const entries = Object.entries(value as Record<string, unknown>)
    .filter(([, v]) => v !== undefined)
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([k, v]) => `${JSON.stringify(k)}:${stableStringify(v)}`);
  return `{${entries.join(",")}}`;
}

export function encodeControl(message: ControlMessage): string {
  return stableStringify(message);
}

export function decodeControl(text: string): ControlMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (err) {
    throw new WireError(`invalid JSON: ${(err as Error).message}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new WireError("control message must be a JSON object");
  }
  const type = (obj as { type?: unknown }).type;
  if (typeof type !== "string" || !CONTROL_TYPES.has(type)) {
    throw new WireError(`unknown message type ${String(type)}`);
  }
  return obj as ControlMessage;
}

export function encodeFrame(msg: PanelFrameMsg): Uint8Array {
  const out = new Uint8Array(FRAME_HEADER_SIZE + msg.payload.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, msg.panelIdHash >>> 0, true);
  view.setUint32(4, msg.sourceSeq >>> 0, true);
  view.setUint16(8, msg.x, true);
  view.setUint16(10, msg.y, true);
  view.setUint16(12, msg.w, true);
  view.setUint16(14, msg.h, true);
  view.setUint8(16, msg.format);
  out.set(msg.payload, FRAME_HEADER_SIZE);
  return out;
}

export function decodeFrame(data: Uint8Array): PanelFrameMsg {
  if (data.length < FRAME_HEADER_SIZE) {
    throw new WireError(`binary frame shorter than ${FRAME_HEADER_SIZE}-byte header`);
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const msg: PanelFrameMsg = {
    panelIdHash: view.getUint32(0, true),
    sourceSeq: view.getUint32(4, true),
    x: view.getUint16(8, true),
    y: view.getUint16(10, true),
    w: view.getUint16(12, true),
    h: view.getUint16(14, true),
    format: view.getUint8(16),
    payload: data.slice(FRAME_HEADER_SIZE),
  };
  if (msg.format !== FORMAT_RAW && msg.format !== FORMAT_PNG) {
    throw new WireError(`unknown frame format ${msg.format}`);
  }
  const off = msg.w === 0 && msg.h === 0;
  if (!off && msg.format === FORMAT_RAW && msg.payload.length !== msg.w * msg.h * 4) {
    throw new WireError(`raw payload is ${msg.payload.length} bytes, expected ${msg.w * msg.h * 4}`);
  }
  return msg;
}

export function isOffViewport(msg: PanelFrameMsg): boolean {
  return msg.w === 0 && msg.h === 0;
}
