/**
 * Client-side panel store: mirrors the server's layout announce and panel
 * states, ingests frame messages with latest-wins semantics, and maps
 * pointer positions to panel-local unit coordinates.
 *
 * A panel's displayed source seq never decreases: stale frames (network
 * reordering, test injection) are dropped before they reach the renderer.
 */

import { Camera, intersectPanel, type PanelHit } from "./math";
import {
  crc32,
  isOffViewport,
  type AnnouncedPanel,
  type LayoutAnnounceMsg,
  type PanelFrameMsg,
  type PanelStateMsg,
  type Pose,
} from "./protocol";

export interface PanelImage {
  x: number;
  y: number;
  w: number;
  h: number;
  format: number;
  payload: Uint8Array;
}

export interface ClientPanel {
  panelId: string;
  displayName: string;
  role: string;
  zone: string;
  interaction: string;
  pose: Pose;
  anchored: boolean;
  inputMode: string;
  sourceSeq: number;
  image: PanelImage | null;
  offViewport: boolean;
  dirty: boolean;
}

export interface WorkspaceHit extends PanelHit {
  panel: ClientPanel;
}

export class Workspace {
  layoutName = "";
  panels = new Map<string, ClientPanel>();
  private byHash = new Map<number, string>();
  onChange: (() => void) | null = null;

  applyAnnounce(announce: LayoutAnnounceMsg): void {
    this.layoutName = announce.layout_name;
    this.panels.clear();
    this.byHash.clear();
    for (const panel of announce.panels) {
      this.panels.set(panel.panel_id, fromAnnounced(panel));
      this.byHash.set(crc32(panel.panel_id), panel.panel_id);
    }
    this.notify();
  }

  applyState(state: PanelStateMsg): void {
    const panel = this.panels.get(state.panel_id);
    if (!panel) {
      return;
    }
    panel.pose = state.pose;
    panel.anchored = state.anchored;
    panel.inputMode = state.input_mode;
    panel.dirty = true;
    this.notify();
  }

  /**
   * Take in one frame message. Returns true when the panel advanced;
   * false when the frame was stale or addressed an unknown panel.
   */
  ingestFrame(msg: PanelFrameMsg): boolean {
    const panelId = this.byHash.get(msg.panelIdHash);
    if (!panelId) {
      return false;
    }
    const panel = this.panels.get(panelId)!;
    if (msg.sourceSeq <= panel.sourceSeq) {
      return false; // displayed seq must never decrease
    }
    panel.sourceSeq = msg.sourceSeq;
    if (isOffViewport(msg)) {
      panel.offViewport = true;
      panel.image = null;
    } else {
      panel.offViewport = false;
      panel.image = { x: msg.x, y: msg.y, w: msg.w, h: msg.h, format: msg.format, payload: msg.payload };
    }
    panel.dirty = true;
    this.notify();
    return true;
  }

  /** Nearest panel under a screen point, with its unit-square hit. */
  hitTest(camera: Camera, px: number, py: number, slack = 0): WorkspaceHit | null {
    const ray = camera.screenRay(px, py);
    let best: WorkspaceHit | null = null;
    for (const panel of this.panels.values()) {
      const hit = intersectPanel(ray, panel.pose, slack);
      if (hit && (best === null || hit.t < best.t)) {
        best = { ...hit, panel };
      }
    }
    return best;
  }

  get(panelId: string): ClientPanel | undefined {
    return this.panels.get(panelId);
  }

  private notify(): void {
    this.onChange?.();
  }
}

function fromAnnounced(panel: AnnouncedPanel): ClientPanel {
  return {
    panelId: panel.panel_id,
    displayName: panel.display_name,
    role: panel.role,
    zone: panel.zone,
    interaction: panel.interaction,
    pose: panel.pose,
    anchored: panel.anchored,
    inputMode: panel.input_mode,
    sourceSeq: 0,
    image: null,
    offViewport: false,
    dirty: true,
  };
}
