/**
 * Browser entry point. Connect with ?server=ws://host:port (defaults to
 * the page host on port 7420) and optionally &token=...&name=... .
 *
 * Grab a panel near its edge to drag it through space; hold Shift while
 * edge-dragging to resize. Anything inside the panel face is forwarded
 * to the mirrored page as pointer/wheel/key input.
 */

import { Camera } from "./math";
import { Renderer } from "./render";
import { PanelSession, webSocketTransport } from "./session";
import { Workspace } from "./workspace";

const EDGE_GRAB = 0.07;
const DRAG_SEND_INTERVAL_MS = 33;

function query(name: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? "";
}

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const status = document.getElementById("status") as HTMLElement;

const serverUrl = query("server") || `ws://${window.location.hostname || "127.0.0.1"}:7420`;
const workspace = new Workspace();
const camera = new Camera();
const renderer = new Renderer(canvas, workspace, camera);
const session = new PanelSession(webSocketTransport(new WebSocket(serverUrl)), workspace, {
  clientName: query("name") || "panel-client",
  token: query("token"),
});

function resize(): void {
  canvas.width = window.innerWidth;
  canvas.height = window.innerHeight - 28;
  camera.cx = canvas.width / 2;
  camera.cy = canvas.height * 0.45;
  camera.focal = canvas.width * 0.9;
}
window.addEventListener("resize", resize);
resize();

session.onAnnounce = () => {
  status.textContent = `connected · layout ${workspace.layoutName} · ${workspace.panels.size} panels`;
};
session.onError = (err) => {
  status.textContent = `server error: ${err.code} (${err.detail})`;
};
status.textContent = `connecting to ${serverUrl} ...`;

interface DragState {
  panelId: string;
  t: number; // keep the grab distance along the ray
  resize: boolean;
  startSize: [number, number];
  startDist: number;
  lastSent: number;
}

let drag: DragState | null = null;
let pressedPanel: string | null = null;
let focusPanel: string | null = null;

canvas.addEventListener("pointerdown", (event) => {
  const hit = workspace.hitTest(camera, event.offsetX, event.offsetY, EDGE_GRAB);
  if (!hit) {
    return;
  }
  focusPanel = hit.panel.panelId;
  const nearEdge =
    hit.u < EDGE_GRAB || hit.u > 1 - EDGE_GRAB || hit.v < EDGE_GRAB || hit.v > 1 - EDGE_GRAB;
  if (nearEdge) {
    drag = {
      panelId: hit.panel.panelId,
      t: hit.t,
      resize: event.shiftKey,
      startSize: [...hit.panel.pose.size],
      startDist: Math.hypot(hit.u - 0.5, hit.v - 0.5),
      lastSent: 0,
    };
    canvas.setPointerCapture(event.pointerId);
    return;
  }
  pressedPanel = hit.panel.panelId;
  session.sendPointer(hit.panel.panelId, "pointer-down", clamp01(hit.u), clamp01(hit.v), buttonName(event));
});

canvas.addEventListener("pointermove", (event) => {
  if (drag) {
    const now = performance.now();
    if (now - drag.lastSent < DRAG_SEND_INTERVAL_MS) {
      return;
    }
    drag.lastSent = now;
    const panel = workspace.get(drag.panelId);
    if (!panel) {
      return;
    }
    const ray = camera.screenRay(event.offsetX, event.offsetY);
    if (drag.resize) {
      const hit = workspace.hitTest(camera, event.offsetX, event.offsetY, 3);
      if (hit && hit.panel.panelId === drag.panelId && drag.startDist > 1e-6) {
        const factor = Math.max(Math.hypot(hit.u - 0.5, hit.v - 0.5) / drag.startDist, 0.2);
        session.resizePanel(drag.panelId, [drag.startSize[0] * factor, drag.startSize[1] * factor]);
      }
      return;
    }
    session.dragPanelTo(drag.panelId, [
      ray.origin[0] + ray.dir[0] * drag.t,
      ray.origin[1] + ray.dir[1] * drag.t,
      ray.origin[2] + ray.dir[2] * drag.t,
    ]);
    return;
  }
  if (pressedPanel) {
    const hit = workspace.hitTest(camera, event.offsetX, event.offsetY);
    if (hit && hit.panel.panelId === pressedPanel) {
      session.sendPointer(pressedPanel, "pointer-move", clamp01(hit.u), clamp01(hit.v));
    }
  }
});

canvas.addEventListener("pointerup", (event) => {
  if (drag) {
    drag = null;
    canvas.releasePointerCapture(event.pointerId);
    return;
  }
  if (pressedPanel) {
    const hit = workspace.hitTest(camera, event.offsetX, event.offsetY, 2);
    if (hit && hit.panel.panelId === pressedPanel) {
      session.sendPointer(pressedPanel, "pointer-up", clamp01(hit.u), clamp01(hit.v), buttonName(event));
    }
    pressedPanel = null;
  }
});

canvas.addEventListener("wheel", (event) => {
  const hit = workspace.hitTest(camera, event.offsetX, event.offsetY);
  if (hit) {
    event.preventDefault();
    session.sendWheel(hit.panel.panelId, clamp01(hit.u), clamp01(hit.v), event.deltaX, event.deltaY);
  }
});

window.addEventListener("keydown", (event) => {
  if (focusPanel) {
    session.sendKey(focusPanel, event.key, event.key.length === 1 ? event.key : "");
  }
});

function clamp01(x: number): number {
  return Math.min(Math.max(x, 0), 1);
}

function buttonName(event: PointerEvent): string {
  return event.button === 2 ? "right" : event.button === 1 ? "middle" : "left";
}

function loop(): void {
  renderer.draw();
  requestAnimationFrame(loop);
}
requestAnimationFrame(loop);
