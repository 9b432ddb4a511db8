import { describe, expect, it } from "vitest";

import { Camera, add, panelAxes, scale } from "../src/math";
import { crc32, type LayoutAnnounceMsg, type PanelFrameMsg, type Pose } from "../src/protocol";
import { Workspace } from "../src/workspace";

const SQ = Math.sqrt(0.5);
const UPRIGHT: Pose = { position: [0, 0.45, -0.8], orientation: [1, 0, 0, 0], size: [0.64, 0.4] };
const FLAT_ON_DESK: Pose = { position: [0, 0, -0.25], orientation: [SQ, -SQ, 0, 0], size: [0.42, 0.28] };

function announce(panels: Array<{ id: string; pose: Pose }>): LayoutAnnounceMsg {
  return {
    type: "layout_announce",
    layout_name: "test",
    url: "mock://grid",
    protocol_version: 1,
    panels: panels.map((p) => ({
      panel_id: p.id,
      display_name: p.id,
      role: "primary-content",
      region: { x: 0, y: 0, w: 100, h: 100 },
      anchoring: "document",
      zone: "midair-center",
      distance: "mid",
      scale: 1,
      interaction: "auto",
      pose: p.pose,
      anchored: false,
      input_mode: "ray",
    })),
  };
}

function rawFrame(panelId: string, seq: number, w = 2, h = 2): PanelFrameMsg {
  return {
    panelIdHash: crc32(panelId),
    sourceSeq: seq,
    x: 0,
    y: 0,
    w,
    h,
    format: 0,
    payload: new Uint8Array(w * h * 4).fill(seq % 256),
  };
}

describe("unit point from hit position", () => {
  const camera = new Camera();

  it.each([
    ["upright mid-air panel", UPRIGHT],
    ["flat surface panel", FLAT_ON_DESK],
  ])("visual center of a %s emits (0.5, 0.5) within 0.01", (_name, pose) => {
    const ws = new Workspace();
    ws.applyAnnounce(announce([{ id: "p", pose }]));
    const center = camera.project(pose.position);
    expect(center).not.toBeNull();
    const hit = ws.hitTest(camera, center![0], center![1]);
    expect(hit).not.toBeNull();
    expect(hit!.panel.panelId).toBe("p");
    expect(hit!.u).toBeCloseTo(0.5, 2);
    expect(Math.abs(hit!.u - 0.5)).toBeLessThanOrEqual(0.01);
    expect(Math.abs(hit!.v - 0.5)).toBeLessThanOrEqual(0.01);
  });

  it("recovers off-center unit points exactly", () => {
    const ws = new Workspace();
    ws.applyAnnounce(announce([{ id: "p", pose: UPRIGHT }]));
    const { right, up } = panelAxes(UPRIGHT);
    // 3D point at (u, v) = (0.25, 0.75) on the panel face.
    const target = add(
      UPRIGHT.position,
      add(scale(right, (0.25 - 0.5) * UPRIGHT.size[0]), scale(up, (0.5 - 0.75) * UPRIGHT.size[1])),
    );
    const screen = camera.project(target)!;
    const hit = ws.hitTest(camera, screen[0], screen[1])!;
    expect(hit.u).toBeCloseTo(0.25, 6);
    expect(hit.v).toBeCloseTo(0.75, 6);
  });

  it("misses when pointing away from every panel", () => {
    const ws = new Workspace();
    ws.applyAnnounce(announce([{ id: "p", pose: UPRIGHT }]));
    expect(ws.hitTest(camera, 5, 5)).toBeNull();
  });

  it("prefers the nearer of two overlapping panels", () => {
    const near: Pose = { ...UPRIGHT, position: [0, 0.45, -0.5] };
    const ws = new Workspace();
    ws.applyAnnounce(
      announce([
        { id: "far", pose: UPRIGHT },
        { id: "near", pose: near },
      ]),
    );
    const screen = camera.project(near.position)!;
    expect(ws.hitTest(camera, screen[0], screen[1])!.panel.panelId).toBe("near");
  });
});

describe("frame monotonicity", () => {
  it("drops out-of-order frames so displayed seq never decreases", () => {
    const ws = new Workspace();
    ws.applyAnnounce(announce([{ id: "p", pose: UPRIGHT }]));
    expect(ws.ingestFrame(rawFrame("p", 5))).toBe(true);
    expect(ws.get("p")!.sourceSeq).toBe(5);
    expect(ws.get("p")!.image!.payload[0]).toBe(5);

    expect(ws.ingestFrame(rawFrame("p", 3))).toBe(false); // stale: dropped
    expect(ws.get("p")!.sourceSeq).toBe(5);
    expect(ws.get("p")!.image!.payload[0]).toBe(5);

    expect(ws.ingestFrame(rawFrame("p", 5))).toBe(false); // duplicate: dropped
    expect(ws.ingestFrame(rawFrame("p", 6))).toBe(true);
    expect(ws.get("p")!.sourceSeq).toBe(6);
  });

  it("ignores frames for unknown panel hashes", () => {
    const ws = new Workspace();
    ws.applyAnnounce(announce([{ id: "p", pose: UPRIGHT }]));
    expect(ws.ingestFrame(rawFrame("ghost", 1))).toBe(false);
  });

  it("off-viewport frames clear the image but keep monotonicity", () => {
    const ws = new Workspace();
    ws.applyAnnounce(announce([{ id: "p", pose: UPRIGHT }]));
    ws.ingestFrame(rawFrame("p", 2));
    const off: PanelFrameMsg = { ...rawFrame("p", 3), w: 0, h: 0, payload: new Uint8Array(0) };
    expect(ws.ingestFrame(off)).toBe(true);
    expect(ws.get("p")!.offViewport).toBe(true);
    expect(ws.get("p")!.image).toBeNull();
    expect(ws.ingestFrame(rawFrame("p", 2))).toBe(false);
  });
});

describe("panel state updates", () => {
  it("applies pose, snap and badge from the server", () => {
    const ws = new Workspace();
    ws.applyAnnounce(announce([{ id: "p", pose: UPRIGHT }]));
    ws.applyState({
      type: "panel_state",
      panel_id: "p",
      pose: FLAT_ON_DESK,
      anchored: true,
      input_mode: "touch",
    });
    const panel = ws.get("p")!;
    expect(panel.anchored).toBe(true);
    expect(panel.inputMode).toBe("touch");
    expect(panel.pose).toEqual(FLAT_ON_DESK);
  });
});
