/**
 * 2.5D canvas renderer. The desk plane is drawn as a ground reference;
 * surface-anchored panels lie flat on it while mid-air panels stand
 * upright, making the spatial roles visible at a glance. Each panel
 * carries its touch/ray badge, and ray-mode panels get a cursor-line
 * affordance instead of a headset ray.
 */

import { Camera, panelCorners } from "./math";
import { FORMAT_RAW, type Vec3 } from "./protocol";
import { Workspace, type ClientPanel } from "./workspace";

const DESK_CORNERS: Vec3[] = [
  [-0.6, 0, 0.0],
  [0.6, 0, 0.0],
  [0.6, 0, -0.8],
  [-0.6, 0, -0.8],
];

interface PanelTexture {
  seq: number;
  canvas: HTMLCanvasElement | null;
  pending: boolean;
}

export class Renderer {
  private textures = new Map<string, PanelTexture>();
  private ctx: CanvasRenderingContext2D;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly workspace: Workspace,
    readonly camera: Camera,
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("2d canvas context unavailable");
    }
    this.ctx = ctx;
  }

  draw(): void {
    const { ctx, canvas } = this;
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    this.drawDesk();

    const panels = [...this.workspace.panels.values()].sort(
      (a, b) => this.camera.depth(a.pose.position) - this.camera.depth(b.pose.position),
    );
    for (const panel of panels) {
      this.drawPanel(panel);
      panel.dirty = false;
    }
  }

  private drawDesk(): void {
    const { ctx } = this;
    const pts = DESK_CORNERS.map((c) => this.camera.project(c));
    if (pts.some((p) => p === null)) {
      return;
    }
    ctx.beginPath();
    ctx.moveTo(pts[0]![0], pts[0]![1]);
    for (const p of pts.slice(1)) {
      ctx.lineTo(p![0], p![1]);
    }
    ctx.closePath();
    ctx.fillStyle = "rgba(82, 63, 42, 0.55)";
    ctx.fill();
    ctx.strokeStyle = "rgba(214, 182, 140, 0.6)";
    ctx.stroke();
  }

  private drawPanel(panel: ClientPanel): void {
    const { ctx } = this;
    const projected = panelCorners(panel.pose).map((c) => this.camera.project(c));
    if (projected.some((p) => p === null)) {
      return;
    }
    const [tl, tr, br, bl] = projected as [
      [number, number],
      [number, number],
      [number, number],
      [number, number],
    ];

    const outline = () => {
      ctx.beginPath();
      ctx.moveTo(tl[0], tl[1]);
      ctx.lineTo(tr[0], tr[1]);
      ctx.lineTo(br[0], br[1]);
      ctx.lineTo(bl[0], bl[1]);
      ctx.closePath();
    };

    ctx.save();
    outline();
    ctx.fillStyle = panel.offViewport ? "#2a2f3a" : "#000";
    ctx.fill();

    const texture = this.texture(panel);
    if (texture) {
      ctx.clip();
      // Affine fit from the unit square to (tl, tr, bl); perspective
      // distortion is acceptable at desk scale.
      ctx.setTransform(
        (tr[0] - tl[0]) / texture.width,
        (tr[1] - tl[1]) / texture.width,
        (bl[0] - tl[0]) / texture.height,
        (bl[1] - tl[1]) / texture.height,
        tl[0],
        tl[1],
      );
      ctx.drawImage(texture, 0, 0);
      ctx.setTransform(1, 0, 0, 1, 0, 0);
    }
    ctx.restore();

    ctx.strokeStyle = panel.anchored ? "#ffd166" : "#4cc9f0";
    ctx.lineWidth = panel.anchored ? 3 : 1.5;
    outline();
    ctx.stroke();

    // Badge + label above the top-left corner.
    const badge = panel.inputMode === "ray" ? "ray" : "touch";
    ctx.font = "12px system-ui, sans-serif";
    ctx.fillStyle = panel.inputMode === "ray" ? "#f72585" : "#80ed99";
    ctx.fillText(`${panel.displayName} · ${badge}${panel.anchored ? " · snapped" : ""}`, tl[0], tl[1] - 6);

    if (panel.inputMode === "ray") {
      const center = this.camera.project(panel.pose.position);
      if (center) {
        ctx.strokeStyle = "rgba(247, 37, 133, 0.45)";
        ctx.setLineDash([6, 6]);
        ctx.beginPath();
        ctx.moveTo(this.canvas.width / 2, this.canvas.height - 8);
        ctx.lineTo(center[0], center[1]);
        ctx.stroke();
        ctx.setLineDash([]);
      }
    }

    if (panel.offViewport) {
      const center = this.camera.project(panel.pose.position);
      if (center) {
        ctx.fillStyle = "#9aa4b2";
        ctx.fillText("scrolled out of source viewport", center[0] - 80, center[1]);
      }
    }
  }

  private texture(panel: ClientPanel): HTMLCanvasElement | null {
    const image = panel.image;
    if (!image) {
      return null;
    }
    let entry = this.textures.get(panel.panelId);
    if (!entry || entry.seq !== panel.sourceSeq) {
      entry = { seq: panel.sourceSeq, canvas: entry?.canvas ?? null, pending: false };
      this.textures.set(panel.panelId, entry);
      if (image.format === FORMAT_RAW) {
        const off = document.createElement("canvas");
        off.width = image.w;
        off.height = image.h;
        const data = new ImageData(new Uint8ClampedArray(image.payload), image.w, image.h);
        off.getContext("2d")!.putImageData(data, 0, 0);
        entry.canvas = off;
      } else if (!entry.pending) {
        entry.pending = true;
        const blob = new Blob([image.payload.slice().buffer], { type: "image/png" });
        const current = entry;
        createImageBitmap(blob).then((bitmap) => {
          const off = document.createElement("canvas");
          off.width = bitmap.width;
          off.height = bitmap.height;
          off.getContext("2d")!.drawImage(bitmap, 0, 0);
          current.canvas = off;
          current.pending = false;
          panel.dirty = true;
        });
      }
    }
    return entry.canvas;
  }
}
