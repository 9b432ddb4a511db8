/**
 * Minimal 3D math for the 2.5D workspace scene: quaternion rotation, a
 * pitch-only pinhole camera, and ray/panel-plane intersection. Workspace
 * frame matches the server: meters, x right, y up, z toward the user,
 * origin at the desk-front center.
 */

import type { Pose, Quat, Vec3 } from "./protocol";

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  return n > 0 ? scale(a, 1 / n) : a;
}

/** Rotate a vector by a (w, x, y, z) unit quaternion. */
export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  // v' = v + 2r x (r x v + w v), r = (x, y, z)
  const rx: Vec3 = [x, y, z];
  const cross1: Vec3 = [
    rx[1] * v[2] - rx[2] * v[1] + w * v[0],
    rx[2] * v[0] - rx[0] * v[2] + w * v[1],
    rx[0] * v[1] - rx[1] * v[0] + w * v[2],
  ];
  const cross2: Vec3 = [
    rx[1] * cross1[2] - rx[2] * cross1[1],
    rx[2] * cross1[0] - rx[0] * cross1[2],
    rx[0] * cross1[1] - rx[1] * cross1[0],
  ];
  return add(v, scale(cross2, 2));
}

export interface PanelAxes {
  right: Vec3;
  up: Vec3;
  normal: Vec3;
}

export function panelAxes(pose: Pose): PanelAxes {
  return {
    right: quatRotate(pose.orientation, [1, 0, 0]),
    up: quatRotate(pose.orientation, [0, 1, 0]),
    normal: quatRotate(pose.orientation, [0, 0, 1]),
  };
}

/** The four panel corners, top-left first, clockwise. */
export function panelCorners(pose: Pose): [Vec3, Vec3, Vec3, Vec3] {
  const { right, up } = panelAxes(pose);
  const hw = pose.size[0] / 2;
  const hh = pose.size[1] / 2;
  const c = pose.position;
  return [
    add(c, add(scale(right, -hw), scale(up, hh))),
    add(c, add(scale(right, hw), scale(up, hh))),
    add(c, add(scale(right, hw), scale(up, -hh))),
    add(c, add(scale(right, -hw), scale(up, -hh))),
  ];
}

export interface Ray {
  origin: Vec3;
  dir: Vec3;
}

/**
 * Pinhole camera looking toward -z, pitched about the x axis (negative
 * pitch looks down at the desk). Panels and the desk are projected and
 * hit-tested with the same transform, so what you click is what you get.
 */
export class Camera {
  constructor(
    public position: Vec3 = [0, 0.85, 0.55],
    public pitchRad: number = -0.55,
    public focal: number = 900,
    public cx: number = 480,
    public cy: number = 320,
  ) {}

  private toCamera(p: Vec3): Vec3 {
    const t = sub(p, this.position);
    const cos = Math.cos(-this.pitchRad);
    const sin = Math.sin(-this.pitchRad);
    return [t[0], cos * t[1] - sin * t[2], sin * t[1] + cos * t[2]];
  }

  /** Screen coords (y down), or null when behind the camera. */
  project(p: Vec3): [number, number] | null {
    const c = this.toCamera(p);
    if (c[2] > -1e-6) {
      return null;
    }
    return [this.cx + (this.focal * c[0]) / -c[2], this.cy - (this.focal * c[1]) / -c[2]];
  }

  /** Camera-space depth (more negative = farther), for painter sorting. */
  depth(p: Vec3): number {
    return this.toCamera(p)[2];
  }

  screenRay(px: number, py: number): Ray {
    const dirCam: Vec3 = normalize([(px - this.cx) / this.focal, -(py - this.cy) / this.focal, -1]);
    const cos = Math.cos(this.pitchRad);
    const sin = Math.sin(this.pitchRad);
    const dir: Vec3 = [dirCam[0], cos * dirCam[1] - sin * dirCam[2], sin * dirCam[1] + cos * dirCam[2]];
    return { origin: this.position, dir };
  }
}

export interface PanelHit {
  u: number;
  v: number;
  t: number;
}

/**
 * Intersect a ray with a panel's plane and express the hit in the
 * panel-local unit square ((0,0) top-left). Returns null when the ray is
 * parallel, behind the origin, or misses the panel bounds beyond `slack`.
 */
export function intersectPanel(ray: Ray, pose: Pose, slack = 0): PanelHit | null {
  const { right, up, normal } = panelAxes(pose);
  const denom = dot(ray.dir, normal);
  if (Math.abs(denom) < 1e-9) {
    return null;
  }
  const t = dot(sub(pose.position, ray.origin), normal) / denom;
  if (t <= 1e-9) {
    return null;
  }
  const hit = add(ray.origin, scale(ray.dir, t));
  const local = sub(hit, pose.position);
  const u = 0.5 + dot(local, right) / pose.size[0];
  const v = 0.5 - dot(local, up) / pose.size[1];
  if (u < -slack || u > 1 + slack || v < -slack || v > 1 + slack) {
    return null;
  }
  return { u, v, t };
}
