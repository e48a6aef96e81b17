/** Canvas scene rendering and hit-testing over the triangle mesh.
 *
 * The mesh is drawn as vectors (exact boundaries at any zoom, cheap
 * picking); the context is a minimal structural interface so tests can
 * record draw calls without a DOM.
 */

import { BARRIER_COLOR, MESH_COLOR, OUTLINE_COLOR, SELECT_COLOR, labelColor } from "./colors.js";
import type { ViewState } from "./state.js";
import type { MeshPayload } from "./types.js";

export interface Ctx2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
}

export interface RenderStats {
  skipped: boolean;
  trianglesFilled: number;
  fillColors: string[];
  outlineDots: number;
  meshEdges: number;
  barrierEdges: number;
}

export function renderScene(ctx: Ctx2D, mesh: MeshPayload, state: ViewState): RenderStats {
  const stats: RenderStats = {
    skipped: false,
    trianglesFilled: 0,
    fillColors: [],
    outlineDots: 0,
    meshEdges: 0,
    barrierEdges: 0,
  };
  const seg = state.segmentation;
  // never render a segmentation that is not the acknowledged revision
  if (seg === null || seg.revision !== state.revision) {
    stats.skipped = true;
    return stats;
  }
  ctx.clearRect(0, 0, mesh.width, mesh.height);
  const verts = mesh.vertices;

  if (state.layers.has("segments")) {
    const seen = new Set<string>();
    for (let t = 0; t < mesh.triangles.length; t++) {
      const [a, b, c] = mesh.triangles[t];
      const label = seg.labels[t];
      const color = state.selection.includes(label) ? SELECT_COLOR : labelColor(label);
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.moveTo(verts[a][0], verts[a][1]);
      ctx.lineTo(verts[b][0], verts[b][1]);
      ctx.lineTo(verts[c][0], verts[c][1]);
      ctx.closePath();
      ctx.fill();
      stats.trianglesFilled += 1;
      if (!seen.has(color)) {
        seen.add(color);
        stats.fillColors.push(color);
      }
    }
  }

  if (state.layers.has("mesh")) {
    ctx.strokeStyle = MESH_COLOR;
    ctx.lineWidth = 0.5;
    for (const [a, b, c] of mesh.triangles) {
      ctx.beginPath();
      ctx.moveTo(verts[a][0], verts[a][1]);
      ctx.lineTo(verts[b][0], verts[b][1]);
      ctx.lineTo(verts[c][0], verts[c][1]);
      ctx.closePath();
      ctx.stroke();
      stats.meshEdges += 3;
    }
  }

  // barriers draw highlighted whenever present, independent of layers
  ctx.strokeStyle = BARRIER_COLOR;
  ctx.lineWidth = 2;
  for (const e of mesh.dual_edges) {
    if (!state.barriers.has(e.id)) {
      continue;
    }
    ctx.beginPath();
    ctx.moveTo(verts[e.v1][0], verts[e.v1][1]);
    ctx.lineTo(verts[e.v2][0], verts[e.v2][1]);
    ctx.stroke();
    stats.barrierEdges += 1;
  }

  if (state.layers.has("outline")) {
    ctx.fillStyle = OUTLINE_COLOR;
    for (const [x, y] of verts) {
      ctx.beginPath();
      ctx.arc(x, y, 1.0, 0, Math.PI * 2);
      ctx.fill();
      stats.outlineDots += 1;
    }
  }
  return stats;
}

export function pointInTriangle(
  px: number,
  py: number,
  a: [number, number],
  b: [number, number],
  c: [number, number],
): boolean {
  const s0 = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
  const s1 = (c[0] - b[0]) * (py - b[1]) - (c[1] - b[1]) * (px - b[0]);
  const s2 = (a[0] - c[0]) * (py - c[1]) - (a[1] - c[1]) * (px - c[0]);
  const tol = 1e-9;
  return (s0 >= -tol && s1 >= -tol && s2 >= -tol) || (s0 <= tol && s1 <= tol && s2 <= tol);
}

/** Triangle id containing (x, y), or null. */
export function hitTriangle(mesh: MeshPayload, x: number, y: number): number | null {
  const verts = mesh.vertices;
  for (let t = 0; t < mesh.triangles.length; t++) {
    const [a, b, c] = mesh.triangles[t];
    if (pointInTriangle(x, y, verts[a], verts[b], verts[c])) {
      return t;
    }
  }
  return null;
}

/** Segment id under the cursor, or null outside the mesh. */
export function hitSegment(mesh: MeshPayload, labels: number[], x: number, y: number): number | null {
  const t = hitTriangle(mesh, x, y);
  return t === null ? null : labels[t];
}

function segmentDistance(
  px: number,
  py: number,
  a: [number, number],
  b: [number, number],
): number {
  const vx = b[0] - a[0];
  const vy = b[1] - a[1];
  const len2 = vx * vx + vy * vy;
  let t = len2 > 0 ? ((px - a[0]) * vx + (py - a[1]) * vy) / len2 : 0;
  t = Math.min(1, Math.max(0, t));
  const qx = a[0] + t * vx;
  const qy = a[1] + t * vy;
  return Math.hypot(px - qx, py - qy);
}

/** Nearest dual edge within maxDist of (x, y); hull edges have no dual
 * edge and can never be picked. */
export function nearestDualEdge(
  mesh: MeshPayload,
  x: number,
  y: number,
  maxDist: number,
): number | null {
  let best: number | null = null;
  let bestDist = maxDist;
  for (const e of mesh.dual_edges) {
    const d = segmentDistance(x, y, mesh.vertices[e.v1], mesh.vertices[e.v2]);
    if (d <= bestDist) {
      bestDist = d;
      best = e.id;
    }
  }
  return best;
}
