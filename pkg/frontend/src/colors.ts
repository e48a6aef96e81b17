/** Stable per-label colors: golden-angle hue walk, label 0 onward. */

const GOLDEN_ANGLE = 137.50776405003785;

export function labelColor(label: number): string {
  const hue = ((label * GOLDEN_ANGLE) % 360 + 360) % 360;
  const light = 45 + 18 * (((label * 7) % 3) - 1) / 2;
  return `hsl(${hue.toFixed(3)}, 65%, ${light}%)`;
}

export const OUTLINE_COLOR = "#ff4136";
export const BARRIER_COLOR = "#ffdc00";
export const MESH_COLOR = "rgba(255,255,255,0.25)";
export const SELECT_COLOR = "#ffffff";
