"""Synthetic desk scene: a square occluder floating over a ground plane.

Rendered by per-pixel ray casting against the occluder. The camera looks
straight down; a pixel shows the occluder top (always lit), the desk
surface (shadowed when its ray toward a light hits the occluder), or the
void beyond the desk (shadowed under every light).

Layout notes, earned the hard way:

* The desk is a disk. Its boundary is never axis-aligned for long, so
  the detected outline band does not degenerate into long collinear
  sliver ribbons.
* The occluder is a rotated square placed just inside the desk rim
  (a couple of pixels of clearance). The ground region is then nearly
  convex instead of an annulus, which lets the greedy fusion sweep it
  from one nucleus; a centered occluder splits the ground into frozen
  competing basins at larger kappa.
* The occluder floats low. Higher floats grow the detached shadow
  slivers whose arcs can enclose pockets of ground near the rim.
* 16 azimuths make the per-light spurious shadow boundaries average
  out below the hysteresis thresholds while reinforcing the true
  contours.

Expected segmentation: exactly two segments, ground and occluder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from shadowseg.mask_io import Light, LightSet, ShadowStack, save_stack, write_lights


@dataclass(frozen=True)
class SceneSpec:
    size: int = 256
    desk_radius: float = 86.0
    occluder_half: float = 24.0  # half side length of the occluder square
    occluder_azimuth_deg: float = 205.0  # direction from desk center to occluder
    rim_clearance: float = 2.0  # gap between occluder corner and desk rim
    height: float = 5.0  # occluder altitude in pixel units
    n_azimuths: int = 16
    elevations_deg: tuple[float, ...] = (45.0,)

    @property
    def center(self) -> tuple[float, float]:
        c = (self.size - 1) / 2.0
        return (c, c)

    @property
    def occluder_center(self) -> tuple[float, float]:
        cx, cy = self.center
        reach = self.occluder_half * math.sqrt(2.0) + self.rim_clearance
        d = self.desk_radius - reach
        a = math.radians(self.occluder_azimuth_deg)
        return (cx + d * math.cos(a), cy + d * math.sin(a))

    @property
    def occluder_angle_deg(self) -> float:
        # one corner points at the nearest rim, so the square meets the
        # rim steeply instead of along a thin wedge
        return (self.occluder_azimuth_deg - 45.0) % 90.0

    @property
    def n_lights(self) -> int:
        return self.n_azimuths * len(self.elevations_deg)

    @classmethod
    def scaled(cls, size: int, **overrides) -> "SceneSpec":
        """Proportions of the 256 default scaled to another image size."""
        f = size / 256.0
        kwargs = dict(
            size=size,
            desk_radius=86.0 * f,
            occluder_half=24.0 * f,
            rim_clearance=max(2.0, 2.0 * f),
            height=5.0 * f,
        )
        kwargs.update(overrides)
        return cls(**kwargs)


def scene_lights(spec: SceneSpec) -> LightSet:
    lights = []
    idx = 0
    for el in spec.elevations_deg:
        for k in range(spec.n_azimuths):
            az = 2.0 * math.pi * k / spec.n_azimuths
            el_r = math.radians(el)
            lx = math.cos(az) * math.cos(el_r)
            ly = math.sin(az) * math.cos(el_r)
            lz = math.sin(el_r)
            lights.append(Light(f"L{idx:02d}", "directional", direction=(lx, ly, lz)))
            idx += 1
    return LightSet(tuple(lights))


def _in_occluder(x: np.ndarray, y: np.ndarray, spec: SceneSpec) -> np.ndarray:
    cx, cy = spec.occluder_center
    a = math.radians(spec.occluder_angle_deg)
    ca, sa = math.cos(a), math.sin(a)
    dx, dy = x - cx, y - cy
    u = ca * dx + sa * dy
    v = -sa * dx + ca * dy
    h = spec.occluder_half
    return (np.abs(u) <= h) & (np.abs(v) <= h)


def _pixel_grids(size: int) -> tuple[np.ndarray, np.ndarray]:
    xs = np.arange(size, dtype=np.float64)[None, :]
    ys = np.arange(size, dtype=np.float64)[:, None]
    return np.broadcast_to(xs, (size, size)), np.broadcast_to(ys, (size, size))


def render_mask(spec: SceneSpec, light: Light) -> np.ndarray:
    """Binary mask of one light: 1 = lit, 0 = shadowed."""
    x, y = _pixel_grids(spec.size)
    cx, cy = spec.center
    on_occluder = _in_occluder(x, y, spec)
    on_desk = (x - cx) ** 2 + (y - cy) ** 2 <= spec.desk_radius**2

    lx, ly, lz = light.direction  # type: ignore[misc]
    t = spec.height / lz
    shadowed = _in_occluder(x + t * lx, y + t * ly, spec)

    lit = np.where(on_occluder, True, on_desk & ~shadowed)
    return lit.astype(np.uint8)


def generate_scene(spec: SceneSpec | None = None) -> tuple[ShadowStack, LightSet, SceneSpec]:
    spec = spec or SceneSpec()
    lights = scene_lights(spec)
    masks = tuple(render_mask(spec, l) for l in lights)
    stack = ShadowStack(width=spec.size, height=spec.size, masks=masks, light_ids=lights.ids)
    return stack, lights, spec


def occluder_interior(spec: SceneSpec) -> np.ndarray:
    """Boolean grid of pixels on the occluder top."""
    x, y = _pixel_grids(spec.size)
    return _in_occluder(x, y, spec)


def occluder_boundary(spec: SceneSpec) -> np.ndarray:
    """(N, 2) integer (x, y) pixels on the true occluder boundary."""
    grid = occluder_interior(spec)
    interior = np.zeros_like(grid)
    interior[1:-1, 1:-1] = (
        grid[1:-1, 1:-1] & grid[:-2, 1:-1] & grid[2:, 1:-1] & grid[1:-1, :-2] & grid[1:-1, 2:]
    )
    ys, xs = np.nonzero(grid & ~interior)
    return np.column_stack([xs, ys])


def write_scene(out_dir: Path | str, spec: SceneSpec | None = None) -> tuple[Path, Path]:
    """Write masks and lights file to disk; returns (mask_dir, lights_file)."""
    out_dir = Path(out_dir)
    stack, lights, _ = generate_scene(spec)
    mask_dir = out_dir / "masks"
    save_stack(stack, mask_dir, fmt="pgm")
    lights_file = out_dir / "lights.txt"
    write_lights(lights_file, lights)
    return mask_dir, lights_file


def main(argv: list[str] | None = None) -> int:
    import argparse

    ap = argparse.ArgumentParser(description="Write a synthetic shadow-mask scene")
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--azimuths", type=int, default=16)
    args = ap.parse_args(argv)
    spec = SceneSpec.scaled(args.size, n_azimuths=args.azimuths)
    mask_dir, lights_file = write_scene(args.out_dir, spec)
    print(f"wrote {spec.n_lights} masks to {mask_dir}, lights to {lights_file}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
