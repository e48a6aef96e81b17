"""Outline extraction: non-maximum suppression, hysteresis, subpixel fit.

The strength profile of a shadow transition peaks across the boundary,
so suppression compares each pixel against its two neighbors along its
own transition direction. Surviving maxima are refined to subpixel
positions with a 1D quadratic fit along that direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from shadowseg.edge_detect import DIRECTIONS, EdgeField

_FIT_EPS = 1e-12


@dataclass(frozen=True)
class OutlinePoints:
    """Subpixel positions of surviving edge maxima."""

    points: np.ndarray  # (N, 2) float64, (x, y)
    source_pixels: np.ndarray  # (N, 2) int64, (x, y)
    strength: np.ndarray  # (N,) float64, g of the source pixel

    def __len__(self) -> int:
        return len(self.points)


def _effective_strength(field: EdgeField) -> np.ndarray:
    """g with invalid pixels zeroed."""
    return np.where(field.valid, field.strength, 0.0)


def _shifted(grid: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """grid sampled at (x + dx, y + dy), border-replicated outside.

    Replication matches the clamped-window policy of the detection
    stage; zero-padding would turn the borders of a constant field into
    spurious maxima.
    """
    h, w = grid.shape
    ys = np.clip(np.arange(h) + dy, 0, h - 1)
    xs = np.clip(np.arange(w) + dx, 0, w - 1)
    return grid[np.ix_(ys, xs)]


def non_max_suppress(field: EdgeField) -> np.ndarray:
    """Keep pixels that peak along their own direction.

    p survives iff it is valid, g_p > g(p - theta) and g_p >= g(p + theta);
    the strict/non-strict split keeps exactly one pixel of a 2-plateau
    (the one on the negative side). Invalid neighbors count as g = 0;
    reads past the image border replicate the border pixel.
    """
    g = _effective_strength(field)
    kept = np.zeros(field.shape, dtype=bool)
    for d in DIRECTIONS:
        sel = field.valid & (field.direction == d.index)
        if not sel.any():
            continue
        behind = _shifted(g, -d.dx, -d.dy)
        ahead = _shifted(g, d.dx, d.dy)
        kept |= sel & (field.strength > behind) & (field.strength >= ahead)
    return kept


def hysteresis(kept: np.ndarray, field: EdgeField, t_low: float, t_high: float) -> np.ndarray:
    """Double thresholding over the suppression survivors.

    Survivors with g >= t_high seed the result; survivors with
    g >= t_low are kept iff 8-connected to a seed through survivors with
    g >= t_low.
    """
    if t_low > t_high:
        raise ValueError(f"t_low {t_low} > t_high {t_high}")
    g = _effective_strength(field)
    candidates = kept & (g >= t_low)
    seeds = kept & (g >= t_high)
    if not seeds.any():
        return np.zeros_like(candidates)
    labels, n = ndimage.label(candidates, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return np.zeros_like(candidates)
    seed_labels = np.unique(labels[seeds])
    seed_labels = seed_labels[seed_labels > 0]
    return candidates & np.isin(labels, seed_labels)


def subpixel_refine(field: EdgeField, p: tuple[int, int]) -> tuple[float, float]:
    """Quadratic-fit subpixel position of the maximum at pixel p = (x, y).

    With samples g-, g0, g+ along theta_p, the parabola through them
    peaks at offset delta = (g- - g+) / (2 (g- - 2 g0 + g+)). Degenerate
    fits (tiny denominator or |delta| > 0.5) keep the pixel center.
    """
    x, y = p
    d = DIRECTIONS[int(field.direction[y, x])]
    g = _effective_strength(field)
    h, w = g.shape

    def sample(px: int, py: int) -> float:
        return float(g[min(max(py, 0), h - 1), min(max(px, 0), w - 1)])

    g0 = float(field.strength[y, x])
    gm = sample(x - d.dx, y - d.dy)
    gp = sample(x + d.dx, y + d.dy)
    denom = 2.0 * (gm - 2.0 * g0 + gp)
    delta = 0.0
    if abs(denom) >= _FIT_EPS:
        delta = (gm - gp) / denom
        if abs(delta) > 0.5:
            delta = 0.0
    ux, uy = d.unit
    return (x + delta * ux, y + delta * uy)


def extract_outline(field: EdgeField, t_low: float, t_high: float) -> OutlinePoints:
    """Full thinning stage: suppression, hysteresis, subpixel refinement.

    Points come out in row-major order of their source pixels, one point
    per surviving pixel.
    """
    survivors = hysteresis(non_max_suppress(field), field, t_low, t_high)
    ys, xs = np.nonzero(survivors)
    points = np.empty((len(xs), 2), dtype=np.float64)
    for i, (x, y) in enumerate(zip(xs, ys)):
        points[i] = subpixel_refine(field, (int(x), int(y)))
    return OutlinePoints(
        points=points,
        source_pixels=np.column_stack([xs, ys]).astype(np.int64),
        strength=field.strength[ys, xs].astype(np.float64),
    )


def save_outline(path: Path | str, outline: OutlinePoints) -> None:
    """Write one ``x y strength`` line per point."""
    lines = [
        f"{float(x)!r} {float(y)!r} {float(s)!r}"
        for (x, y), s in zip(outline.points, outline.strength)
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_outline_points(path: Path | str) -> np.ndarray:
    """Read the (x, y) columns of an outline dump."""
    rows = []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if parts:
            rows.append((float(parts[0]), float(parts[1])))
    return np.array(rows, dtype=np.float64).reshape(-1, 2)
