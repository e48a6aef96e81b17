"""Report figures rendered to files with matplotlib (Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from shadowseg.edge_detect import EdgeField
from shadowseg.mask_io import ShadowStack
from shadowseg.outline import OutlinePoints
from shadowseg.segmentation import SegmentationResult
from shadowseg.triangulation import Triangulation


def label_colors(n: int) -> np.ndarray:
    """Stable, distinct-ish RGB colors for labels 1..n (0 stays black)."""
    idx = np.arange(1, n + 1, dtype=np.uint64)
    h = idx * np.uint64(2654435761) % np.uint64(2**32)
    r = (h >> np.uint64(16)) & np.uint64(0xFF)
    g = (h >> np.uint64(8)) & np.uint64(0xFF)
    b = h & np.uint64(0xFF)
    rgb = np.stack([r, g, b], axis=1).astype(np.float64) / 255.0
    return 0.25 + 0.75 * rgb  # keep colors away from the black background


def write_overlay_figure(
    path: Path | str,
    stack: ShadowStack,
    outline: OutlinePoints,
    tri: Triangulation,
    result: SegmentationResult,
    label_map: np.ndarray,
) -> None:
    """Mean mask, outline points, and colored segments side by side."""
    mean_mask = np.mean([m.astype(np.float64) for m in stack.masks], axis=0)
    colors = label_colors(result.segment_count)
    seg_rgb = np.zeros(label_map.shape + (3,))
    nz = label_map > 0
    seg_rgb[nz] = colors[label_map[nz] - 1]

    fig, axes = plt.subplots(1, 3, figsize=(13, 4.6))
    axes[0].imshow(mean_mask, cmap="gray", vmin=0, vmax=1, interpolation="nearest")
    axes[0].set_title(f"mean of {len(stack)} masks")
    axes[1].imshow(mean_mask, cmap="gray", vmin=0, vmax=1, interpolation="nearest")
    if len(outline):
        axes[1].plot(outline.points[:, 0], outline.points[:, 1], ".", ms=1.2, color="tab:red")
    axes[1].set_title(f"{len(outline)} outline points")
    axes[2].imshow(seg_rgb, interpolation="nearest")
    axes[2].set_title(f"{result.segment_count} segments ({tri.n_triangles} triangles)")
    for ax in axes:
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_strength_figure(path: Path | str, field: EdgeField) -> None:
    """Edge strength heat map with validity masked out."""
    g = np.ma.masked_where(~field.valid, field.strength)
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    im = ax.imshow(g, cmap="magma", vmin=0, vmax=1, interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.8, label="edge strength")
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
