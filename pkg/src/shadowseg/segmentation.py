"""Greedy fusion of triangles into segments.

Dual edges are processed in non-increasing order of their primal edge
length (ties by ascending triangle-id pair). The aspect ratio of a
segment S is (|S| - A_min) / min_edge(S), where min_edge is the
shortest dual edge fused into S so far; an isolated triangle has no
fused edges yet and falls back to its own shortest side. An edge e
fuses its two segments iff |e| > kappa * min(l_S, l_S'). Segments
smaller than A_min keep a negative ratio, which makes any edge fuse
them. A final pass merges leftover undersized segments into the
neighbor with the longest shared boundary.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from shadowseg.triangulation import DualEdge, Triangulation, dual_edges

ORIENT_TOL = 1e-9
_NO_EDGE = math.inf


class SegmentForest:
    """Union-find over triangles with per-root area and shortest fused edge.

    ``min_edge`` tracks the shortest edge a segment was fused along and
    never increases under fusion; fresh singletons carry no edge and
    their aspect ratio uses the triangle's shortest side instead.
    """

    def __init__(self, areas, min_sides):
        n = len(areas)
        self.parent = list(range(n))
        self.size = [1] * n
        self.area = [float(a) for a in areas]
        self.min_edge = [_NO_EDGE] * n  # shortest fused dual edge per root
        self.side_min = [float(m) for m in min_sides]

    def __len__(self) -> int:
        return len(self.parent)

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int, edge_length: float) -> int:
        """Fuse the segments of a and b across an edge of the given length.

        Returns the new root. Union by size; equal sizes keep the lower
        root id as representative.
        """
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb] or (self.size[ra] == self.size[rb] and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.area[ra] += self.area[rb]
        self.min_edge[ra] = min(self.min_edge[ra], self.min_edge[rb], edge_length)
        return ra

    def aspect_ratio(self, root: int, a_min: float) -> float:
        """(|S| - A_min) / min_edge(S); negative while |S| < A_min."""
        m = self.min_edge[root]
        if m == _NO_EDGE:
            m = self.side_min[root]
        return (self.area[root] - a_min) / m

    def roots(self) -> list[int]:
        return [i for i in range(len(self.parent)) if self.find(i) == i]

    @classmethod
    def from_triangulation(cls, tri: Triangulation) -> "SegmentForest":
        return cls(tri.triangle_areas(), tri.triangle_min_sides())


@dataclass(frozen=True)
class SegmentationResult:
    """Per-triangle labels compacted to 0..k-1, plus segment statistics."""

    labels: np.ndarray  # (T,) int64
    segment_count: int
    areas: np.ndarray  # (k,) float64
    member_counts: np.ndarray  # (k,) int64
    kappa: float
    a_min: float


def sort_edges_for_fusion(edges: list[DualEdge]) -> list[DualEdge]:
    """Non-increasing length; ties by ascending (t1, t2)."""
    return sorted(edges, key=lambda e: (-e.length, e.t1, e.t2))


def segment(
    tri: Triangulation,
    kappa: float,
    a_min: float,
    *,
    edges: list[DualEdge] | None = None,
    presorted: bool = False,
    trace: list | None = None,
) -> SegmentationResult:
    """Run the full fusion pass and return compacted labels.

    ``edges`` may pass a filtered dual-edge list (e.g. with barriers
    removed); by default all dual edges of ``tri`` are used. With
    ``presorted`` the caller guarantees fusion order. ``trace``, if
    given, collects one (t1, t2, length, fused, area, min_edge) tuple
    per processed edge, the last two describing the merged segment (None
    when not fused).
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if a_min < 0:
        raise ValueError(f"a_min must be >= 0, got {a_min}")
    if edges is None:
        edges = dual_edges(tri)
    if not presorted:
        edges = sort_edges_for_fusion(edges)

    forest = SegmentForest.from_triangulation(tri)
    run_fusion(forest, edges, kappa, a_min, trace=trace)
    enforce_min_area(forest, edges, a_min)
    return compact_labels(forest, kappa, a_min)


def run_fusion(
    forest: SegmentForest,
    edges: list[DualEdge],
    kappa: float,
    a_min: float,
    *,
    trace: list | None = None,
) -> None:
    """Main fusion pass over presorted edges (hot path, kept lean)."""
    find = forest.find
    area = forest.area
    min_edge = forest.min_edge
    side_min = forest.side_min
    inf = _NO_EDGE
    for e in edges:
        ra = find(e.t1)
        rb = find(e.t2)
        if ra == rb:
            if trace is not None:
                trace.append((e.t1, e.t2, e.length, False, None, None))
            continue
        ma = min_edge[ra]
        mb = min_edge[rb]
        la = (area[ra] - a_min) / (side_min[ra] if ma == inf else ma)
        lb = (area[rb] - a_min) / (side_min[rb] if mb == inf else mb)
        fuse = e.length > kappa * (la if la < lb else lb)
        if fuse:
            root = forest.union(ra, rb, e.length)
            if trace is not None:
                trace.append((e.t1, e.t2, e.length, True, area[root], min_edge[root]))
        elif trace is not None:
            trace.append((e.t1, e.t2, e.length, False, None, None))


def enforce_min_area(forest: SegmentForest, edges: list[DualEdge], a_min: float) -> SegmentForest:
    """Fuse undersized segments into their best-connected neighbor.

    Repeatedly takes the smallest-area root below ``a_min`` (ties by
    root id) and fuses it into the neighbor sharing the greatest total
    primal boundary length (ties by lowest neighbor id), until every
    segment is large enough or has no neighbor left.
    """
    if a_min <= 0:
        return forest
    find = forest.find

    # segment adjacency: root -> {neighbor root -> [total, shortest] shared length}
    boundary: dict[int, dict[int, list[float]]] = {}
    for e in edges:
        ra, rb = find(e.t1), find(e.t2)
        if ra == rb:
            continue
        for u, v in ((ra, rb), (rb, ra)):
            d = boundary.setdefault(u, {})
            if v in d:
                d[v][0] += e.length
                d[v][1] = min(d[v][1], e.length)
            else:
                d[v] = [e.length, e.length]

    def normalized(root: int) -> dict[int, list[float]]:
        """Re-aggregate a neighbor map through current roots."""
        out: dict[int, list[float]] = {}
        for r, (total, shortest) in boundary.get(root, {}).items():
            r = find(r)
            if r == root:
                continue
            if r in out:
                out[r][0] += total
                out[r][1] = min(out[r][1], shortest)
            else:
                out[r] = [total, shortest]
        boundary[root] = out
        return out

    heap = [(forest.area[r], r) for r in forest.roots() if forest.area[r] < a_min]
    heapq.heapify(heap)
    while heap:
        area, r = heapq.heappop(heap)
        if find(r) != r or forest.area[r] != area:
            continue  # stale entry
        if forest.area[r] >= a_min:
            continue
        nbrs = normalized(r)
        if not nbrs:
            continue  # whole connected component stays undersized
        target = max(nbrs.items(), key=lambda kv: (kv[1][0], -kv[0]))[0]
        shared_min = nbrs[target][1]
        merged_nbrs = normalized(target)
        # the internalized boundary's shortest edge enters min_edge,
        # same as a regular fusion along that edge
        root = forest.union(r, target, shared_min)
        # splice neighbor maps; shared boundary becomes interior
        combined: dict[int, list[float]] = {}
        for src in (nbrs, merged_nbrs):
            for n, (total, shortest) in src.items():
                n = find(n)
                if n == root:
                    continue
                if n in combined:
                    combined[n][0] += total
                    combined[n][1] = min(combined[n][1], shortest)
                else:
                    combined[n] = [total, shortest]
        boundary[root] = combined
        for dead in (r, target):
            if dead != root and dead in boundary:
                del boundary[dead]
        if forest.area[root] < a_min:
            heapq.heappush(heap, (forest.area[root], root))
    return forest


def compact_labels(forest: SegmentForest, kappa: float, a_min: float) -> SegmentationResult:
    """Labels in order of first appearance by triangle id."""
    n = len(forest)
    labels = np.empty(n, dtype=np.int64)
    label_of_root: dict[int, int] = {}
    areas: list[float] = []
    counts: list[int] = []
    for t in range(n):
        r = forest.find(t)
        lab = label_of_root.get(r)
        if lab is None:
            lab = len(areas)
            label_of_root[r] = lab
            areas.append(forest.area[r])
            counts.append(0)
        labels[t] = lab
        counts[lab] += 1
    return SegmentationResult(
        labels=labels,
        segment_count=len(areas),
        areas=np.array(areas, dtype=np.float64),
        member_counts=np.array(counts, dtype=np.int64),
        kappa=kappa,
        a_min=a_min,
    )


def rasterize_labels(
    tri: Triangulation, result: SegmentationResult, width: int, height: int
) -> np.ndarray:
    """Label map: pixel centers take their containing triangle's segment.

    Labels start at 1; pixels covered by no triangle keep the reserved
    background label 0. Pixels on shared edges (within the orientation
    tolerance) go to the lowest claiming triangle id.
    """
    out = np.zeros((height, width), dtype=np.uint16)
    if result.segment_count >= 65535:
        raise ValueError("too many segments for a 16-bit label map")
    pts = tri.triangle_points()
    for t in range(tri.n_triangles):
        (ax, ay), (bx, by), (cx, cy) = pts[t]
        x0 = max(int(np.ceil(min(ax, bx, cx) - 0.5)), 0)
        x1 = min(int(np.floor(max(ax, bx, cx) + 0.5)), width - 1)
        y0 = max(int(np.ceil(min(ay, by, cy) - 0.5)), 0)
        y1 = min(int(np.floor(max(ay, by, cy) + 0.5)), height - 1)
        if x1 < x0 or y1 < y0:
            continue
        xs = np.arange(x0, x1 + 1, dtype=np.float64)[None, :]
        ys = np.arange(y0, y1 + 1, dtype=np.float64)[:, None]
        e0 = (bx - ax) * (ys - ay) - (by - ay) * (xs - ax)
        e1 = (cx - bx) * (ys - by) - (cy - by) * (xs - bx)
        e2 = (ax - cx) * (ys - cy) - (ay - cy) * (xs - cx)
        inside = (e0 >= -ORIENT_TOL) & (e1 >= -ORIENT_TOL) & (e2 >= -ORIENT_TOL)
        window = out[y0 : y1 + 1, x0 : x1 + 1]
        claim = inside & (window == 0)
        window[claim] = result.labels[t] + 1
    return out


def save_labels(
    label_path: Path | str,
    sidecar_path: Path | str | None,
    label_map: np.ndarray,
    result: SegmentationResult,
) -> None:
    """Write the 16-bit grayscale label PNG and its per-segment sidecar."""
    png_bytes = encode_label_png(label_map)
    Path(label_path).write_bytes(png_bytes)
    if sidecar_path is not None:
        Path(sidecar_path).write_text(sidecar_text(result))


def encode_label_png(label_map: np.ndarray) -> bytes:
    import io

    img = Image.fromarray(label_map.astype(np.uint16))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def sidecar_text(result: SegmentationResult) -> str:
    lines = ["segment\tarea_px2\ttriangles"]
    for i in range(result.segment_count):
        lines.append(f"{i + 1}\t{result.areas[i]:.6f}\t{result.member_counts[i]}")
    return "\n".join(lines) + "\n"
