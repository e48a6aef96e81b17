"""Delaunay triangulation of outline points and its dual adjacency graph.

Incremental insertion (Bowyer-Watson) with a far super-triangle. Points
are deduplicated and sorted lexicographically before insertion, which
makes the construction, and the cocircular tie-break below, independent
of the input order. Vertices of the result are stored in that sorted
order.

Predicates use float64 determinants with an exact rational fallback when
the float value is not trustworthy. An in-circle determinant of
magnitude below 1e-9 counts as cocircular; cocircular quads resolve by
preferring the diagonal incident to the lowest vertex index.

Orientation convention: triangles are stored counter-clockwise in the
sense of positive signed area of the (x, y) coordinates as given (with
image axes y-down this looks clockwise on screen).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

COCIRCULAR_TOL = 1e-9
ORIENT_TOL = 1e-9
MERGE_TOL = 1e-9
_SUPER_SCALE = 4096.0


class TriangulationError(ValueError):
    """Invalid input to the triangulation stage."""


@dataclass(frozen=True)
class DualEdge:
    """Adjacency of two triangles, weighted by their shared edge length."""

    edge_id: int
    t1: int
    t2: int
    length: float  # Euclidean length of the shared primal edge, pixels
    vertices: tuple[int, int]  # shared primal edge as vertex indices

    def __post_init__(self) -> None:
        if self.t1 == self.t2:
            raise TriangulationError("dual edge must join distinct triangles")
        if self.length <= 0:
            raise TriangulationError("dual edge length must be positive")


@dataclass(frozen=True)
class Triangulation:
    """Vertices, CCW triangles, and per-edge neighbor links.

    ``neighbors[t, j]`` is the triangle across edge j of triangle t,
    where edge j joins vertices ``triangles[t, j]`` and
    ``triangles[t, (j + 1) % 3]``; -1 marks a hull edge.
    """

    vertices: np.ndarray  # (n, 2) float64
    triangles: np.ndarray  # (T, 3) int64, CCW
    neighbors: np.ndarray  # (T, 3) int64, -1 for none
    diagnostics: tuple[str, ...] = field(default=())

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_points(self) -> np.ndarray:
        """(T, 3, 2) coordinates of the triangle corners."""
        return self.vertices[self.triangles]

    def triangle_areas(self) -> np.ndarray:
        p = self.triangle_points()
        ab = p[:, 1] - p[:, 0]
        ac = p[:, 2] - p[:, 0]
        return 0.5 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])

    def triangle_min_sides(self) -> np.ndarray:
        p = self.triangle_points()
        sides = np.stack(
            [
                np.hypot(*(p[:, 1] - p[:, 0]).T),
                np.hypot(*(p[:, 2] - p[:, 1]).T),
                np.hypot(*(p[:, 0] - p[:, 2]).T),
            ]
        )
        return sides.min(axis=0)

    def circumcenters(self) -> tuple[np.ndarray, np.ndarray]:
        """Circumcenters and circumradii of all triangles."""
        p = self.triangle_points()
        ax, ay = p[:, 0, 0], p[:, 0, 1]
        bx, by = p[:, 1, 0], p[:, 1, 1]
        cx, cy = p[:, 2, 0], p[:, 2, 1]
        d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
        d = np.where(d == 0, np.finfo(np.float64).tiny, d)
        a2 = ax * ax + ay * ay
        b2 = bx * bx + by * by
        c2 = cx * cx + cy * cy
        ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
        uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
        centers = np.column_stack([ux, uy])
        radii = np.hypot(ux - ax, uy - ay)
        return centers, radii


# --- predicates -------------------------------------------------------------

def _orient_value(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _orient_exact(ax, ay, bx, by, cx, cy) -> int:
    v = (Fraction(bx) - Fraction(ax)) * (Fraction(cy) - Fraction(ay)) - (
        Fraction(by) - Fraction(ay)
    ) * (Fraction(cx) - Fraction(ax))
    return (v > 0) - (v < 0)


def orient_sign(ax, ay, bx, by, cx, cy) -> int:
    """Sign of twice the signed area of (a, b, c); 0 within tolerance."""
    det = _orient_value(ax, ay, bx, by, cx, cy)
    # error bound ~ eps * sum of |term| magnitudes
    perm = abs((bx - ax) * (cy - ay)) + abs((by - ay) * (cx - ax))
    if abs(det) >= max(ORIENT_TOL, 4e-16 * perm):
        return 1 if det > 0 else -1
    s = _orient_exact(ax, ay, bx, by, cx, cy)
    if s == 0:
        return 0
    if abs(det) < ORIENT_TOL and perm < 1.0 / ORIENT_TOL:
        # well-conditioned but tiny: collinear within tolerance
        return 0
    return s


def incircle_sign(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    """+1 if d lies strictly inside the circumcircle of CCW (a, b, c),
    -1 if strictly outside, 0 if cocircular (|det| < 1e-9 or exactly 0)."""
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    bc = bdx * cdy - cdx * bdy
    ca = cdx * ady - adx * cdy
    ab = adx * bdy - bdx * ady
    det = alift * bc + blift * ca + clift * ab
    perm = (
        alift * (abs(bdx * cdy) + abs(cdx * bdy))
        + blift * (abs(cdx * ady) + abs(adx * cdy))
        + clift * (abs(adx * bdy) + abs(bdx * ady))
    )
    if abs(det) >= max(COCIRCULAR_TOL, 2e-15 * perm):
        return 1 if det > 0 else -1
    # unreliable or tiny: decide exactly
    fadx, fady = Fraction(ax) - Fraction(dx), Fraction(ay) - Fraction(dy)
    fbdx, fbdy = Fraction(bx) - Fraction(dx), Fraction(by) - Fraction(dy)
    fcdx, fcdy = Fraction(cx) - Fraction(dx), Fraction(cy) - Fraction(dy)
    fdet = (
        (fadx * fadx + fady * fady) * (fbdx * fcdy - fcdx * fbdy)
        + (fbdx * fbdx + fbdy * fbdy) * (fcdx * fady - fadx * fcdy)
        + (fcdx * fcdx + fcdy * fcdy) * (fadx * fbdy - fbdx * fady)
    )
    if fdet == 0 or abs(fdet) < Fraction(COCIRCULAR_TOL):
        return 0
    return 1 if fdet > 0 else -1


# --- construction -----------------------------------------------------------

def merge_close_points(points: np.ndarray, tol: float = MERGE_TOL) -> np.ndarray:
    """Sort points lexicographically and drop near-duplicates (< tol apart)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    kept: list[np.ndarray] = []
    # after x-sort, a duplicate can only hide among trailing kept points
    # whose x is within tol
    for p in pts:
        dup = False
        for q in reversed(kept):
            if p[0] - q[0] > tol:
                break
            if abs(p[1] - q[1]) <= tol and np.hypot(p[0] - q[0], p[1] - q[1]) < tol:
                dup = True
                break
        if not dup:
            kept.append(p)
    return np.array(kept, dtype=np.float64).reshape(-1, 2)


class _Mesh:
    """Mutable triangle soup used during incremental insertion."""

    def __init__(self, verts: np.ndarray):
        self.verts = verts  # includes 3 super vertices at the end
        self.tri: list[list[int]] = []
        self.nbr: list[list[int]] = []
        self.alive: list[bool] = []

    def add(self, a: int, b: int, c: int) -> int:
        self.tri.append([a, b, c])
        self.nbr.append([-1, -1, -1])
        self.alive.append(True)
        return len(self.tri) - 1

    def orient(self, a: int, b: int, c: int) -> int:
        pa, pb, pc = self.verts[a], self.verts[b], self.verts[c]
        return orient_sign(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1])


def _locate(mesh: _Mesh, px: float, py: float, hint: int) -> int:
    """Walk from hint to a triangle containing (px, py)."""
    t = hint
    visited = 0
    limit = 4 * len(mesh.tri) + 16
    while visited < limit:
        visited += 1
        if not mesh.alive[t]:
            t = next(i for i in range(len(mesh.tri) - 1, -1, -1) if mesh.alive[i])
            continue
        a, b, c = mesh.tri[t]
        moved = False
        for j, (u, v) in enumerate(((a, b), (b, c), (c, a))):
            pu, pv = mesh.verts[u], mesh.verts[v]
            if _orient_value(pu[0], pu[1], pv[0], pv[1], px, py) < -ORIENT_TOL:
                n = mesh.nbr[t][j]
                if n != -1:
                    t = n
                    moved = True
                    break
        if not moved:
            return t
    # numerical stalemate: fall back to a linear scan
    for i in range(len(mesh.tri)):
        if not mesh.alive[i]:
            continue
        a, b, c = mesh.tri[i]
        pa, pb, pc = mesh.verts[a], mesh.verts[b], mesh.verts[c]
        if (
            _orient_value(pa[0], pa[1], pb[0], pb[1], px, py) >= -ORIENT_TOL
            and _orient_value(pb[0], pb[1], pc[0], pc[1], px, py) >= -ORIENT_TOL
            and _orient_value(pc[0], pc[1], pa[0], pa[1], px, py) >= -ORIENT_TOL
        ):
            return i
    raise TriangulationError("point location failed")


def _in_cavity(mesh: _Mesh, t: int, p: int, shared: tuple[int, int]) -> bool:
    """Does triangle t join the cavity of the point being inserted?

    Strictly-inside circumcircles always join. Cocircular cases resolve
    by the diagonal rule: with shared edge (a, b) and opposite vertex c,
    t joins iff min(p, c) < min(a, b), i.e. the diagonal incident to the
    lowest vertex index wins.
    """
    a, b, c = mesh.tri[t]
    pa, pb, pc = mesh.verts[a], mesh.verts[b], mesh.verts[c]
    pp = mesh.verts[p]
    s = incircle_sign(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1], pp[0], pp[1])
    if s != 0:
        return s > 0
    opp = next(v for v in (a, b, c) if v not in shared)
    return min(p, opp) < min(shared)


def _insert(mesh: _Mesh, p: int, hint: int) -> int:
    px, py = mesh.verts[p]
    seed = _locate(mesh, px, py, hint)

    # grow the cavity by BFS over edge-adjacent bad triangles
    cavity = {seed}
    queue = [seed]
    while queue:
        t = queue.pop()
        a, b, c = mesh.tri[t]
        for j, (u, v) in enumerate(((a, b), (b, c), (c, a))):
            n = mesh.nbr[t][j]
            if n == -1 or n in cavity:
                continue
            if _in_cavity(mesh, n, p, (u, v)):
                cavity.add(n)
                queue.append(n)

    # boundary: directed edges of cavity triangles whose neighbor is outside
    boundary: list[tuple[int, int, int]] = []  # (u, v, outside-neighbor)
    for t in sorted(cavity):
        a, b, c = mesh.tri[t]
        for j, (u, v) in enumerate(((a, b), (b, c), (c, a))):
            n = mesh.nbr[t][j]
            if n == -1 or n not in cavity:
                boundary.append((u, v, n))
        mesh.alive[t] = False

    # fan p to every boundary edge; link the fan together afterwards
    edge_owner: dict[tuple[int, int], int] = {}
    new_ids = []
    for u, v, outside in boundary:
        nt = mesh.add(p, u, v)
        new_ids.append(nt)
        mesh.nbr[nt][1] = outside  # edge (u, v)
        if outside != -1:
            on = mesh.nbr[outside]
            oa, ob, oc = mesh.tri[outside]
            for j, (x, y) in enumerate(((oa, ob), (ob, oc), (oc, oa))):
                if (x, y) == (v, u):
                    on[j] = nt
                    break
        edge_owner[(p, u)] = nt
        edge_owner[(v, p)] = nt
    for nt in new_ids:
        tp, tu, tv = mesh.tri[nt]
        mesh.nbr[nt][0] = edge_owner.get((tu, tp), -1)  # twin of (p, u)
        mesh.nbr[nt][2] = edge_owner.get((tp, tv), -1)  # twin of (v, p)
    return new_ids[-1]


def delaunay(points: np.ndarray) -> Triangulation:
    """Delaunay triangulation of a 2D point set.

    Near-duplicate points (closer than 1e-9) are merged first. A fully
    collinear input yields an empty triangulation carrying a diagnostic.
    """
    pts = merge_close_points(points)
    if len(pts) < 3:
        raise TriangulationError(f"need at least 3 distinct points, got {len(pts)}")

    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = (lo + hi) / 2.0
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1.0))
    r = _SUPER_SCALE * span
    n = len(pts)
    super_pts = np.array(
        [
            [center[0] - 2.0 * r, center[1] - r],
            [center[0] + 2.0 * r, center[1] - r],
            [center[0], center[1] + 2.0 * r],
        ]
    )
    mesh = _Mesh(np.vstack([pts, super_pts]))
    s0, s1, s2 = n, n + 1, n + 2
    if mesh.orient(s0, s1, s2) <= 0:
        s1, s2 = s2, s1
    hint = mesh.add(s0, s1, s2)

    for p in range(n):  # lexicographic order by construction
        hint = _insert(mesh, p, hint)

    tris = []
    for t in range(len(mesh.tri)):
        if not mesh.alive[t]:
            continue
        a, b, c = mesh.tri[t]
        if a >= n or b >= n or c >= n:
            continue
        # canonical rotation: smallest vertex first, CCW order preserved
        if b == min(a, b, c):
            a, b, c = b, c, a
        elif c == min(a, b, c):
            a, b, c = c, a, b
        tris.append((a, b, c))
    tris.sort()

    diagnostics: tuple[str, ...] = ()
    if not tris:
        diagnostics = ("all points collinear: empty triangulation",)
        return Triangulation(
            vertices=pts,
            triangles=np.empty((0, 3), dtype=np.int64),
            neighbors=np.empty((0, 3), dtype=np.int64),
            diagnostics=diagnostics,
        )

    triangles = np.array(tris, dtype=np.int64)
    return Triangulation(
        vertices=pts,
        triangles=triangles,
        neighbors=_build_neighbors(triangles),
        diagnostics=diagnostics,
    )


def _build_neighbors(triangles: np.ndarray) -> np.ndarray:
    owner: dict[tuple[int, int], tuple[int, int]] = {}
    neighbors = np.full(triangles.shape, -1, dtype=np.int64)
    for t, (a, b, c) in enumerate(triangles):
        for j, (u, v) in enumerate(((a, b), (b, c), (c, a))):
            key = (min(u, v), max(u, v))
            if key in owner:
                ot, oj = owner.pop(key)
                neighbors[t, j] = ot
                neighbors[ot, oj] = t
            else:
                owner[key] = (t, j)
    return neighbors


def with_triangles(tri: Triangulation, keep: np.ndarray) -> Triangulation:
    """Triangulation restricted to a boolean subset of triangles."""
    triangles = tri.triangles[keep]
    return Triangulation(
        vertices=tri.vertices,
        triangles=triangles,
        neighbors=_build_neighbors(triangles),
        diagnostics=tri.diagnostics,
    )


def prune_background(tri: Triangulation, cfg) -> Triangulation:
    """Drop triangles covering the image background.

    A triangle goes iff the configured foreground mask is background at
    its centroid, or its circumradius exceeds ``prune_alpha``. With
    neither configured this is the identity. Adjacency is rebuilt.
    """
    if tri.n_triangles == 0:
        return tri
    keep = np.ones(tri.n_triangles, dtype=bool)
    if cfg.foreground_mask is not None:
        mask = cfg.foreground_mask
        h, w = mask.shape
        centroids = tri.triangle_points().mean(axis=1)
        cx = np.rint(centroids[:, 0]).astype(int)
        cy = np.rint(centroids[:, 1]).astype(int)
        inside = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
        fg = np.zeros(tri.n_triangles, dtype=bool)
        fg[inside] = mask[cy[inside], cx[inside]] > 0
        keep &= fg
    if cfg.prune_alpha is not None:
        _, radii = tri.circumcenters()
        keep &= radii <= cfg.prune_alpha
    if keep.all():
        return tri
    return with_triangles(tri, keep)


def dual_edges(tri: Triangulation) -> list[DualEdge]:
    """One dual edge per interior primal edge, ordered by (t1, t2).

    ``edge_id`` is the position in this canonical order.
    """
    edges = []
    for t in range(tri.n_triangles):
        a, b, c = tri.triangles[t]
        for j, (u, v) in enumerate(((a, b), (b, c), (c, a))):
            n = int(tri.neighbors[t, j])
            if n > t:
                pu, pv = tri.vertices[u], tri.vertices[v]
                length = float(np.hypot(pu[0] - pv[0], pu[1] - pv[1]))
                edges.append((t, n, length, (int(min(u, v)), int(max(u, v)))))
    edges.sort(key=lambda e: (e[0], e[1]))
    return [
        DualEdge(edge_id=i, t1=t1, t2=t2, length=length, vertices=verts)
        for i, (t1, t2, length, verts) in enumerate(edges)
    ]


def save_off(path: Path | str, tri: Triangulation) -> None:
    """Write the mesh as 2D OFF (z = 0), full float precision."""
    lines = ["OFF", f"{len(tri.vertices)} {tri.n_triangles} 0"]
    for x, y in tri.vertices:
        lines.append(f"{float(x)!r} {float(y)!r} 0")
    for a, b, c in tri.triangles:
        lines.append(f"3 {a} {b} {c}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_off(path: Path | str) -> Triangulation:
    """Read a mesh written by :func:`save_off`; adjacency is rebuilt."""
    tokens = Path(path).read_text().split()
    if not tokens or tokens[0] != "OFF":
        raise TriangulationError(f"{path}: not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.empty((nv, 2), dtype=np.float64)
    for i in range(nv):
        verts[i] = (float(tokens[pos]), float(tokens[pos + 1]))
        pos += 3
    tris = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        if tokens[pos] != "3":
            raise TriangulationError(f"{path}: non-triangle face")
        tris[i] = (int(tokens[pos + 1]), int(tokens[pos + 2]), int(tokens[pos + 3]))
        pos += 4
    return Triangulation(vertices=verts, triangles=tris, neighbors=_build_neighbors(tris))
