"""Local HTTP API for interactive kappa control and segment refinement.

One session at a time. The triangulation and its dual edges are loaded
once from a project directory (the output of ``shadowseg run``) and
never mutated; re-segmentation replays the fusion on the cached,
pre-sorted edge list. Manual edits are segment merges (stored as
representative triangle ids so they survive kappa changes) and barriers
(dual edges forbidden to fuse, which also blocks the undersized-segment
cleanup across them).

Endpoints (JSON unless noted):

===========================  ==================================================
``POST /api/session``        body ``{"dir": <project dir>}``; loads a project
``GET  /api/status``         ``{loaded, revision, ...counts}``
``GET  /api/mesh``           vertices, triangles, dual edges (with ids)
``GET  /api/segmentation``   labels + stats; ``?rev=N`` short-circuits to
                             ``{"revision": N, "unchanged": true}`` when stale
``POST /api/resegment``      body ``{"kappa": f, "a_min": f}``; returns summary
``POST /api/merge``          body ``{"a": id, "b": id}`` (segment ids)
``POST /api/barrier``        body ``{"edge_id": id}``; toggles membership
``GET  /api/export``         16-bit label PNG; ``?what=sidecar`` for the text
``GET  /``                   static UI assets
===========================  ==================================================
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from shadowseg.pipeline import RunManifest
from shadowseg.segmentation import (
    SegmentForest,
    SegmentationResult,
    compact_labels,
    encode_label_png,
    enforce_min_area,
    rasterize_labels,
    run_fusion,
    sidecar_text,
    sort_edges_for_fusion,
)
from shadowseg.triangulation import DualEdge, Triangulation, dual_edges, load_off


class ServiceError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        super().__init__(message)


class SessionNotLoaded(ServiceError):
    def __init__(self):
        super().__init__(409, "no project loaded")


@dataclass
class _Project:
    tri: Triangulation
    edges: list[DualEdge]  # canonical id order
    edges_sorted: list[DualEdge]  # fusion order, sorted once at load
    areas: list[float]  # per-triangle, cached for fast forest setup
    min_sides: list[float]
    width: int
    height: int


class SessionState:
    """All mutable state of the single service session."""

    def __init__(self):
        self._lock = threading.Lock()
        self.project: _Project | None = None
        self.kappa = 1.0
        self.a_min = 64.0
        self.manual_merges: list[tuple[int, int]] = []  # representative triangle ids
        self.barriers: set[int] = set()  # dual edge ids
        self.result: SegmentationResult | None = None
        self.revision = 0

    # -- loading ------------------------------------------------------------

    def load_project(self, project_dir: Path | str) -> dict:
        project_dir = Path(project_dir)
        mesh_path = project_dir / "mesh.off"
        manifest_path = project_dir / "manifest.txt"
        if not mesh_path.is_file() or not manifest_path.is_file():
            raise ServiceError(400, f"{project_dir} is not a run output (mesh.off + manifest.txt)")
        tri = load_off(mesh_path)
        manifest = RunManifest.from_text(manifest_path.read_text())
        edges = dual_edges(tri)
        with self._lock:
            self.project = _Project(
                tri=tri,
                edges=edges,
                edges_sorted=sort_edges_for_fusion(edges),
                areas=[float(a) for a in tri.triangle_areas()],
                min_sides=[float(m) for m in tri.triangle_min_sides()],
                width=manifest.counts.get("width", 0),
                height=manifest.counts.get("height", 0),
            )
            self.kappa = float(manifest.config.get("kappa", 1.0))
            self.a_min = float(manifest.config.get("a_min", 64.0))
            self.manual_merges = []
            self.barriers = set()
            self.revision += 1
            self._resegment_locked()
            return self._status_locked()

    # -- queries ------------------------------------------------------------

    def status(self) -> dict:
        with self._lock:
            return self._status_locked()

    def _status_locked(self) -> dict:
        if self.project is None:
            return {"loaded": False, "revision": self.revision}
        return {
            "loaded": True,
            "revision": self.revision,
            "kappa": self.kappa,
            "a_min": self.a_min,
            "triangles": self.project.tri.n_triangles,
            "dual_edges": len(self.project.edges),
            "segments": self.result.segment_count if self.result else 0,
            "barriers": sorted(self.barriers),
            "manual_merges": len(self.manual_merges),
        }

    def mesh_payload(self) -> dict:
        with self._lock:
            p = self._require_project()
            return {
                "vertices": p.tri.vertices.tolist(),
                "triangles": p.tri.triangles.tolist(),
                "dual_edges": [
                    {
                        "id": e.edge_id,
                        "t1": e.t1,
                        "t2": e.t2,
                        "length": e.length,
                        "v1": e.vertices[0],
                        "v2": e.vertices[1],
                    }
                    for e in p.edges
                ],
                "width": p.width,
                "height": p.height,
            }

    def segmentation_payload(self, known_rev: int | None = None) -> dict:
        with self._lock:
            self._require_project()
            assert self.result is not None
            if known_rev is not None and known_rev == self.revision:
                return {"revision": self.revision, "unchanged": True}
            return {
                "revision": self.revision,
                "segment_count": self.result.segment_count,
                "labels": self.result.labels.tolist(),
                "areas": self.result.areas.tolist(),
                "member_counts": self.result.member_counts.tolist(),
                "kappa": self.result.kappa,
                "a_min": self.result.a_min,
                "barriers": sorted(self.barriers),
            }

    # -- mutations ----------------------------------------------------------

    def resegment(self, kappa: float | None = None, a_min: float | None = None) -> dict:
        with self._lock:
            self._require_project()
            if kappa is not None:
                if kappa <= 0:
                    raise ServiceError(400, f"kappa must be positive, got {kappa}")
                self.kappa = float(kappa)
            if a_min is not None:
                if a_min < 0:
                    raise ServiceError(400, f"a_min must be >= 0, got {a_min}")
                self.a_min = float(a_min)
            self.revision += 1
            self._resegment_locked()
            assert self.result is not None
            return {
                "revision": self.revision,
                "segment_count": self.result.segment_count,
                "areas": self.result.areas.tolist(),
                "kappa": self.kappa,
                "a_min": self.a_min,
            }

    def merge_segments(self, seg_a: int, seg_b: int) -> dict:
        with self._lock:
            self._require_project()
            assert self.result is not None
            k = self.result.segment_count
            for seg in (seg_a, seg_b):
                if not 0 <= seg < k:
                    raise ServiceError(404, f"unknown segment id {seg}")
            if seg_a == seg_b:
                return {"revision": self.revision, "merged": False}
            # store the lowest member triangle of each side; those ids
            # remap onto whatever segmentation is current later
            labels = self.result.labels
            tri_a = int(np.nonzero(labels == seg_a)[0][0])
            tri_b = int(np.nonzero(labels == seg_b)[0][0])
            self.manual_merges.append((tri_a, tri_b))
            self.revision += 1
            self._resegment_locked()
            return {"revision": self.revision, "merged": True}

    def toggle_barrier(self, edge_id: int) -> dict:
        with self._lock:
            p = self._require_project()
            if not 0 <= edge_id < len(p.edges):
                raise ServiceError(404, f"unknown dual edge id {edge_id}")
            if edge_id in self.barriers:
                self.barriers.remove(edge_id)
                barred = False
            else:
                self.barriers.add(edge_id)
                barred = True
            self.revision += 1
            self._resegment_locked()
            return {"revision": self.revision, "edge_id": edge_id, "barred": barred}

    # -- export ---------------------------------------------------------------

    def export_png(self) -> bytes:
        with self._lock:
            p = self._require_project()
            if self.result is None:
                raise ServiceError(409, "nothing to export")
            label_map = rasterize_labels(p.tri, self.result, p.width, p.height)
            return encode_label_png(label_map)

    def export_sidecar(self) -> str:
        with self._lock:
            self._require_project()
            if self.result is None:
                raise ServiceError(409, "nothing to export")
            return sidecar_text(self.result)

    # -- internals ------------------------------------------------------------

    def _require_project(self) -> _Project:
        if self.project is None:
            raise SessionNotLoaded()
        return self.project

    def _resegment_locked(self) -> None:
        """Replay fusion on the cached sorted edges, then manual merges."""
        p = self.project
        assert p is not None
        if self.barriers:
            edges = [e for e in p.edges_sorted if e.edge_id not in self.barriers]
        else:
            edges = p.edges_sorted
        forest = SegmentForest(p.areas, p.min_sides)
        run_fusion(forest, edges, self.kappa, self.a_min)
        enforce_min_area(forest, edges, self.a_min)
        for tri_a, tri_b in self.manual_merges:
            forest.union(tri_a, tri_b, float("inf"))
        self.result = compact_labels(forest, self.kappa, self.a_min)


# --- HTTP layer ---------------------------------------------------------------

_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>shadowseg</title></head>
<body><h1>shadowseg service</h1>
<p>No UI assets configured. The JSON API lives under <code>/api/</code>:
status, mesh, segmentation, resegment, merge, barrier, export.</p>
</body></html>
"""

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".map": "application/json",
    ".ico": "image/x-icon",
}


class _Handler(BaseHTTPRequestHandler):
    server: "ShadowsegServer"

    # quiet request logging; tests and CLI read stdout
    def log_message(self, fmt, *args):  # noqa: A002
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_bytes(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        try:
            data = json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ServiceError(400, f"invalid JSON body: {exc}") from exc
        if not isinstance(data, dict):
            raise ServiceError(400, "JSON body must be an object")
        return data

    def do_GET(self) -> None:  # noqa: N802
        url = urlparse(self.path)
        state = self.server.state
        try:
            if url.path == "/api/status":
                self._send_json(200, state.status())
            elif url.path == "/api/mesh":
                self._send_json(200, state.mesh_payload())
            elif url.path == "/api/segmentation":
                qs = parse_qs(url.query)
                rev = int(qs["rev"][0]) if "rev" in qs else None
                self._send_json(200, state.segmentation_payload(rev))
            elif url.path == "/api/export":
                qs = parse_qs(url.query)
                if qs.get("what", [""])[0] == "sidecar":
                    body = state.export_sidecar().encode("utf-8")
                    self._send_bytes(200, body, "text/tab-separated-values; charset=utf-8")
                else:
                    self._send_bytes(200, state.export_png(), "image/png")
            elif url.path.startswith("/api/"):
                self._send_json(404, {"error": f"unknown endpoint {url.path}"})
            else:
                self._serve_static(url.path)
        except ServiceError as exc:
            self._send_json(exc.status, {"error": str(exc)})

    def do_POST(self) -> None:  # noqa: N802
        url = urlparse(self.path)
        state = self.server.state
        try:
            body = self._read_json()
            if url.path == "/api/session":
                if "dir" not in body:
                    raise ServiceError(400, "missing 'dir'")
                self._send_json(200, state.load_project(body["dir"]))
            elif url.path == "/api/resegment":
                self._send_json(
                    200,
                    state.resegment(
                        kappa=_opt_float(body, "kappa"), a_min=_opt_float(body, "a_min")
                    ),
                )
            elif url.path == "/api/merge":
                self._send_json(200, state.merge_segments(_req_int(body, "a"), _req_int(body, "b")))
            elif url.path == "/api/barrier":
                self._send_json(200, state.toggle_barrier(_req_int(body, "edge_id")))
            else:
                self._send_json(404, {"error": f"unknown endpoint {url.path}"})
        except ServiceError as exc:
            self._send_json(exc.status, {"error": str(exc)})

    def _serve_static(self, path: str) -> None:
        assets = self.server.assets_dir
        if path in ("", "/"):
            path = "/index.html"
        if assets is None:
            if path == "/index.html":
                self._send_bytes(200, _FALLBACK_PAGE.encode("utf-8"), _CONTENT_TYPES[".html"])
            else:
                self._send_bytes(404, b"not found", "text/plain")
            return
        target = (assets / path.lstrip("/")).resolve()
        if not str(target).startswith(str(assets.resolve())) or not target.is_file():
            self._send_bytes(404, b"not found", "text/plain")
            return
        ctype = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self._send_bytes(200, target.read_bytes(), ctype)


def _opt_float(body: dict, key: str) -> float | None:
    if key not in body or body[key] is None:
        return None
    try:
        return float(body[key])
    except (TypeError, ValueError) as exc:
        raise ServiceError(400, f"{key} must be a number") from exc


def _req_int(body: dict, key: str) -> int:
    if key not in body:
        raise ServiceError(400, f"missing '{key}'")
    try:
        return int(body[key])
    except (TypeError, ValueError) as exc:
        raise ServiceError(400, f"{key} must be an integer") from exc


class ShadowsegServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], state: SessionState, assets_dir: Path | None):
        self.state = state
        self.assets_dir = assets_dir
        super().__init__(address, _Handler)


def make_server(
    host: str = "127.0.0.1",
    port: int = 0,
    state: SessionState | None = None,
    assets_dir: Path | str | None = None,
) -> ShadowsegServer:
    """Bind the service; ``port=0`` picks an ephemeral port.

    Raises OSError (EADDRINUSE) when the port is taken.
    """
    if assets_dir is not None:
        assets_dir = Path(assets_dir)
        index = assets_dir / "index.html"
        if not index.is_file():
            raise ServiceError(400, f"static asset path {assets_dir} has no index.html")
    return ShadowsegServer((host, port), state or SessionState(), assets_dir)
