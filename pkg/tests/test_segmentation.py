import math

import numpy as np
import pytest

from conftest import bridge_fixture
from shadowseg.segmentation import (
    SegmentForest,
    enforce_min_area,
    rasterize_labels,
    run_fusion,
    segment,
    sort_edges_for_fusion,
)
from shadowseg.triangulation import DualEdge, delaunay, dual_edges

SQRT32 = math.sqrt(32.0)
SQRT40 = math.sqrt(40.0)
SQRT180 = math.sqrt(180.0)


def dual_components(tri, edges=None):
    parent = list(range(tri.n_triangles))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges if edges is not None else dual_edges(tri):
        parent[find(e.t1)] = find(e.t2)
    return len({find(t) for t in range(tri.n_triangles)})


class TestAspectRatio:
    def test_direct_evaluation(self):
        forest = SegmentForest(areas=[50.0, 50.0], min_sides=[1.0, 1.0])
        forest.union(0, 1, 4.0)
        root = forest.find(0)
        assert forest.aspect_ratio(root, 0.0) == 25.0  # (100 - 0) / 4

    def test_negative_below_a_min(self):
        forest = SegmentForest(areas=[5.0, 5.0], min_sides=[1.0, 1.0])
        forest.union(0, 1, 2.0)
        assert forest.aspect_ratio(forest.find(0), 64.0) == pytest.approx(-27.0)

    def test_singleton_falls_back_to_shortest_side(self):
        # right triangle with legs 3, 4: area 6, shortest side 3
        forest = SegmentForest(areas=[6.0], min_sides=[3.0])
        assert forest.aspect_ratio(0, 0.0) == pytest.approx(2.0)
        assert forest.aspect_ratio(0, 64.0) == pytest.approx((6.0 - 64.0) / 3.0)

    def test_min_edge_never_increases(self):
        forest = SegmentForest(areas=[1.0] * 4, min_sides=[1.0] * 4)
        r = forest.union(0, 1, 9.0)
        assert forest.min_edge[r] == 9.0
        r = forest.union(r, 2, 12.0)
        assert forest.min_edge[r] == 9.0
        r = forest.union(r, 3, 5.0)
        assert forest.min_edge[r] == 5.0

    def test_find_idempotent(self):
        forest = SegmentForest(areas=[1.0] * 5, min_sides=[1.0] * 5)
        forest.union(0, 3, 1.0)
        forest.union(3, 4, 1.0)
        for t in range(5):
            assert forest.find(t) == forest.find(forest.find(t))


class TestFusionTrace:
    """Frozen hand simulation of the bridge fixture, step for step."""

    def test_kappa_1_5_trace(self):
        tri = bridge_fixture()
        trace = []
        res = segment(tri, kappa=1.5, a_min=0.0, trace=trace)
        expected = [
            (4, 5, SQRT180, True, 60.0, SQRT180),
            (2, 3, SQRT40, True, 12.0, SQRT40),
            (3, 4, 6.0, True, 72.0, 6.0),
            (0, 1, SQRT32, True, 16.0, SQRT32),
            (0, 5, 4.0, False, None, None),
        ]
        assert len(trace) == len(expected)
        for got, want in zip(trace, expected):
            assert got[:2] == want[:2]
            assert got[2] == pytest.approx(want[2], abs=1e-12)
            assert got[3] is want[3]
            if want[4] is None:
                assert got[4] is None and got[5] is None
            else:
                assert got[4] == pytest.approx(want[4], abs=1e-9)
                assert got[5] == pytest.approx(want[5], abs=1e-12)
        # boundary lies on the bridge: left square vs everything else
        assert res.segment_count == 2
        assert res.labels.tolist() == [0, 0, 1, 1, 1, 1]
        assert sorted(res.areas.tolist()) == pytest.approx([16.0, 72.0])

    def test_kappa_1_trace_fuses_everything(self):
        tri = bridge_fixture()
        trace = []
        res = segment(tri, kappa=1.0, a_min=0.0, trace=trace)
        assert [t[3] for t in trace] == [True] * 5
        assert trace[-1][4] == pytest.approx(88.0)
        assert res.segment_count == 1

    def test_queue_monotone_nonincreasing(self):
        tri = bridge_fixture()
        trace = []
        segment(tri, kappa=1.0, a_min=0.0, trace=trace)
        lengths = [t[2] for t in trace]
        assert lengths == sorted(lengths, reverse=True)


class TestLimits:
    def test_kappa_to_zero_one_segment_per_component(self):
        tri = bridge_fixture()
        res = segment(tri, kappa=1e-9, a_min=0.0)
        assert res.segment_count == dual_components(tri)

    def test_a_min_above_total_area_fuses_component(self):
        tri = bridge_fixture()
        res = segment(tri, kappa=1.0, a_min=1e6)
        assert res.segment_count == 1

    def test_kappa_large_a_min_zero_keeps_singletons_before_enforce(self):
        tri = bridge_fixture()
        forest = SegmentForest.from_triangulation(tri)
        run_fusion(forest, sort_edges_for_fusion(dual_edges(tri)), 1e12, 0.0)
        assert len(forest.roots()) == tri.n_triangles

    def test_negative_ratio_guarantees_fusion(self):
        # a sub-A_min segment fuses across any positive edge
        forest = SegmentForest(areas=[10.0, 5000.0], min_sides=[2.0, 50.0])
        edges = [DualEdge(0, 0, 1, 0.001, (0, 1))]
        run_fusion(forest, edges, kappa=1e6, a_min=64.0)
        assert forest.find(0) == forest.find(1)


class TestDeterminismAndPartition:
    def test_two_runs_identical(self):
        rng = np.random.default_rng(31)
        tri = delaunay(rng.uniform(0, 60, (150, 2)))
        r1 = segment(tri, 1.0, 64.0)
        r2 = segment(tri, 1.0, 64.0)
        assert np.array_equal(r1.labels, r2.labels)

    def test_area_additivity(self):
        rng = np.random.default_rng(32)
        tri = delaunay(rng.uniform(0, 60, (150, 2)))
        res = segment(tri, 1.0, 64.0)
        areas = tri.triangle_areas()
        for lab in range(res.segment_count):
            members = areas[res.labels == lab].sum()
            assert members == pytest.approx(res.areas[lab], rel=1e-6)
        assert res.areas.sum() == pytest.approx(areas.sum(), rel=1e-9)

    def test_segments_are_dual_connected(self):
        rng = np.random.default_rng(33)
        tri = delaunay(rng.uniform(0, 60, (120, 2)))
        res = segment(tri, 1.0, 64.0)
        edges = dual_edges(tri)
        adj = {}
        for e in edges:
            if res.labels[e.t1] == res.labels[e.t2]:
                adj.setdefault(e.t1, []).append(e.t2)
                adj.setdefault(e.t2, []).append(e.t1)
        for lab in range(res.segment_count):
            members = set(np.nonzero(res.labels == lab)[0].tolist())
            start = next(iter(members))
            seen = {start}
            stack = [start]
            while stack:
                for n in adj.get(stack.pop(), []):
                    if n in members and n not in seen:
                        seen.add(n)
                        stack.append(n)
            assert seen == members

    def test_fused_min_edge_bounded_by_edge(self):
        rng = np.random.default_rng(34)
        tri = delaunay(rng.uniform(0, 60, (100, 2)))
        trace = []
        segment(tri, 1.0, 64.0, trace=trace)
        for t1, t2, length, fused, area, min_edge in trace:
            if fused:
                assert min_edge <= length + 1e-12


class TestEnforceMinArea:
    def test_noop_when_all_large(self):
        forest = SegmentForest(areas=[100.0, 200.0], min_sides=[1.0, 1.0])
        edges = [DualEdge(0, 0, 1, 5.0, (0, 1))]
        enforce_min_area(forest, edges, 50.0)
        assert forest.find(0) != forest.find(1)

    def test_fuses_into_longest_boundary(self):
        # tiny middle segment: shares 7.0 with 0 (two edges) and 3.0 with 2
        forest = SegmentForest(areas=[100.0, 10.0, 100.0], min_sides=[1.0, 1.0, 1.0])
        edges = [
            DualEdge(0, 0, 1, 4.0, (0, 1)),
            DualEdge(1, 0, 1, 3.0, (1, 2)),
            DualEdge(2, 1, 2, 3.0, (2, 3)),
        ]
        enforce_min_area(forest, edges, 50.0)
        assert forest.find(1) == forest.find(0)
        assert forest.find(2) != forest.find(0)
        assert forest.area[forest.find(0)] == pytest.approx(110.0)

    def test_chain_of_tiny_segments_collapses(self):
        forest = SegmentForest(areas=[10.0, 10.0, 10.0], min_sides=[1.0, 1.0, 1.0])
        edges = [
            DualEdge(0, 0, 1, 2.0, (0, 1)),
            DualEdge(1, 1, 2, 2.0, (1, 2)),
        ]
        enforce_min_area(forest, edges, 1000.0)
        assert len({forest.find(t) for t in range(3)}) == 1

    def test_isolated_component_stays(self):
        forest = SegmentForest(areas=[10.0], min_sides=[1.0])
        enforce_min_area(forest, [], 1000.0)
        assert forest.roots() == [0]

    def test_postcondition_random(self):
        rng = np.random.default_rng(35)
        tri = delaunay(rng.uniform(0, 40, (100, 2)))
        a_min = 30.0
        res = segment(tri, 1.0, a_min)
        n_components = dual_components(tri)
        small = [a for a in res.areas if a < a_min]
        # undersized survivors only if they are whole components
        assert len(small) <= n_components


class TestRasterize:
    def test_inside_outside(self):
        tri = delaunay(np.array([(0.0, 0.0), (8.0, 0.0), (0.0, 8.0)]))
        res = segment(tri, 1.0, 0.0)
        lm = rasterize_labels(tri, res, 10, 10)
        assert lm[1, 1] == 1  # strictly inside
        assert lm[9, 9] == 0  # outside all triangles
        assert lm.dtype == np.uint16

    def test_labels_start_at_one(self):
        tri = bridge_fixture()
        res = segment(tri, 1.5, 0.0)
        lm = rasterize_labels(tri, res, 20, 8)
        assert set(np.unique(lm)) <= {0, 1, 2}
        assert lm[2, 2] == res.labels[0] + 1  # a pixel inside the left square

    def test_partition_consistent(self, synthetic_run):
        lm = synthetic_run.label_map
        assert lm.max() == synthetic_run.result.segment_count
        assert (lm >= 0).all()


class TestSidecar:
    def test_png_and_sidecar_round_trip(self, tmp_path):
        import io

        from PIL import Image

        from shadowseg.segmentation import save_labels

        tri = bridge_fixture()
        res = segment(tri, 1.5, 0.0)
        lm = rasterize_labels(tri, res, 20, 8)
        png = tmp_path / "labels.png"
        sidecar = tmp_path / "segments.txt"
        save_labels(png, sidecar, lm, res)
        loaded = np.asarray(Image.open(io.BytesIO(png.read_bytes())))
        assert np.array_equal(loaded.astype(np.uint16), lm)
        text = sidecar.read_text()
        assert text.splitlines()[0] == "segment\tarea_px2\ttriangles"
        assert len(text.splitlines()) == 1 + res.segment_count
