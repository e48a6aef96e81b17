import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_field
from shadowseg.outline import (
    extract_outline,
    hysteresis,
    load_outline_points,
    non_max_suppress,
    save_outline,
    subpixel_refine,
)


class TestNonMaxSuppress:
    def test_unique_maximum(self):
        kept = non_max_suppress(make_field([0.2, 0.9, 0.4]))
        assert kept.tolist() == [[False, True, False]]

    def test_plateau_keeps_left(self):
        kept = non_max_suppress(make_field([0.2, 0.9, 0.9, 0.4]))
        assert kept.tolist() == [[False, True, False, False]]

    def test_constant_keeps_nothing(self):
        kept = non_max_suppress(make_field([0.5, 0.5, 0.5, 0.5]))
        assert not kept.any()

    def test_invalid_pixels_never_kept(self):
        f = make_field([0.2, 0.9, 0.4], valid=np.array([[True, False, True]]))
        assert not non_max_suppress(f)[0, 1]

    def test_invalid_neighbor_counts_as_zero(self):
        # center (0.4) beats an invalid 0.9 neighbor treated as 0
        f = make_field([0.9, 0.4, 0.1], valid=np.array([[False, True, True]]))
        assert non_max_suppress(f)[0, 1]

    def test_vertical_direction(self):
        g = np.array([[0.1], [0.8], [0.3]])
        kept = non_max_suppress(make_field(g, direction="S"))
        assert kept[:, 0].tolist() == [False, True, False]

    def test_thinness_invariant_random(self):
        # no survivor has survivor neighbors with strictly larger g at
        # both p - theta and p + theta
        rng = np.random.default_rng(11)
        g = rng.uniform(0, 1, (20, 20))
        d = rng.integers(0, 8, (20, 20)).astype(np.int8)
        from shadowseg.edge_detect import DIRECTIONS, EdgeField

        fld = EdgeField(strength=g, direction=d, valid=np.ones_like(g, dtype=bool))
        kept = non_max_suppress(fld)

        def bigger_survivor(x, y, gx, gy):
            return 0 <= gx < 20 and 0 <= gy < 20 and kept[gy, gx] and g[gy, gx] > g[y, x]

        ys, xs = np.nonzero(kept)
        for x, y in zip(xs, ys):
            dd = DIRECTIONS[d[y, x]]
            behind = bigger_survivor(x, y, x - dd.dx, y - dd.dy)
            ahead = bigger_survivor(x, y, x + dd.dx, y + dd.dy)
            assert not (behind and ahead)


class TestHysteresis:
    def test_isolated_weak_dropped(self):
        f = make_field([0.0, 0.3, 0.0])
        kept = np.array([[False, True, False]])
        out = hysteresis(kept, f, 0.3, 0.6)
        assert not out.any()

    def test_isolated_seed_kept(self):
        f = make_field([0.0, 0.7, 0.0])
        kept = np.array([[False, True, False]])
        assert hysteresis(kept, f, 0.3, 0.6)[0, 1]

    def test_chain_floods_from_seed(self):
        f = make_field([0.7, 0.4, 0.4])
        kept = np.ones((1, 3), dtype=bool)
        assert hysteresis(kept, f, 0.3, 0.6).all()

    def test_chain_without_seed_dropped(self):
        f = make_field([0.5, 0.5])
        kept = np.ones((1, 2), dtype=bool)
        assert not hysteresis(kept, f, 0.3, 0.6).any()

    def test_diagonal_connectivity(self):
        g = np.zeros((3, 3))
        g[0, 0] = 0.9
        g[1, 1] = 0.4
        g[2, 2] = 0.4
        out = hysteresis(g > 0, make_field(g), 0.3, 0.6)
        assert out[1, 1] and out[2, 2]

    def test_monotone_in_t_high(self):
        rng = np.random.default_rng(12)
        g = rng.uniform(0, 1, (24, 24))
        f = make_field(g)
        kept = non_max_suppress(f)
        lo = hysteresis(kept, f, 0.3, 0.5)
        hi = hysteresis(kept, f, 0.3, 0.8)
        assert (lo | hi == lo).all()  # raising t_high never adds survivors

    def test_threshold_order_validated(self):
        f = make_field([0.5])
        with pytest.raises(ValueError):
            hysteresis(np.ones((1, 1), bool), f, 0.7, 0.3)


class TestSubpixelRefine:
    def test_symmetric_neighbors_give_zero(self):
        f = make_field([0.4, 1.0, 0.4])
        assert subpixel_refine(f, (1, 0)) == (1.0, 0.0)

    def test_one_sixth_case(self):
        f = make_field([0.2, 1.0, 0.6])
        x, y = subpixel_refine(f, (1, 0))
        assert abs(x - (1.0 + 1.0 / 6.0)) < 1e-12
        assert y == 0.0

    def test_flat_triple_guard(self):
        f = make_field([0.5, 0.5, 0.5])
        assert subpixel_refine(f, (1, 0)) == (1.0, 0.0)

    def test_diagonal_offset_splits_coordinates(self):
        g = np.zeros((3, 3))
        g[1, 1] = 1.0
        g[0, 0] = 0.2  # NW neighbor
        g[2, 2] = 0.6  # SE neighbor
        f = make_field(g, direction="SE")
        x, y = subpixel_refine(f, (1, 1))
        expect = (1.0 / 6.0) / np.sqrt(2.0)
        assert abs(x - (1 + expect)) < 1e-12 and abs(y - (1 + expect)) < 1e-12

    @given(
        st.floats(min_value=0, max_value=1),
        st.floats(min_value=0, max_value=1),
        st.floats(min_value=0, max_value=1),
    )
    def test_offset_bounded(self, gm, g0, gp):
        f = make_field([gm, g0, gp])
        x, y = subpixel_refine(f, (1, 0))
        assert abs(x - 1.0) <= 0.5 + 1e-12 and y == 0.0

    @given(
        st.floats(min_value=0, max_value=0.9),
        st.floats(min_value=0, max_value=0.9),
    )
    def test_matches_dense_parabola_oracle(self, gm, gp):
        g0 = 1.0  # strict peak at the center
        f = make_field([gm, g0, gp])
        x, _ = subpixel_refine(f, (1, 0))
        delta = x - 1.0
        # fit the unique parabola through (-1, gm), (0, g0), (1, gp) and
        # scan it densely; its argmax must match the closed form
        a = (gm + gp) / 2.0 - g0
        b = (gp - gm) / 2.0
        ts = np.linspace(-0.5, 0.5, 20001)
        vals = a * ts * ts + b * ts + g0
        t_best = ts[int(np.argmax(vals))]
        if abs(2 * a) >= 1e-12 and abs(-b / (2 * a)) <= 0.5:
            assert abs(t_best - delta) < 1e-3
        else:
            assert delta == 0.0


class TestExtractOutline:
    def test_invariants_on_synthetic(self, synthetic_run):
        pts = synthetic_run.outline
        assert len(pts) > 100
        offs = pts.points - pts.source_pixels
        assert (np.abs(offs) <= 0.5 + 1e-12).all()
        keys = {tuple(p) for p in pts.source_pixels.tolist()}
        assert len(keys) == len(pts)  # no two points share a source pixel
        g = synthetic_run.field.strength
        src = pts.source_pixels
        assert np.array_equal(pts.strength, g[src[:, 1], src[:, 0]])

    def test_row_major_deterministic_order(self):
        g = np.zeros((5, 5))
        g[1, 2] = 0.9
        g[3, 1] = 0.9
        f = make_field(g)
        pts = extract_outline(f, 0.3, 0.6)
        assert pts.source_pixels.tolist() == [[2, 1], [1, 3]]

    def test_dump_round_trip(self, tmp_path):
        g = np.zeros((4, 4))
        g[2, 1] = 0.8
        pts = extract_outline(make_field(g), 0.3, 0.6)
        path = tmp_path / "outline.txt"
        save_outline(path, pts)
        loaded = load_outline_points(path)
        assert np.array_equal(loaded, pts.points)
