import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corex.errors import Disconnected
from corex.geometry import LocalizeConfig, centroid, localize, shoelace_area, trace_boundary
from corex.model import RelevanceGrid
from oracles import flood_components, pixels_of, random_connected_mask


def grid(values, cid=1):
    return RelevanceGrid(cid, "L", np.asarray(values, dtype=np.float32))


def hole_count(mask: np.ndarray) -> int:
    """Cells enclosed by the outer outline but not in the mask."""
    padded = np.pad(mask, 1, constant_values=False)
    outside = flood_components(~padded, connectivity=4)
    border_reachable = next(c for c in outside if (0, 0) in c)
    enclosed = pixels_of(~padded) - border_reachable
    return len(enclosed)


class TestCentroid:
    def test_four_by_four_block(self):
        assert centroid(np.ones((4, 4), dtype=bool)) == (1.5, 1.5)

    def test_single_pixel_xy_order(self):
        mask = np.zeros((5, 7), dtype=bool)
        mask[2, 6] = True  # row 2, col 6
        assert centroid(mask) == (6.0, 2.0)


class TestLocalize:
    def test_threshold_is_fraction_of_peak(self):
        values = np.zeros((6, 6))
        values[0, 0:4] = [1.0, 0.4, 0.29, 0.31]
        regions = localize(grid(values), "pos", LocalizeConfig(pixel_threshold=0.3, min_component_px=1))
        # 0.29 falls below 0.3 * 1.0, splitting the run into two components
        masks = [pixels_of(r.mask) for r in regions]
        assert {(0, 0), (0, 1)} in masks and {(0, 3)} in masks

    def test_negative_sign_flips_values(self):
        values = np.zeros((5, 5))
        values[2, 2] = -2.0
        values[2, 3] = -1.9
        values[0, 0] = 2.0  # positive pixel must not enter a neg region
        (region,) = localize(grid(values), "neg", LocalizeConfig(min_component_px=1))
        assert pixels_of(region.mask) == {(2, 2), (2, 3)}
        assert region.sign == "neg"

    def test_no_positive_peak_yields_nothing(self):
        assert localize(grid(-np.ones((4, 4))), "pos", LocalizeConfig()) == ()
        assert localize(grid(np.zeros((4, 4))), "pos", LocalizeConfig()) == ()

    def test_min_component_size_drops_specks(self):
        values = np.zeros((8, 8))
        values[0:2, 0:2] = 1.0  # size 4
        values[6, 6] = 1.0  # size 1
        regions = localize(grid(values), "pos", LocalizeConfig(min_component_px=4))
        assert len(regions) == 1
        assert pixels_of(regions[0].mask) == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_order_by_size_then_first_pixel(self):
        values = np.zeros((10, 10))
        values[8, 0:2] = 1.0  # size 2, later rows
        values[0, 4:6] = 1.0  # size 2, first row
        values[4, 0:3] = 1.0  # size 3, biggest
        regions = localize(grid(values), "pos", LocalizeConfig(min_component_px=1, max_instances=5))
        firsts = [sorted(pixels_of(r.mask))[0] for r in regions]
        assert firsts == [(4, 0), (0, 4), (8, 0)]

    def test_max_instances_caps_output(self):
        values = np.zeros((10, 10))
        for r in (0, 3, 6):
            values[r, 0:2] = 1.0
        regions = localize(grid(values), "pos", LocalizeConfig(min_component_px=1, max_instances=2))
        assert len(regions) == 2

    def test_instance_metadata(self):
        values = np.zeros((6, 6))
        values[2:4, 2:4] = 1.0
        (region,) = localize(grid(values, cid=9), "pos", LocalizeConfig())
        assert region.concept_id == 9
        assert region.size == 4
        assert region.centroid == (2.5, 2.5)
        assert len(region.boundary) == 4

    @given(st.integers(0, 10_000))
    def test_components_match_flood_fill_oracle(self, seed):
        rng = np.random.default_rng(seed)
        values = rng.normal(size=(12, 12))
        cfg = LocalizeConfig(pixel_threshold=0.5, min_component_px=2, max_instances=99)
        regions = localize(grid(values), "pos", cfg)

        peak = values.max()
        if peak <= 0:
            assert regions == ()
            return
        mask = (values >= 0.5 * peak) & (values > 0)
        expected = [c for c in flood_components(mask, 8) if len(c) >= 2]
        got = [pixels_of(r.mask) for r in regions]
        assert sorted(map(sorted, got)) == sorted(map(sorted, expected))
        sizes = [len(p) for p in got]
        assert sizes == sorted(sizes, reverse=True)


class TestTraceBoundary:
    def test_single_pixel_square(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[1, 2] = True
        assert trace_boundary(mask) == ((2, 1), (3, 1), (3, 2), (2, 2))

    def test_two_by_two_square(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[1:3, 1:3] = True
        assert trace_boundary(mask) == ((1, 1), (3, 1), (3, 3), (1, 3))

    def test_l_tromino_has_six_corners(self):
        mask = np.array([[1, 0], [1, 1]], dtype=bool)
        trace = trace_boundary(mask)
        assert len(trace) == 6
        assert shoelace_area(trace) == 3.0

    def test_diagonal_pinch_revisits_vertex(self):
        mask = np.array([[1, 0], [0, 1]], dtype=bool)
        trace = trace_boundary(mask)
        assert len(trace) == 8
        assert trace.count((1, 1)) == 2
        assert shoelace_area(trace) == 2.0

    def test_disconnected_rejected(self):
        mask = np.zeros((3, 3), dtype=bool)
        mask[0, 0] = mask[2, 2] = False
        with pytest.raises(Disconnected):
            trace_boundary(mask)  # empty
        mask[0, 0] = True
        mask[0, 2] = True  # two pixels, not 8-adjacent
        with pytest.raises(Disconnected):
            trace_boundary(mask)

    @given(st.integers(0, 10_000), st.integers(1, 60))
    def test_outline_area_counts_enclosed_cells(self, seed, size):
        rng = np.random.default_rng(seed)
        mask = random_connected_mask(rng, 10, 10, size)
        trace = trace_boundary(mask)
        assert shoelace_area(trace) == mask.sum() + hole_count(mask)

    @given(st.integers(0, 10_000), st.integers(1, 40))
    def test_outline_is_closed_and_rectilinear(self, seed, size):
        rng = np.random.default_rng(seed)
        mask = random_connected_mask(rng, 9, 9, size)
        trace = trace_boundary(mask)
        for i in range(len(trace)):
            a, b = trace[i], trace[(i + 1) % len(trace)]
            assert (a[0] == b[0]) != (a[1] == b[1])  # one axis moves


class TestShoelace:
    def test_unit_square_orientations(self):
        assert shoelace_area(((0, 0), (1, 0), (1, 1), (0, 1))) == 1.0
        assert shoelace_area(((0, 0), (0, 1), (1, 1), (1, 0))) == -1.0
