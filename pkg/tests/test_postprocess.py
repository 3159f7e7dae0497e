import numpy as np
import pytest

from aoaloc import (
    GridSpec,
    Method,
    Region,
    binarize,
    connected_components,
    decode_probability_map,
    pixel_to_world,
)
from aoaloc.postprocess import (
    Component,
    ComponentSet,
    ProbabilityMap,
    components_to_estimates,
)
from aoaloc.raster import PixelCoord

from oracles import bfs_label

GRID64 = GridSpec.from_region(Region.square(8000.0), 250.0)  # 64x64


def pmap(values, grid=GRID64):
    return ProbabilityMap(values=np.asarray(values, dtype=np.float64), grid=grid)


def test_probability_map_validated():
    with pytest.raises(ValueError):
        pmap(np.full(GRID64.shape, 1.2))
    with pytest.raises(ValueError):
        ProbabilityMap(values=np.zeros((4, 4)), grid=GRID64)


def test_binarize_boundary_is_foreground():
    v = np.zeros(GRID64.shape)
    v[1, 1] = 0.5
    v[1, 2] = 0.4999
    mask = binarize(pmap(v), 0.5)
    assert mask[1, 1] == 1
    assert mask[1, 2] == 0


def test_binarize_idempotent_on_binary_maps():
    rng = np.random.default_rng(0)
    v = (rng.random(GRID64.shape) < 0.3).astype(np.float64)
    once = binarize(pmap(v))
    again = binarize(pmap(once.astype(np.float64)))
    assert np.array_equal(once, again)


def test_binarize_threshold_validated():
    with pytest.raises(ValueError):
        binarize(pmap(np.zeros(GRID64.shape)), 1.1)
    with pytest.raises(ValueError):
        binarize(pmap(np.zeros(GRID64.shape)), -0.1)


def test_two_blocks_are_two_components():
    mask = np.zeros((64, 64), np.uint8)
    mask[2:5, 2:5] = 1
    mask[10:13, 40:43] = 1
    cs = connected_components(mask)
    assert len(cs) == 2
    assert sorted(c.area for c in cs.components) == [9, 9]


def test_diagonal_connectivity_difference():
    mask = np.zeros((64, 64), np.uint8)
    idx = np.arange(10)
    mask[idx, idx] = 1
    assert len(connected_components(mask, connectivity=8)) == 1
    assert len(connected_components(mask, connectivity=4)) == 10


def test_labels_follow_raster_order():
    mask = np.zeros((8, 8), np.uint8)
    mask[6, 1] = 1  # later in raster order
    mask[0, 5] = 1  # first foreground pixel scanned
    cs = connected_components(mask)
    first = cs.components[0].pixels
    assert (first[0, 0], first[0, 1]) == (0, 5)


def test_matches_flood_fill_oracle():
    rng = np.random.default_rng(12)
    for conn in (4, 8):
        for _ in range(25):
            mask = (rng.random((64, 64)) < 0.35).astype(np.uint8)
            cs = connected_components(mask, conn)
            expected_labels, expected_count = bfs_label(mask, conn)
            assert len(cs) == expected_count
            got = np.zeros_like(expected_labels)
            for i, comp in enumerate(cs.components, start=1):
                got[comp.pixels[:, 0], comp.pixels[:, 1]] = i
            assert np.array_equal(got, expected_labels)


def test_component_centroid_of_block():
    mask = np.zeros((64, 64), np.uint8)
    mask[2:5, 2:5] = 1
    c = connected_components(mask).components[0]
    assert (c.centroid.row, c.centroid.col) == (3.0, 3.0)


def test_estimates_world_mapping_and_method():
    mask = np.zeros((64, 64), np.uint8)
    mask[10, 20] = 1
    cs = connected_components(mask)
    ests = components_to_estimates(cs, GRID64)
    assert len(ests) == 1
    want = pixel_to_world(PixelCoord(10, 20), GRID64)
    assert (ests[0].position.x, ests[0].position.y) == (want.x, want.y)
    assert ests[0].method is Method.SEGNET
    assert ests[0].diagnostics["area"] == 1


def test_min_area_filters_specks():
    mask = np.zeros((64, 64), np.uint8)
    mask[1, 1] = 1
    mask[30:33, 30:33] = 1
    cs = connected_components(mask)
    assert len(components_to_estimates(cs, GRID64, min_area=2)) == 1
    assert len(components_to_estimates(cs, GRID64, min_area=1)) == 2


def test_weighted_centroid_shifts_toward_mass():
    v = np.zeros(GRID64.shape)
    v[5, 5] = 1.0
    v[5, 6] = 0.5
    p = pmap(v)
    plain = decode_probability_map(p, threshold=0.4)
    weighted = decode_probability_map(p, threshold=0.4, weighted_centroids=True)
    assert plain[0].diagnostics["centroid_col"] == 5.5
    assert weighted[0].diagnostics["centroid_col"] == pytest.approx(5 + 0.5 / 1.5)


def test_weighted_centroid_zero_mass_falls_back():
    mask = np.zeros((64, 64), np.uint8)
    mask[7, 7] = 1
    cs = connected_components(mask)
    zero = np.zeros(GRID64.shape)
    ests = components_to_estimates(cs, GRID64, weights=zero)
    want = pixel_to_world(PixelCoord(7, 7), GRID64)
    assert (ests[0].position.x, ests[0].position.y) == (want.x, want.y)


def test_threshold_masks_nest():
    rng = np.random.default_rng(3)
    p = pmap(rng.random(GRID64.shape))
    lo = binarize(p, 0.3)
    hi = binarize(p, 0.7)
    assert np.all(lo[hi == 1] == 1)  # hi mask is a subset of lo mask
    # and every hi component sits inside some lo component
    lo_labels, _ = bfs_label(lo, 8)
    for comp in connected_components(hi).components:
        parents = {lo_labels[r, c] for r, c in comp.pixels}
        assert len(parents) == 1 and 0 not in parents


def test_component_count_not_monotone_in_threshold():
    # a U shape at 0.6 with a 0.4 bridge: one component at t=0.3,
    # two at t=0.5, so count can rise with the threshold
    v = np.zeros(GRID64.shape)
    v[2, 2] = v[2, 4] = 0.6
    v[2, 3] = 0.4
    p = pmap(v)
    n_low = len(connected_components(binarize(p, 0.3)))
    n_high = len(connected_components(binarize(p, 0.5)))
    assert n_low == 1
    assert n_high == 2


def test_decode_chain_two_blobs():
    v = np.zeros(GRID64.shape)
    v[10:12, 10:12] = 0.9
    v[40:42, 50:52] = 0.8
    ests = decode_probability_map(pmap(v))
    assert len(ests) == 2
    centroids = sorted((e.diagnostics["centroid_row"], e.diagnostics["centroid_col"]) for e in ests)
    assert centroids == [(10.5, 10.5), (40.5, 50.5)]


def test_decode_all_zero_map_is_empty():
    assert decode_probability_map(pmap(np.zeros(GRID64.shape))) == []


def test_component_validation():
    with pytest.raises(ValueError):
        Component(pixels=np.zeros((2, 2), np.int64), area=3, centroid=PixelCoord(0, 0))


def test_connectivity_validated():
    with pytest.raises(ValueError):
        connected_components(np.zeros((4, 4), np.uint8), connectivity=6)
