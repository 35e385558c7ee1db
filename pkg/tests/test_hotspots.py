import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stigspot.geo_grid import GridSpec
from stigspot.hotspots import (HotspotSet, ThresholdSpec, drop_small, extract, hotspot_set,
                               intersect_masks, jaccard, jaccard_matrix, label_regions)
from stigspot.trail import TrailField

from .oracles import bfs_components, cell_set, set_jaccard

G16 = GridSpec(41.0, 29.0, 16, 16)


def trail_of(values, spec=G16):
    return TrailField(spec, 0, np.asarray(values, dtype=float))


def test_zero_trail_gives_empty_set():
    hs = extract(TrailField.zeros(G16), ThresholdSpec(0.5))
    assert len(hs) == 0 and hs.area == 0


def test_threshold_is_strict_and_relative():
    v = np.zeros(G16.shape)
    v[2, 2], v[3, 3], v[8, 8], v[9, 9] = 5.0, 2.0, 2.0001, 4.0
    hs = extract(trail_of(v), ThresholdSpec(0.4))
    assert cell_set(hs.mask) == {(2, 2), (8, 8), (9, 9)}


def test_tau_one_is_always_empty():
    v = np.random.default_rng(0).random(G16.shape)
    assert extract(trail_of(v), ThresholdSpec(1.0)).area == 0


def test_diagonal_touch_is_one_region():
    m = np.zeros(G16.shape, dtype=bool)
    m[4, 4] = m[5, 5] = True
    assert len(hotspot_set(m, G16)) == 1


def test_min_area_removes_small_components_from_mask():
    m = np.zeros(G16.shape, dtype=bool)
    m[0:3, 0:3] = True
    m[10, 10] = True
    hs = hotspot_set(m, G16, min_area=4)
    assert len(hs) == 1 and not hs.mask[10, 10] and hs.area == 9
    np.testing.assert_array_equal(drop_small(m, 4), hs.mask)


def test_regions_labelled_in_scan_order():
    m = np.zeros(G16.shape, dtype=bool)
    m[10, 0] = True
    m[0, 10] = True
    hs = hotspot_set(m, G16)
    assert [r.label for r in hs.regions] == [1, 2]
    assert hs.regions[0].cells.tolist() == [[0, 10]]


@pytest.mark.parametrize("tau,min_area", [(0.0, 1), (1.2, 1), (0.5, 0)])
def test_threshold_spec_validation(tau, min_area):
    with pytest.raises(ValueError):
        ThresholdSpec(tau, min_area)


def test_jaccard_examples():
    a = np.zeros(G16.shape, dtype=bool)
    b = np.zeros(G16.shape, dtype=bool)
    assert jaccard(a, b) == 1.0
    a[0, 0:4] = True
    assert jaccard(a, a) == 1.0
    b[5, 0:4] = True
    assert jaccard(a, b) == 0.0
    b[:] = False
    b[0, 1:6] = True  # |A & B| = 3, |A | B| = 6
    assert jaccard(a, b) == 0.5


def test_jaccard_rejects_mismatched_grids():
    with pytest.raises(ValueError):
        jaccard(HotspotSet.empty(G16), HotspotSet.empty(GridSpec(0, 0, 16, 16)))
    with pytest.raises(ValueError):
        jaccard(np.zeros((4, 4), bool), np.zeros((4, 5), bool))


def test_intersect_examples():
    rng = np.random.default_rng(1)
    m = rng.random(G16.shape) > 0.5
    np.testing.assert_array_equal(intersect_masks([m]), m)
    assert not intersect_masks([m, np.zeros_like(m)]).any()
    with pytest.raises(ValueError):
        intersect_masks([])
    with pytest.raises(ValueError):
        intersect_masks([m, np.zeros((3, 3), bool)])


@pytest.mark.parametrize("seed", range(10))
def test_intersect_matches_triple_loop(seed):
    rng = np.random.default_rng(seed)
    ms = [rng.random((16, 16)) > 0.3 for _ in range(3)]
    ref = np.zeros((16, 16), bool)
    for r in range(16):
        for c in range(16):
            ref[r, c] = ms[0][r, c] and ms[1][r, c] and ms[2][r, c]
    np.testing.assert_array_equal(intersect_masks(ms), ref)


# --- properties ------------------------------------------------------------------------------

trail_st = arrays(np.float64, (16, 16),
                  elements=st.one_of(st.just(0.0), st.floats(0.0, 50.0, allow_subnormal=False)))
mask_st = arrays(np.bool_, (16, 16))


@settings(max_examples=200, deadline=None)
@given(trail_st, st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_area_monotone_in_tau(values, t1, t2):
    lo, hi = min(t1, t2), max(t1, t2)
    a = extract(trail_of(values), ThresholdSpec(lo)).mask
    b = extract(trail_of(values), ThresholdSpec(hi)).mask
    assert not np.any(b & ~a)


@settings(max_examples=200, deadline=None)
@given(trail_st, st.floats(0.05, 0.95), st.sampled_from([0.5, 3.0, 100.0]),
       st.integers(1, 5))
def test_scale_invariance(values, tau, k, min_area):
    th = ThresholdSpec(tau, min_area)
    a = extract(trail_of(values), th)
    b = extract(trail_of(values * k), th)
    np.testing.assert_array_equal(a.mask, b.mask)
    assert [r.cells.tolist() for r in a.regions] == [r.cells.tolist() for r in b.regions]


@settings(max_examples=200, deadline=None)
@given(mask_st, st.integers(1, 6))
def test_regions_partition_mask_and_match_bfs(mask, min_area):
    hs = hotspot_set(mask, G16, min_area)
    seen = set()
    for reg in hs.regions:
        cells = {tuple(c) for c in reg.cells.tolist()}
        assert reg.area >= min_area
        assert not (cells & seen)
        seen |= cells
    assert seen == cell_set(hs.mask)
    expected = {frozenset(c) for c in bfs_components(mask) if len(c) >= min_area}
    assert {frozenset(tuple(x) for x in r.cells.tolist()) for r in hs.regions} == expected


@settings(max_examples=200, deadline=None)
@given(mask_st, mask_st)
def test_jaccard_properties_and_brute_force(a, b):
    j = jaccard(a, b)
    assert j == jaccard(b, a)
    assert 0.0 <= j <= 1.0
    assert jaccard(a, a) == 1.0
    assert j == set_jaccard(cell_set(a), cell_set(b))


@settings(max_examples=100, deadline=None)
@given(st.lists(mask_st, min_size=1, max_size=6))
def test_jaccard_matrix_matches_pairwise(masks):
    m = jaccard_matrix(masks)
    assert np.array_equal(m, m.T)
    assert np.all(np.diag(m) == 1.0)
    for i, a in enumerate(masks):
        for j, b in enumerate(masks):
            assert m[i, j] == set_jaccard(cell_set(a), cell_set(b))


def test_label_regions_empty():
    m, regions = label_regions(np.zeros((5, 5), bool))
    assert regions == [] and not m.any()
