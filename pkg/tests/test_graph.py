import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rhseg.errors import DeadRegion, DimensionMismatch, LevelOutOfRange, SelfMerge
from rhseg.graph import (
    LabelMap,
    MergeHierarchy,
    MergeKind,
    RegionGraph,
    extract_labels,
    init_from_presegmentation,
    init_region_graph,
    label_map_from_graph,
    merge_regions,
)
from rhseg.image import HyperImage


def make_image(edge, bands=1, values=None, seed=0):
    if values is not None:
        samples = np.asarray(values, dtype=np.float32).reshape(bands, edge, edge)
    else:
        rng = np.random.default_rng(seed)
        samples = rng.normal(size=(bands, edge, edge)).astype(np.float32)
    return HyperImage(edge, edge, bands, samples)


def test_single_pixel_image():
    g = init_region_graph(make_image(1, 3), 8)
    assert g.live_count == 1
    region = g.region(0)
    assert region.pixel_count == 1
    assert region.adjacency == set()


def test_2x2_eight_connectivity_complete():
    g = init_region_graph(make_image(2), 8)
    assert g.live_count == 4
    for rid in range(4):
        assert g.region(rid).adjacency == set(range(4)) - {rid}


def test_2x2_four_connectivity_no_diagonals():
    g = init_region_graph(make_image(2), 4)
    assert g.region(0).adjacency == {1, 2}
    assert g.region(3).adjacency == {1, 2}


def test_3x3_eight_connectivity_degrees():
    g = init_region_graph(make_image(3), 8)
    assert g.region(4).adjacency == set(range(9)) - {4}
    for corner in (0, 2, 6, 8):
        assert len(g.region(corner).adjacency) == 3


def test_row_major_ids():
    img = make_image(3, 1)
    g = init_region_graph(img, 8)
    mat = img.pixel_matrix()
    for p in range(9):
        assert g.pixel_assignment[p] == p
        assert g.region(p).band_sums[0] == mat[p, 0]


def test_presegmentation_one_class():
    img = make_image(4, 2)
    labels = LabelMap(4, 4, np.zeros((4, 4), dtype=np.int64))
    g = init_from_presegmentation(img, labels, 8)
    assert g.live_count == 1
    region = g.region(0)
    assert region.pixel_count == 16
    np.testing.assert_array_equal(
        region.band_sums, img.pixel_matrix().sum(axis=0)
    )


def test_presegmentation_identity_matches_init():
    img = make_image(3, 2, seed=5)
    labels = LabelMap(3, 3, np.arange(9, dtype=np.int64).reshape(3, 3))
    a = init_from_presegmentation(img, labels, 8)
    b = init_region_graph(img, 8)
    assert a.live_count == b.live_count
    for rid in range(9):
        ra, rb = a.region(rid), b.region(rid)
        assert ra.pixel_count == rb.pixel_count
        assert ra.adjacency == rb.adjacency
        assert np.array_equal(ra.band_sums, rb.band_sums)


def test_presegmentation_two_rows():
    img = make_image(2, 1, values=[[0.0, 0.0], [9.0, 9.0]])
    labels = LabelMap(2, 2, np.array([[0, 0], [1, 1]], dtype=np.int64))
    g = init_from_presegmentation(img, labels, 8)
    assert g.live_count == 2
    assert g.region(0).pixel_count == 2
    assert g.region(1).pixel_count == 2
    assert g.region(0).adjacency == {1}
    assert g.region(1).adjacency == {0}


def test_presegmentation_size_mismatch():
    img = make_image(3, 1)
    labels = LabelMap(2, 2, np.zeros((2, 2), dtype=np.int64))
    with pytest.raises(DimensionMismatch):
        init_from_presegmentation(img, labels, 8)


def test_merge_sums_and_counts():
    img = make_image(2, 1, values=[[1.0, 3.0], [0.0, 0.0]])
    g = init_region_graph(img, 8)
    record = merge_regions(g, 0, 1, 2.0, MergeKind.ADJACENT)
    assert record.survivor_id == 0
    assert record.absorbed_id == 1
    survivor = g.region(0)
    assert survivor.pixel_count == 2
    assert survivor.band_sums[0] == 4.0


def test_merge_rewires_2x2():
    g = init_region_graph(make_image(2), 8)
    merge_regions(g, 0, 1, 0.0, MergeKind.ADJACENT)
    assert g.live_count == 3
    assert g.region(0).adjacency == {2, 3}
    assert g.region(2).adjacency == {0, 3}
    assert g.region(3).adjacency == {0, 2}


def test_merge_larger_id_first_still_min_survives():
    g = init_region_graph(make_image(2), 8)
    record = merge_regions(g, 3, 1, 0.0, MergeKind.ADJACENT)
    assert record.survivor_id == 1
    assert record.absorbed_id == 3
    assert g.is_live(1) and not g.is_live(3)


def test_merge_errors():
    g = init_region_graph(make_image(2), 8)
    with pytest.raises(SelfMerge):
        merge_regions(g, 2, 2, 0.0, MergeKind.ADJACENT)
    merge_regions(g, 0, 1, 0.0, MergeKind.ADJACENT)
    with pytest.raises(DeadRegion):
        merge_regions(g, 1, 2, 0.0, MergeKind.ADJACENT)


def test_conservation_under_random_merges():
    img = make_image(4, 3, seed=11)
    g = init_region_graph(img, 8)
    totals = img.pixel_matrix().sum(axis=0)
    rng = np.random.default_rng(0)
    while g.live_count > 1:
        live = sorted(g.live_ids())
        a = int(rng.choice(live))
        partners = sorted(g.region(a).adjacency)
        b = int(rng.choice(partners))
        merge_regions(g, a, b, 0.0, MergeKind.ADJACENT)
        g.check_invariants(reference_band_totals=totals)
    assert g.region(0).pixel_count == 16


def test_label_map_dense_first_occurrence():
    g = init_region_graph(make_image(2), 8)
    merge_regions(g, 2, 3, 0.0, MergeKind.ADJACENT)
    labels = label_map_from_graph(g)
    # regions {0}, {1}, {2,3} -> dense ids 0, 1, 2 in row-major order
    assert labels.labels.tolist() == [[0, 1], [2, 2]]


def _run_all_merges(g):
    hierarchy = MergeHierarchy(initial_region_count=g.live_count, records=[])
    while g.live_count > 1:
        live = sorted(g.live_ids())
        a = live[0]
        b = min(g.region(a).adjacency)
        hierarchy.records.append(
            merge_regions(g, a, b, 0.0, MergeKind.ADJACENT)
        )
    return hierarchy


def test_extract_labels_identity_and_root():
    img = make_image(3, 1, seed=2)
    initial = init_region_graph(img, 8)
    g = initial.copy()
    hierarchy = _run_all_merges(g)
    identity = extract_labels(hierarchy, initial, 9)
    assert identity.labels.ravel().tolist() == list(range(9))
    root = extract_labels(hierarchy, initial, 1)
    assert set(root.labels.ravel().tolist()) == {0}


def test_extract_labels_two_level_split():
    img = make_image(2, 1, values=[[0.0, 0.0], [9.0, 9.0]])
    initial = init_region_graph(img, 8)
    scratch = initial.copy()
    records = [
        merge_regions(scratch, 0, 1, 0.0, MergeKind.ADJACENT),
        merge_regions(scratch, 2, 3, 0.0, MergeKind.ADJACENT),
    ]
    hierarchy = MergeHierarchy(4, records)
    labels = extract_labels(hierarchy, initial, 2)
    assert labels.labels.tolist() == [[0, 0], [1, 1]]


def test_extract_labels_out_of_range():
    img = make_image(2, 1)
    initial = init_region_graph(img, 8)
    scratch = initial.copy()
    records = [merge_regions(scratch, 0, 1, 0.0, MergeKind.ADJACENT)]
    hierarchy = MergeHierarchy(4, records)
    with pytest.raises(LevelOutOfRange):
        extract_labels(hierarchy, initial, 5)
    with pytest.raises(LevelOutOfRange):
        extract_labels(hierarchy, initial, 2)


def test_adjacent_levels_differ_by_one_coalescence():
    img = make_image(4, 2, seed=9)
    initial = init_region_graph(img, 8)
    g = initial.copy()
    hierarchy = _run_all_merges(g)
    for k in range(2, 17):
        hi = extract_labels(hierarchy, initial, k).labels.ravel()
        lo = extract_labels(hierarchy, initial, k - 1).labels.ravel()
        pairs = {(int(a), int(b)) for a, b in zip(hi, lo)}
        # every label at level k maps to exactly one label at k-1, and
        # exactly two labels at k share a target
        assert len(pairs) == k
        targets = [b for _, b in pairs]
        assert len(set(targets)) == k - 1


@given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 10_000))
def test_merge_count_monotone(edge, bands, seed):
    img = make_image(edge, bands, seed=seed)
    g = init_region_graph(img, 8)
    before = g.live_count
    merge_regions(g, 0, 1, 0.0, MergeKind.ADJACENT)
    assert g.live_count == before - 1
