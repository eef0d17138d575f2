import numpy as np
import pytest

from rhseg.engine import HsegParams, hseg_run
from rhseg.errors import IndivisibleImage, ShapeMismatch
from rhseg.graph import dense_renumber, init_region_graph, label_map_from_graph
from rhseg.image import HyperImage
from rhseg.sections import SectionId, partition, section_side, stitch, total_sections


def make_image(edge, bands=1, seed=0):
    rng = np.random.default_rng(seed)
    samples = rng.normal(size=(bands, edge, edge)).astype(np.float32)
    return HyperImage(edge, edge, bands, samples)


def uniform_image(edge, value, bands=1):
    samples = np.full((bands, edge, edge), value, dtype=np.float32)
    return HyperImage(edge, edge, bands, samples)


def test_section_id_tree():
    root = SectionId(1, 0, 0)
    kids = root.children()
    assert kids == [SectionId(2, 0, 0), SectionId(2, 0, 1), SectionId(2, 1, 0), SectionId(2, 1, 1)]
    assert all(k.parent() == root for k in kids)
    assert str(SectionId(3, 1, 2)) == "L3[1,2]"


def test_partition_counts_and_payloads():
    img = make_image(16, 2, seed=1)
    tasks = partition(img, 3)
    assert len(tasks) == 16
    assert section_side(3) == 4
    assert total_sections(3) == 1 + 4 + 16
    # row-major order, disjoint, exhaustive
    seen = np.zeros((16, 16), dtype=bool)
    for k, t in enumerate(tasks):
        assert t.section_id == SectionId(3, k // 4, k % 4)
        assert t.edge == 4
        r, c = t.origin
        assert not seen[r : r + 4, c : c + 4].any()
        seen[r : r + 4, c : c + 4] = True
        np.testing.assert_array_equal(
            t.image.samples, img.samples[:, r : r + 4, c : c + 4]
        )
    assert seen.all()


def test_partition_single_level_whole_image():
    img = make_image(5, 1)
    (task,) = partition(img, 1)
    assert task.origin == (0, 0)
    assert task.edge == 5
    np.testing.assert_array_equal(task.image.samples, img.samples)


def test_partition_indivisible():
    with pytest.raises(IndivisibleImage):
        partition(make_image(6), 3)  # 6 not divisible by 4
    with pytest.raises(ValueError):
        partition(make_image(4), 0)


def test_stitch_four_singletons_complete():
    quadrants = [init_region_graph(uniform_image(1, float(v)), 8) for v in range(4)]
    out = stitch(quadrants, 8)
    assert sorted(out.regions) == [0, 1, 2, 3]
    # the 2x2 result is fully connected under 8-connectivity
    for rid in range(4):
        assert out.regions[rid].adjacency == set(range(4)) - {rid}
    # band sums carried over exactly
    for rid, v in zip(range(4), range(4)):
        assert out.regions[rid].band_sums[0] == float(v)
        assert out.regions[rid].pixel_count == 1


def test_stitch_premerged_quadrants_six_seam_pairs():
    quadrants = []
    for v in (0.0, 10.0, 20.0, 30.0):
        g = init_region_graph(uniform_image(2, v), 8)
        hseg_run(g, HsegParams(spectral_weight=0.0, target_regions=1))
        assert g.live_count == 1
        quadrants.append(g)
    out = stitch(quadrants, 8)
    assert out.live_count == 4
    pairs = set()
    for rid, r in out.regions.items():
        for n in r.adjacency:
            pairs.add((min(rid, n), max(rid, n)))
    # all six unordered pairs: the four edge seams plus both diagonals
    # meeting at the center under 8-connectivity
    assert pairs == {(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)}
    out.check_invariants()


def test_stitch_premerged_four_connectivity_no_diagonals():
    quadrants = []
    for v in (0.0, 10.0, 20.0, 30.0):
        g = init_region_graph(uniform_image(2, v), 4)
        hseg_run(g, HsegParams(spectral_weight=0.0, target_regions=1))
        quadrants.append(g)
    out = stitch(quadrants, 4)
    pairs = set()
    for rid, r in out.regions.items():
        for n in r.adjacency:
            pairs.add((min(rid, n), max(rid, n)))
    assert pairs == {(0, 1), (0, 2), (1, 3), (2, 3)}


@pytest.mark.parametrize("connectivity", [4, 8])
def test_stitch_unmerged_equals_direct_init(connectivity):
    img = make_image(4, 2, seed=9)
    tasks = partition(img, 2)
    quadrants = [init_region_graph(t.image, connectivity) for t in tasks]
    out = stitch(quadrants, connectivity)
    direct = init_region_graph(img, connectivity)

    # identical pixel partition once ids are canonicalized
    np.testing.assert_array_equal(
        dense_renumber(out.pixel_assignment), dense_renumber(direct.pixel_assignment)
    )

    # identical structure region by region under the relabeling
    remap = {}
    for rid, r in out.regions.items():
        remap[rid] = int(direct.pixel_assignment[r.pixels[0]])
    assert sorted(remap.values()) == sorted(direct.regions)
    for rid, r in out.regions.items():
        d = direct.regions[remap[rid]]
        assert sorted(r.pixels) == sorted(d.pixels)
        assert r.pixel_count == d.pixel_count
        np.testing.assert_array_equal(r.band_sums, d.band_sums)
        assert {remap[a] for a in r.adjacency} == d.adjacency


def test_stitch_shape_mismatch():
    g1 = init_region_graph(uniform_image(1, 0.0), 8)
    g2 = init_region_graph(uniform_image(2, 0.0), 8)
    with pytest.raises(ShapeMismatch):
        stitch([g1, g1, g1], 8)
    with pytest.raises(ShapeMismatch):
        stitch([g1, g1, g1, g2], 8)
    gb = init_region_graph(uniform_image(1, 0.0, bands=3), 8)
    with pytest.raises(ShapeMismatch):
        stitch([g1, g1, g1, gb], 8)


def test_stitch_conserves_band_totals():
    img = make_image(8, 3, seed=11)
    tasks = partition(img, 2)
    quadrants = []
    for t in tasks:
        g = init_region_graph(t.image, 8)
        hseg_run(g, HsegParams(spectral_weight=0.21, target_regions=4))
        quadrants.append(g)
    out = stitch(quadrants, 8)
    totals = img.pixel_matrix().sum(axis=0)
    out.check_invariants(reference_band_totals=totals)
    assert out.live_count == 16
    labels = label_map_from_graph(out)
    assert labels.label_count() == 16
