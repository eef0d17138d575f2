"""Region adjacency graph under iterative merging, plus the merge log.

The graph is the working state of the segmentation: live regions keyed by
id, each carrying its pixel count, per-band intensity sums and adjacency
set. Merging always keeps the smaller id (canonical survivor), never
renumbers surviving ids mid-run, and adds stored sums so per-band totals
are conserved exactly by construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DeadRegion, DimensionMismatch, LevelOutOfRange, SelfMerge
from .image import HyperImage

OFFSETS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))
OFFSETS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def neighbor_offsets(connectivity: int):
    if connectivity == 4:
        return OFFSETS_4
    if connectivity == 8:
        return OFFSETS_8
    raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")


class MergeKind(enum.IntEnum):
    ADJACENT = 0
    NON_ADJACENT = 1

    @property
    def label(self) -> str:
        return "adjacent" if self is MergeKind.ADJACENT else "non_adjacent"


@dataclass
class MergeRecord:
    step: int
    survivor_id: int
    absorbed_id: int
    dissimilarity: float
    kind: MergeKind


@dataclass
class MergeHierarchy:
    """Ordered log of merges; any level is reconstructible from a prefix.

    converged_early marks a run that stopped above its target because no
    further merge was possible; interrupted marks a run stopped at a step
    boundary by a scheduler (to be resumed elsewhere).
    """

    initial_region_count: int
    records: list[MergeRecord] = field(default_factory=list)
    converged_early: bool = False
    interrupted: bool = False

    def __len__(self) -> int:
        return len(self.records)

    def region_count_after(self, k: int) -> int:
        return self.initial_region_count - k


@dataclass
class LabelMap:
    width: int
    height: int
    labels: np.ndarray  # (height, width) int64

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(
            self.height, self.width
        )

    def label_count(self) -> int:
        return len(np.unique(self.labels))


@dataclass
class Region:
    id: int
    pixel_count: int
    band_sums: np.ndarray  # (B,) float64
    adjacency: set[int]
    pixels: list[int]  # flat row-major member pixel indices


class RegionGraph:
    """Live regions over a fixed pixel grid.

    Owned by exactly one worker at a time; all mutation happens through
    merge_regions at merge-step boundaries.
    """

    def __init__(self, width: int, height: int, bands: int):
        self.width = width
        self.height = height
        self.bands = bands
        self.regions: dict[int, Region] = {}
        self.pixel_assignment = np.empty(width * height, dtype=np.int64)
        self.merges_done = 0

    @property
    def live_count(self) -> int:
        return len(self.regions)

    def live_ids(self) -> list[int]:
        return sorted(self.regions)

    def is_live(self, rid: int) -> bool:
        return rid in self.regions

    def region(self, rid: int) -> Region:
        return self.regions[rid]

    def copy(self) -> "RegionGraph":
        g = RegionGraph(self.width, self.height, self.bands)
        g.pixel_assignment = self.pixel_assignment.copy()
        g.merges_done = self.merges_done
        for rid, r in self.regions.items():
            g.regions[rid] = Region(
                id=r.id,
                pixel_count=r.pixel_count,
                band_sums=r.band_sums.copy(),
                adjacency=set(r.adjacency),
                pixels=list(r.pixels),
            )
        return g

    # -- integrity helpers (used by tests and by result validation) --------

    def check_invariants(self, reference_band_totals: np.ndarray | None = None):
        """Raise AssertionError if a structural invariant is violated."""
        total_px = sum(r.pixel_count for r in self.regions.values())
        assert total_px == self.width * self.height, "pixel conservation violated"
        for rid, r in self.regions.items():
            assert r.pixel_count >= 1
            assert rid not in r.adjacency, f"self-adjacency on {rid}"
            assert len(r.pixels) == r.pixel_count
            for n in r.adjacency:
                assert n in self.regions, f"adjacency to dead region {n}"
                assert rid in self.regions[n].adjacency, "asymmetric adjacency"
        live = set(self.regions)
        assert set(np.unique(self.pixel_assignment)) <= live, "stale assignment"
        for rid, r in self.regions.items():
            assert all(self.pixel_assignment[p] == rid for p in r.pixels)
        if reference_band_totals is not None:
            got = np.zeros(self.bands)
            for rid in sorted(self.regions):
                got += self.regions[rid].band_sums
            np.testing.assert_allclose(got, reference_band_totals, rtol=1e-10)


def init_region_graph(image: HyperImage, connectivity: int = 8) -> RegionGraph:
    """One region per pixel, ids row-major from 0, grid adjacency."""
    offsets = neighbor_offsets(connectivity)
    w, h = image.width, image.height
    g = RegionGraph(w, h, image.bands)
    sums = image.pixel_matrix()  # (pixels, bands) float64
    for r in range(h):
        for c in range(w):
            pid = r * w + c
            adj = set()
            for dr, dc in offsets:
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w:
                    adj.add(rr * w + cc)
            g.regions[pid] = Region(
                id=pid,
                pixel_count=1,
                band_sums=sums[pid].copy(),
                adjacency=adj,
                pixels=[pid],
            )
            g.pixel_assignment[pid] = pid
    return g


def init_from_presegmentation(
    image: HyperImage, labels: LabelMap, connectivity: int = 8
) -> RegionGraph:
    """One region per distinct label; sums accumulated in row-major pixel order."""
    if labels.width != image.width or labels.height != image.height:
        raise DimensionMismatch(
            f"label map {labels.width}x{labels.height} != image {image.width}x{image.height}"
        )
    offsets = neighbor_offsets(connectivity)
    w, h = image.width, image.height
    g = RegionGraph(w, h, image.bands)
    sums = image.pixel_matrix()
    flat = np.asarray(labels.labels, dtype=np.int64).reshape(-1)
    for r in range(h):
        for c in range(w):
            pid = r * w + c
            lab = int(flat[pid])
            reg = g.regions.get(lab)
            if reg is None:
                reg = Region(
                    id=lab,
                    pixel_count=0,
                    band_sums=np.zeros(image.bands),
                    adjacency=set(),
                    pixels=[],
                )
                g.regions[lab] = reg
            reg.pixel_count += 1
            reg.band_sums += sums[pid]
            reg.pixels.append(pid)
            g.pixel_assignment[pid] = lab
    for r in range(h):
        for c in range(w):
            lab = int(flat[r * w + c])
            for dr, dc in offsets:
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w:
                    other = int(flat[rr * w + cc])
                    if other != lab:
                        g.regions[lab].adjacency.add(other)
    return g


def merge_regions(
    graph: RegionGraph, a: int, b: int, dissim: float, kind: MergeKind
) -> MergeRecord:
    """Merge two live regions; the smaller id survives."""
    if a == b:
        raise SelfMerge(f"cannot merge region {a} with itself")
    if a not in graph.regions or b not in graph.regions:
        dead = a if a not in graph.regions else b
        raise DeadRegion(f"region {dead} is not live")
    sid, aid = (a, b) if a < b else (b, a)
    surv = graph.regions[sid]
    gone = graph.regions.pop(aid)

    surv.pixel_count += gone.pixel_count
    surv.band_sums = surv.band_sums + gone.band_sums
    for n in gone.adjacency:
        if n == sid:
            continue
        nreg = graph.regions[n]
        nreg.adjacency.discard(aid)
        nreg.adjacency.add(sid)
    surv.adjacency = (surv.adjacency | gone.adjacency) - {sid, aid}

    if gone.pixels:
        graph.pixel_assignment[np.asarray(gone.pixels, dtype=np.int64)] = sid
        surv.pixels.extend(gone.pixels)

    rec = MergeRecord(
        step=graph.merges_done,
        survivor_id=sid,
        absorbed_id=aid,
        dissimilarity=dissim,
        kind=kind,
    )
    graph.merges_done += 1
    return rec


def dense_renumber(flat_assignment: np.ndarray) -> np.ndarray:
    """Relabel an assignment densely 0..k-1 by first occurrence (row-major)."""
    flat = np.asarray(flat_assignment, dtype=np.int64)
    uniq, inverse = np.unique(flat, return_inverse=True)
    first = np.full(len(uniq), flat.size, dtype=np.int64)
    np.minimum.at(first, inverse, np.arange(flat.size, dtype=np.int64))
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(uniq), dtype=np.int64)
    return rank[inverse]


def label_map_from_graph(graph: RegionGraph) -> LabelMap:
    """Current per-pixel labels, densely renumbered by first occurrence."""
    dense = dense_renumber(graph.pixel_assignment)
    return LabelMap(graph.width, graph.height, dense.reshape(graph.height, graph.width))


def extract_labels(
    hierarchy: MergeHierarchy, initial: RegionGraph, at_region_count: int
) -> LabelMap:
    """Replay merges onto the initial assignment down to a region count."""
    final_count = hierarchy.initial_region_count - len(hierarchy.records)
    if not (final_count <= at_region_count <= hierarchy.initial_region_count):
        raise LevelOutOfRange(
            f"at_region_count {at_region_count} outside "
            f"[{final_count}, {hierarchy.initial_region_count}]"
        )
    k = hierarchy.initial_region_count - at_region_count
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while x in parent:
            x = parent[x]
        return x

    for rec in hierarchy.records[:k]:
        parent[rec.absorbed_id] = rec.survivor_id

    flat = initial.pixel_assignment
    resolved = {rid: find(rid) for rid in np.unique(flat)}
    out = np.array([resolved[int(v)] for v in flat], dtype=np.int64)
    dense = dense_renumber(out)
    return LabelMap(initial.width, initial.height, dense.reshape(initial.height, initial.width))
