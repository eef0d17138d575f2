"""Quadrant partitioning and seam stitching for the recursive driver.

An L-level run works on a quadtree: 4^(L-1) leaf sections at level L,
grouped four at a time (NW, NE, SW, SE) into parents up to the single
level-1 root. Stitching reassembles four merged sibling graphs into one
parent graph by renumbering ids densely in section order and linking
regions across the internal seams; it never merges anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndivisibleImage, ShapeMismatch
from .graph import Region, RegionGraph
from .image import HyperImage


@dataclass(frozen=True, order=True)
class SectionId:
    level: int
    row: int
    col: int

    def __str__(self) -> str:
        return f"L{self.level}[{self.row},{self.col}]"

    def parent(self) -> "SectionId":
        return SectionId(self.level - 1, self.row // 2, self.col // 2)

    def children(self) -> list["SectionId"]:
        # NW, NE, SW, SE
        return [
            SectionId(self.level + 1, 2 * self.row + dr, 2 * self.col + dc)
            for dr, dc in ((0, 0), (0, 1), (1, 0), (1, 1))
        ]


@dataclass
class SectionTask:
    section_id: SectionId
    origin: tuple[int, int]  # (row, col) pixel offset in the full image
    edge: int
    image: HyperImage | None = None  # leaf payload; parents carry graphs


def section_side(level: int) -> int:
    return 2 ** (level - 1)


def total_sections(levels: int) -> int:
    return sum(section_side(l) ** 2 for l in range(1, levels + 1))


def partition(image: HyperImage, levels: int) -> list[SectionTask]:
    """Leaf sections of an L-level run, row-major, with sub-cube payloads."""
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    side = section_side(levels)
    if image.edge % side != 0:
        raise IndivisibleImage(
            f"edge {image.edge} not divisible by {side} (levels={levels})"
        )
    sub_edge = image.edge // side
    tasks = []
    for r in range(side):
        for c in range(side):
            origin = (r * sub_edge, c * sub_edge)
            tasks.append(
                SectionTask(
                    section_id=SectionId(levels, r, c),
                    origin=origin,
                    edge=sub_edge,
                    image=image.subimage(origin[0], origin[1], sub_edge),
                )
            )
    return tasks


def _seam_pairs(edge: int, connectivity: int) -> list[tuple[int, int, int, int]]:
    """Pixel pairs ((r1,c1),(r2,c2)) crossing the internal seams of a
    2x2 assembly of edge-sized tiles, flattened to 4-tuples."""
    e = edge
    n = 2 * e
    pairs = []
    for r in range(n):
        pairs.append((r, e - 1, r, e))
        if connectivity == 8:
            if r + 1 < n:
                pairs.append((r, e - 1, r + 1, e))
                pairs.append((r, e, r + 1, e - 1))
    for c in range(n):
        pairs.append((e - 1, c, e, c))
        if connectivity == 8:
            if c + 1 < n:
                pairs.append((e - 1, c, e, c + 1))
                pairs.append((e - 1, c + 1, e, c))
    return pairs


def stitch(quadrants: list[RegionGraph], connectivity: int = 8) -> RegionGraph:
    """Reassemble four sibling graphs (NW, NE, SW, SE) into one.

    Ids are renumbered densely: each section's live ids in ascending
    order, sections in NW, NE, SW, SE order. Every pixel adjacency
    across the two internal seams (under the given connectivity) links
    the owning regions. No merges happen here, so pixel counts and band
    sums are carried over exactly.
    """
    if len(quadrants) != 4:
        raise ShapeMismatch(f"stitch needs exactly 4 quadrants, got {len(quadrants)}")
    e = quadrants[0].width
    bands = quadrants[0].bands
    for g in quadrants:
        if g.width != e or g.height != e:
            raise ShapeMismatch("quadrants differ in size")
        if g.bands != bands:
            raise ShapeMismatch("quadrants differ in band count")

    n = 2 * e
    out = RegionGraph(n, n, bands)
    id_maps: list[dict[int, int]] = []
    next_id = 0
    for g in quadrants:
        m = {}
        for rid in sorted(g.regions):
            m[rid] = next_id
            next_id += 1
        id_maps.append(m)

    offsets = ((0, 0), (0, e), (e, 0), (e, e))
    assignment = out.pixel_assignment.reshape(n, n)
    for g, m, (orow, ocol) in zip(quadrants, id_maps, offsets):
        local = g.pixel_assignment.reshape(e, e)
        remap_keys = np.array(sorted(m), dtype=np.int64)
        remap_vals = np.array([m[k] for k in sorted(m)], dtype=np.int64)
        assignment[orow : orow + e, ocol : ocol + e] = remap_vals[
            np.searchsorted(remap_keys, local)
        ]
        for rid in sorted(g.regions):
            reg = g.regions[rid]
            pixels = []
            for p in reg.pixels:
                lr, lc = divmod(p, e)
                pixels.append((orow + lr) * n + (ocol + lc))
            out.regions[m[rid]] = Region(
                id=m[rid],
                pixel_count=reg.pixel_count,
                band_sums=reg.band_sums.copy(),
                adjacency={m[a] for a in reg.adjacency},
                pixels=pixels,
            )

    flat = out.pixel_assignment.reshape(n, n)
    for r1, c1, r2, c2 in _seam_pairs(e, connectivity):
        a = int(flat[r1, c1])
        b = int(flat[r2, c2])
        if a != b:
            out.regions[a].adjacency.add(b)
            out.regions[b].adjacency.add(a)
    return out
