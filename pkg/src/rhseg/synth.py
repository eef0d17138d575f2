"""Synthetic hyperspectral scenes with known ground truth.

A scene is a set of axis-aligned rectangular patches tiling the image,
each patch assigned one of k classes. Every class gets a distinct
spectral signature (base levels linearly spaced per band) and optional
per-sample Gaussian noise drawn deterministically from a seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleLayout
from .image import HyperImage

# spectral separation between adjacent class signatures, per band
CLASS_STEP = 100.0
BAND_SLOPE = 10.0


@dataclass
class GroundTruth:
    """Per-pixel class ids; 0 marks an unlabeled pixel."""

    width: int
    height: int
    labels: np.ndarray  # (height, width) int64, values 0..k

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(
            self.height, self.width
        )

    @property
    def class_ids(self) -> list[int]:
        ids = np.unique(self.labels)
        return [int(v) for v in ids if v != 0]


def class_signatures(classes: int, bands: int) -> np.ndarray:
    """(classes, bands) base levels: linear in class index, offset per band."""
    levels = CLASS_STEP * (np.arange(classes, dtype=np.float64) + 1.0)
    slope = BAND_SLOPE * np.arange(bands, dtype=np.float64)
    return levels[:, None] + slope[None, :]


def _layout(edge: int, regions: int) -> list[tuple[int, int, int, int]]:
    """Tile the edge-square grid with `regions` rectangles, row-major.

    Rows of patches are horizontal strips; each strip is cut vertically
    into near-equal patches. Returns (x, y, w, h) tuples.
    """
    strips = max(1, math.isqrt(regions))
    per_strip = [regions // strips] * strips
    for i in range(regions % strips):
        per_strip[i] += 1
    if strips > edge or max(per_strip) > edge:
        raise InfeasibleLayout(
            f"{regions} rectangles do not fit a {edge}x{edge} grid"
        )
    rects: list[tuple[int, int, int, int]] = []
    y = 0
    for s, count in enumerate(per_strip):
        h = edge // strips + (1 if s < edge % strips else 0)
        x = 0
        for p in range(count):
            w = edge // count + (1 if p < edge % count else 0)
            rects.append((x, y, w, h))
            x += w
        y += h
    return rects


def gen_synthetic(
    edge: int,
    bands: int,
    classes: int,
    regions: int,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> tuple[HyperImage, GroundTruth]:
    """Build an edge-square, `bands`-band scene of rectangular patches.

    Patch p takes class (p mod k) + 1, so class ids run 1..k and every
    pixel is labeled. Same seed, same arguments: identical samples.
    """
    if classes < 1 or regions < classes:
        raise InfeasibleLayout(
            f"need regions >= classes >= 1, got {regions} regions / {classes} classes"
        )
    if edge < 1 or bands < 1:
        raise InfeasibleLayout(f"degenerate scene {edge}x{edge}x{bands}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")

    labels = np.zeros((edge, edge), dtype=np.int64)
    for p, (x, y, w, h) in enumerate(_layout(edge, regions)):
        labels[y : y + h, x : x + w] = p % classes + 1

    cube = class_signatures(classes, bands)[labels - 1]  # (edge, edge, bands)
    cube = cube.transpose(2, 0, 1)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        cube = cube + rng.normal(0.0, noise_sigma, size=cube.shape)
    samples = np.ascontiguousarray(cube, dtype=np.float32)
    return HyperImage(edge, edge, bands, samples), GroundTruth(edge, edge, labels)
