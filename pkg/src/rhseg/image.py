"""Hyperspectral image cube: square N x N grid of B-band spectral vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch


@dataclass
class HyperImage:
    """Square image of per-pixel spectral vectors.

    Samples are stored band-sequential as a float32 array of shape
    (bands, height, width), so one band is one contiguous plane.
    """

    width: int
    height: int
    bands: int
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width != self.height:
            raise DimensionMismatch(
                f"only square images supported, got {self.width}x{self.height}"
            )
        if self.width < 1 or self.bands < 1:
            raise DimensionMismatch("width and bands must be >= 1")
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32)
        expect = (self.bands, self.height, self.width)
        if self.samples.shape != expect:
            if self.samples.size == self.bands * self.height * self.width:
                self.samples = self.samples.reshape(expect)
            else:
                raise DimensionMismatch(
                    f"sample count {self.samples.size} != {self.bands}x{self.height}x{self.width}"
                )

    @property
    def edge(self) -> int:
        return self.width

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    def pixel_vector(self, row: int, col: int) -> np.ndarray:
        """Spectral vector of one pixel, promoted to float64."""
        return self.samples[:, row, col].astype(np.float64)

    def pixel_matrix(self) -> np.ndarray:
        """All pixel vectors as a (pixels, bands) float64 matrix, row-major."""
        b, h, w = self.samples.shape
        return self.samples.reshape(b, h * w).T.astype(np.float64)

    def subimage(self, row: int, col: int, edge: int) -> "HyperImage":
        """Copy of the square window with top-left corner (row, col)."""
        block = self.samples[:, row : row + edge, col : col + edge].copy()
        return HyperImage(width=edge, height=edge, bands=self.bands, samples=block)

    def drop_bands(self, indices) -> "HyperImage":
        """New image without the listed band indices."""
        keep = [b for b in range(self.bands) if b not in set(indices)]
        if not keep:
            raise DimensionMismatch("cannot drop every band")
        return HyperImage(
            width=self.width,
            height=self.height,
            bands=len(keep),
            samples=self.samples[keep].copy(),
        )

    def crop(self, x: int, y: int, w: int, h: int) -> "HyperImage":
        """Crop to the rectangle at (x, y); must stay square and in-bounds."""
        if w != h:
            raise DimensionMismatch(f"crop must stay square, got {w}x{h}")
        if x < 0 or y < 0 or x + w > self.width or y + h > self.height:
            raise DimensionMismatch("crop rectangle out of bounds")
        return self.subimage(y, x, w)
