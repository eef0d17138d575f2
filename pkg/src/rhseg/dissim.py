"""Region dissimilarity measures.

The built-in measure is the square root of the band sum mean squared
error between region mean vectors, scaled by n_i * n_j / (n_i + n_j):

    d(i, j) = sqrt( (n_i * n_j / (n_i + n_j)) * sum_b (mu_ib - mu_jb)^2 )

Means are recomputed from the stored band sums at evaluation time, all
arithmetic is 64-bit, and the band sum runs in ascending band order.
Every execution path in the package (scan kernels, oracle comparisons,
remote workers) must reproduce these bit patterns exactly, so this
written-out scalar form is the reference; keep the operation order in
sync with the kernels in _kernels.py.
"""

from __future__ import annotations

import math

from .errors import BandMismatch


def sqrt_bsmse(i, j) -> float:
    """Dissimilarity between two regions (or any objects with
    pixel_count and band_sums)."""
    if len(i.band_sums) != len(j.band_sums):
        raise BandMismatch(
            f"regions have {len(i.band_sums)} and {len(j.band_sums)} bands"
        )
    return sqrt_bsmse_scalar(i.pixel_count, j.pixel_count, i.band_sums, j.band_sums)


def sqrt_bsmse_scalar(count_i, count_j, sums_i, sums_j) -> float:
    """Scalar reference evaluation from raw counts and band sums."""
    ni = float(count_i)
    nj = float(count_j)
    coef = ni * nj / (ni + nj)
    s = 0.0
    for b in range(len(sums_i)):
        t = float(sums_i[b]) / ni - float(sums_j[b]) / nj
        s += t * t
    return math.sqrt(coef * s)


MEASURES = {"sqrt-bsmse": sqrt_bsmse}


def resolve_measure(name: str):
    try:
        return MEASURES[name]
    except KeyError:
        raise ValueError(
            f"unknown measure {name!r}; available: {sorted(MEASURES)}"
        ) from None
