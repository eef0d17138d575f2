"""Benchmark harness: wall-clock per search configuration.

Every configuration is verified to produce the sequential baseline's
exact label map and merge log before any timing happens, so the speedup
table only ever compares identical work. Times are medians over a
configurable number of repeats.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .engine import ProfileStats, SearchStrategy, Sequential, strategy_label
from .errors import RhsegError
from .image import HyperImage
from .recursive import RhsegParams, RhsegResult, SequentialExecutor, rhseg_run


@dataclass
class BenchRow:
    name: str
    median_s: float
    speedup: float
    dissim_fraction: float
    repeats: int


@dataclass
class BenchReport:
    rows: list[BenchRow]
    image_shape: tuple[int, int, int]  # (width, height, bands)
    parameters: dict = field(default_factory=dict)

    def format_text(self) -> str:
        w, h, b = self.image_shape
        name_w = max(16, max((len(r.name) for r in self.rows), default=0) + 2)
        head = f"{'configuration':<{name_w}}{'median (s)':>12}{'speedup':>10}{'dissim %':>10}"
        lines = [f"benchmark on {w}x{h}x{b}", head, "-" * len(head)]
        for r in self.rows:
            lines.append(
                f"{r.name:<{name_w}}{r.median_s:>12.4f}{r.speedup:>9.2f}x"
                f"{100.0 * r.dissim_fraction:>9.1f}%"
            )
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "image_shape": list(self.image_shape),
            "parameters": self.parameters,
            "rows": [
                {
                    "name": r.name,
                    "median_s": r.median_s,
                    "speedup": r.speedup,
                    "dissim_fraction": r.dissim_fraction,
                    "repeats": r.repeats,
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv_text(self) -> str:
        lines = ["name,median_s,speedup,dissim_fraction,repeats"]
        for r in self.rows:
            lines.append(
                f"{r.name},{r.median_s!r},{r.speedup!r},{r.dissim_fraction!r},{r.repeats}"
            )
        return "\n".join(lines) + "\n"


def _outputs(result: RhsegResult) -> tuple[np.ndarray, list]:
    return np.asarray(result.labels.labels), list(result.flat_log())


def bench(
    image: HyperImage,
    params: RhsegParams,
    strategies: list[tuple[str, SearchStrategy]],
    repeats: int = 3,
    connectivity: int = 8,
) -> BenchReport:
    """Time each named strategy against the sequential baseline.

    The baseline row is always first; a configuration whose outputs
    differ from the baseline aborts the run rather than reporting a
    meaningless time.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    matrix: list[tuple[str, SearchStrategy]] = list(strategies)
    if not matrix or not isinstance(matrix[0][1], Sequential):
        matrix.insert(0, (strategy_label(Sequential()), Sequential()))

    executor = SequentialExecutor(connectivity)

    def run(strategy: SearchStrategy, profile: ProfileStats | None = None):
        return rhseg_run(image, params, strategy, executor, profile=profile)

    base_profile = ProfileStats()
    base_labels, base_log = _outputs(run(matrix[0][1], base_profile))

    rows: list[BenchRow] = []
    baseline_median = None
    for name, strategy in matrix:
        if rows:  # verify against the baseline before timing
            profile = ProfileStats()
            labels, log = _outputs(run(strategy, profile))
            if not np.array_equal(labels, base_labels) or log != base_log:
                raise RhsegError(
                    f"outputs for {name!r} differ from the sequential baseline"
                )
        else:
            profile = base_profile
        samples = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            run(strategy)
            samples.append(time.perf_counter() - t0)
        median = statistics.median(samples)
        if baseline_median is None:
            baseline_median = median
        rows.append(
            BenchRow(
                name=name,
                median_s=median,
                speedup=baseline_median / median,
                dissim_fraction=profile.dissim_fraction,
                repeats=repeats,
            )
        )
    return BenchReport(
        rows=rows,
        image_shape=(image.width, image.height, image.bands),
        parameters={
            "spectral_weight": params.hseg.spectral_weight,
            "target_regions": params.hseg.target_regions,
            "levels": params.levels,
            "connectivity": connectivity,
            "repeats": repeats,
        },
    )
