"""Segmentation accuracy against ground truth via plurality assignment.

Each segment is assigned the ground-truth class covering the plurality
of its labeled pixels (ties go to the smaller class id). Unlabeled
pixels (class 0) are excluded from assignment and from every accuracy
figure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .graph import LabelMap, MergeRecord, RegionGraph
from .synth import GroundTruth


@dataclass
class AccuracyReport:
    class_ids: list[int]
    # segment label -> assigned class id; 0 when the segment holds no
    # labeled pixels
    assignments: dict[int, int]
    # (k, k) counts over labeled pixels: rows true class, cols predicted
    confusion: np.ndarray
    per_class_percent: dict[int, float]
    overall_percent: float | None
    labeled_pixels: int

    @property
    def undefined(self) -> bool:
        """True when no pixel was labeled, so accuracy has no meaning."""
        return self.overall_percent is None

    def to_dict(self) -> dict:
        return {
            "class_ids": self.class_ids,
            "assignments": {str(k): v for k, v in sorted(self.assignments.items())},
            "confusion": [[int(v) for v in row] for row in self.confusion],
            "per_class_percent": {str(k): v for k, v in self.per_class_percent.items()},
            "overall_percent": self.overall_percent,
            "labeled_pixels": self.labeled_pixels,
            "undefined": self.undefined,
        }

    def format_text(self) -> str:
        if self.undefined:
            return "accuracy undefined: ground truth has no labeled pixels"
        lines = [
            f"overall accuracy: {self.overall_percent:.2f}% "
            f"over {self.labeled_pixels} labeled pixels",
            f"segments assigned: {sum(1 for v in self.assignments.values() if v)}"
            f" of {len(self.assignments)}",
        ]
        for cid in self.class_ids:
            lines.append(f"  class {cid}: {self.per_class_percent[cid]:.2f}%")
        return "\n".join(lines)


def assign_plurality_classes(label_map: LabelMap, gt: GroundTruth) -> AccuracyReport:
    """Score a label map against ground truth, labeled pixels only."""
    if (label_map.width, label_map.height) != (gt.width, gt.height):
        raise DimensionMismatch(
            f"label map {label_map.width}x{label_map.height} vs "
            f"ground truth {gt.width}x{gt.height}"
        )
    segments = np.asarray(label_map.labels, dtype=np.int64).ravel()
    truth = np.asarray(gt.labels, dtype=np.int64).ravel()
    all_segments = np.unique(segments)

    mask = truth > 0
    labeled = int(mask.sum())
    if labeled == 0:
        return AccuracyReport(
            class_ids=[],
            assignments={int(s): 0 for s in all_segments},
            confusion=np.zeros((0, 0), dtype=np.int64),
            per_class_percent={},
            overall_percent=None,
            labeled_pixels=0,
        )

    seg_l = segments[mask]
    cls_l = truth[mask]
    seg_ids = np.unique(seg_l)
    class_ids = np.unique(cls_l)
    k = len(class_ids)
    sidx = np.searchsorted(seg_ids, seg_l)
    cidx = np.searchsorted(class_ids, cls_l)

    overlap = np.bincount(sidx * k + cidx, minlength=len(seg_ids) * k)
    overlap = overlap.reshape(len(seg_ids), k)
    # argmax takes the first maximum, i.e. the smallest class id on ties
    best = overlap.argmax(axis=1)

    assignments = {int(s): 0 for s in all_segments}
    for s, b in zip(seg_ids, best):
        assignments[int(s)] = int(class_ids[b])

    pred_idx = best[sidx]
    confusion = np.bincount(cidx * k + pred_idx, minlength=k * k).reshape(k, k)
    row_totals = confusion.sum(axis=1)
    per_class = {
        int(class_ids[i]): 100.0 * confusion[i, i] / row_totals[i] for i in range(k)
    }
    overall = 100.0 * np.trace(confusion) / labeled
    return AccuracyReport(
        class_ids=[int(c) for c in class_ids],
        assignments=assignments,
        confusion=confusion,
        per_class_percent=per_class,
        overall_percent=float(overall),
        labeled_pixels=labeled,
    )


def sweep_overall(
    initial: RegionGraph, records: list[MergeRecord], gt: GroundTruth
) -> list[tuple[int, float]]:
    """Overall accuracy at every level of a merge hierarchy.

    Replays the merges over per-region class histograms instead of
    rebuilding a label map per level, so a full sweep costs
    O(merges * classes). Returns (live region count, overall %) rows
    from the initial graph down to the final level; empty when the
    ground truth has no labeled pixels.
    """
    if (initial.width, initial.height) != (gt.width, gt.height):
        raise DimensionMismatch(
            f"region graph {initial.width}x{initial.height} vs "
            f"ground truth {gt.width}x{gt.height}"
        )
    truth = np.asarray(gt.labels, dtype=np.int64).ravel()
    class_ids = np.unique(truth[truth > 0])
    k = len(class_ids)
    if k == 0:
        return []
    labeled = int((truth > 0).sum())

    # plurality-assigned correct pixels of a segment == its histogram max
    hist: dict[int, np.ndarray] = {}
    correct = 0
    for rid, region in initial.regions.items():
        cls = truth[np.asarray(region.pixels, dtype=np.int64)]
        h = np.bincount(np.searchsorted(class_ids, cls[cls > 0]), minlength=k)
        hist[rid] = h
        correct += int(h.max())

    live = initial.live_count
    rows = [(live, 100.0 * correct / labeled)]
    for rec in records:
        survivor = hist[rec.survivor_id]
        absorbed = hist.pop(rec.absorbed_id)
        correct -= int(survivor.max()) + int(absorbed.max())
        survivor += absorbed
        correct += int(survivor.max())
        live -= 1
        rows.append((live, 100.0 * correct / labeled))
    return rows
