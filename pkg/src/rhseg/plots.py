"""Figure rendering for reports; file output only (Agg backend).

Kept out of the package root so nothing drags matplotlib in unless a
report path actually asks for a figure.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def speedup_figure(report, path) -> Path:
    """Horizontal bars of speedup vs the sequential baseline."""
    path = Path(path)
    names = [r.name for r in report.rows]
    speedups = [r.speedup for r in report.rows]
    fig, ax = plt.subplots(figsize=(7, 0.6 * len(names) + 1.5))
    ax.barh(range(len(names)), speedups, color="#4878a8")
    ax.set_yticks(range(len(names)), names)
    ax.invert_yaxis()
    ax.axvline(1.0, color="#888888", linewidth=1, linestyle="--")
    ax.set_xlabel("speedup vs sequential")
    w, h, b = report.image_shape
    ax.set_title(f"search strategies on {w}x{h}x{b}")
    for i, s in enumerate(speedups):
        ax.text(s, i, f" {s:.2f}x", va="center", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def confusion_figure(report, path) -> Path:
    """Heatmap of the confusion matrix with per-cell counts."""
    path = Path(path)
    conf = np.asarray(report.confusion, dtype=np.int64)
    ids = report.class_ids
    fig, ax = plt.subplots(figsize=(1.0 + 0.7 * max(len(ids), 2),) * 2)
    if conf.size:
        im = ax.imshow(conf, cmap="Blues")
        fig.colorbar(im, ax=ax, shrink=0.8)
        threshold = conf.max() / 2 if conf.max() else 1
        for i in range(len(ids)):
            for j in range(len(ids)):
                ax.text(
                    j,
                    i,
                    str(conf[i, j]),
                    ha="center",
                    va="center",
                    fontsize=8,
                    color="white" if conf[i, j] > threshold else "black",
                )
        ax.set_xticks(range(len(ids)), [str(c) for c in ids])
        ax.set_yticks(range(len(ids)), [str(c) for c in ids])
    else:
        ax.text(0.5, 0.5, "no labeled pixels", ha="center", va="center")
        ax.set_axis_off()
    ax.set_xlabel("assigned class")
    ax.set_ylabel("true class")
    title = (
        "accuracy undefined"
        if report.overall_percent is None
        else f"overall {report.overall_percent:.2f}%"
    )
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def sweep_figure(region_counts, overall_percents, path) -> Path:
    """Overall accuracy at each hierarchy level (region count)."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(region_counts, overall_percents, color="#4878a8", linewidth=1.2)
    ax.set_xlabel("regions in hierarchy level")
    ax.set_ylabel("overall accuracy (%)")
    ax.set_title("accuracy across the merge hierarchy")
    if len(region_counts) > 1 and max(region_counts) / max(min(region_counts), 1) > 50:
        ax.set_xscale("log")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path
