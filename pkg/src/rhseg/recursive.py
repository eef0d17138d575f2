"""Recursive divide-and-conquer driver over the section quadtree.

Leaf sections run the merge loop to the per-section stopping count;
each 2x2 sibling group is stitched and re-run at the parent level; the
level-1 root runs to the final target. Executors plug in to decide
where and when section work happens; outputs are bit-identical across
all of them because section results depend only on section inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import HsegParams, ProfileStats, SearchStrategy, Sequential, hseg_run
from .graph import (
    LabelMap,
    MergeHierarchy,
    MergeRecord,
    RegionGraph,
    extract_labels,
    init_region_graph,
    label_map_from_graph,
)
from .image import HyperImage
from .sections import SectionId, partition, section_side, stitch


@dataclass
class RhsegParams:
    """Recursion depth plus the merge-loop parameters.

    section_target_regions is the stopping count for every section above
    the root; it defaults to the final target."""

    hseg: HsegParams = field(default_factory=HsegParams)
    levels: int = 1
    section_target_regions: int | None = None

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.section_target_regions is None:
            self.section_target_regions = self.hseg.target_regions
        if self.section_target_regions < 1:
            raise ValueError("section_target_regions must be >= 1")

    def target_for(self, section_id: SectionId) -> int:
        if section_id.level == 1:
            return self.hseg.target_regions
        return self.section_target_regions

    def section_params(self, section_id: SectionId) -> HsegParams:
        return HsegParams(
            spectral_weight=self.hseg.spectral_weight,
            target_regions=self.target_for(section_id),
            measure=self.hseg.measure,
        )


@dataclass
class RhsegResult:
    """Everything a run produces: the final graph and labels, the
    per-section merge logs (deepest level first, row-major within a
    level), and the root's pre-merge graph for level re-extraction."""

    section_logs: list[tuple[SectionId, list[MergeRecord]]]
    root_initial: RegionGraph
    root_hierarchy: MergeHierarchy
    graph: RegionGraph
    labels: LabelMap
    converged_early: bool = False

    def labels_at(self, region_count: int) -> LabelMap:
        return extract_labels(self.root_hierarchy, self.root_initial, region_count)

    def flat_log(self):
        """One dict per merge with a global step counter, for JSONL."""
        step = 0
        for sid, records in self.section_logs:
            for rec in records:
                yield {
                    "step": step,
                    "level": sid.level,
                    "section": [sid.row, sid.col],
                    "survivor": rec.survivor_id,
                    "absorbed": rec.absorbed_id,
                    "dissim": rec.dissimilarity,
                    "kind": rec.kind.label,
                }
                step += 1


def log_order(levels: int) -> list[SectionId]:
    """Canonical section order for concatenated logs: level L down to 1,
    row-major within each level."""
    out = []
    for level in range(levels, 0, -1):
        side = section_side(level)
        for r in range(side):
            for c in range(side):
                out.append(SectionId(level, r, c))
    return out


def assemble_result(
    params: RhsegParams,
    logs: dict[SectionId, list[MergeRecord]],
    root_initial: RegionGraph,
    root_graph: RegionGraph,
    converged_early: bool,
) -> RhsegResult:
    ordered = [(sid, logs[sid]) for sid in log_order(params.levels)]
    root_hierarchy = MergeHierarchy(
        initial_region_count=root_initial.live_count,
        records=list(logs[SectionId(1, 0, 0)]),
        converged_early=converged_early,
    )
    return RhsegResult(
        section_logs=ordered,
        root_initial=root_initial,
        root_hierarchy=root_hierarchy,
        graph=root_graph,
        labels=label_map_from_graph(root_graph),
        converged_early=converged_early,
    )


def run_leaf(
    task,
    params: RhsegParams,
    strategy: SearchStrategy,
    connectivity: int,
    profile: ProfileStats | None = None,
):
    """Run one leaf section; returns (graph, records, converged_early,
    pre-merge copy when the leaf is the level-1 root)."""
    graph = init_region_graph(task.image, connectivity)
    root_initial = graph.copy() if task.section_id.level == 1 else None
    hier = hseg_run(graph, params.section_params(task.section_id), strategy, profile)
    return graph, hier.records, hier.converged_early, root_initial


def run_upper_levels(
    params: RhsegParams,
    strategy: SearchStrategy,
    connectivity: int,
    graphs: dict[SectionId, RegionGraph],
    logs: dict[SectionId, list[MergeRecord]],
    profile: ProfileStats | None = None,
):
    """Stitch and re-run every level above the leaves, mutating graphs
    and logs in place; returns (root_initial, converged_early)."""
    converged_early = False
    root_initial = None
    for level in range(params.levels - 1, 0, -1):
        side = section_side(level)
        for r in range(side):
            for c in range(side):
                sid = SectionId(level, r, c)
                children = [graphs[k] for k in sid.children()]
                graph = stitch(children, connectivity)
                if level == 1:
                    root_initial = graph.copy()
                hier = hseg_run(graph, params.section_params(sid), strategy, profile)
                converged_early |= hier.converged_early
                graphs[sid] = graph
                logs[sid] = hier.records
    return root_initial, converged_early


class SequentialExecutor:
    """Reference executor: every section in canonical order, in-process."""

    def __init__(self, connectivity: int = 8):
        self.connectivity = connectivity

    def execute(
        self,
        image: HyperImage,
        params: RhsegParams,
        strategy: SearchStrategy = Sequential(),
        profile: ProfileStats | None = None,
    ) -> RhsegResult:
        graphs: dict[SectionId, RegionGraph] = {}
        logs: dict[SectionId, list[MergeRecord]] = {}
        converged_early = False
        root_initial = None

        for task in partition(image, params.levels):
            graph, records, converged, root0 = run_leaf(
                task, params, strategy, self.connectivity, profile
            )
            converged_early |= converged
            if root0 is not None:
                root_initial = root0
            graphs[task.section_id] = graph
            logs[task.section_id] = records

        upper_root, upper_converged = run_upper_levels(
            params, strategy, self.connectivity, graphs, logs, profile
        )
        converged_early |= upper_converged
        if upper_root is not None:
            root_initial = upper_root

        root = graphs[SectionId(1, 0, 0)]
        return assemble_result(params, logs, root_initial, root, converged_early)


def rhseg_run(
    image: HyperImage,
    params: RhsegParams,
    strategy: SearchStrategy = Sequential(),
    executor=None,
    profile: ProfileStats | None = None,
) -> RhsegResult:
    """Run the full recursion with the given executor (sequential when
    none is supplied)."""
    if executor is None:
        executor = SequentialExecutor()
    return executor.execute(image, params, strategy, profile=profile)
