"""Iterative best-merge segmentation loop with interchangeable searches.

Each step snapshots the live regions, finds the best spatially adjacent
pair and (when the spectral weight is positive) the best non-adjacent
pair over that same snapshot, applies the merge rule, and mutates the
graph. Best-pair tables are rebuilt from scratch every step.

The three search strategies differ only in how table rows are assigned
to workers; they share the scan kernels and therefore produce
bit-identical tables for any worker count. Ties are broken toward the
lexicographically smallest (min id, max id) pair everywhere.
"""

from __future__ import annotations

import atexit
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import chain

import numpy as np

from . import _kernels
from .dissim import resolve_measure
from .graph import MergeHierarchy, MergeKind, MergeRecord, RegionGraph, merge_regions


@dataclass
class HsegParams:
    """Merge-loop controls: spectral weight w, stopping count, measure."""

    spectral_weight: float = 0.21
    target_regions: int = 1
    measure: str = "sqrt-bsmse"

    def __post_init__(self):
        if not 0.0 <= self.spectral_weight <= 1.0:
            raise ValueError(f"spectral_weight must be in [0, 1], got {self.spectral_weight}")
        if self.target_regions < 1:
            raise ValueError(f"target_regions must be >= 1, got {self.target_regions}")
        resolve_measure(self.measure)


@dataclass(frozen=True)
class Sequential:
    """Single-threaded row scan."""


@dataclass(frozen=True)
class PerRegion:
    """Rows split into one contiguous range per worker; each worker scans
    its regions' full candidate sets."""

    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class PerPair:
    """The pair matrix is traversed in tile_k x tile_k tiles. Row panels
    (tile_k-aligned) go to a dynamic work queue; inside a panel the
    kernel folds column tiles in ascending order, so the table never
    depends on tile size, batching, or scheduling."""

    tile_k: int = 16
    workers: int = 1

    def __post_init__(self):
        if self.tile_k < 1:
            raise ValueError("tile_k must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


SearchStrategy = Sequential | PerRegion | PerPair

STRATEGY_NAMES = {"seq": Sequential, "per-region": PerRegion, "per-pair": PerPair}


def make_strategy(name: str, tile_k: int = 16, workers: int = 1) -> SearchStrategy:
    if name == "seq":
        return Sequential()
    if name == "per-region":
        return PerRegion(workers=workers)
    if name == "per-pair":
        return PerPair(tile_k=tile_k, workers=workers)
    raise ValueError(f"unknown strategy {name!r}; choose from {sorted(STRATEGY_NAMES)}")


def strategy_label(strategy: SearchStrategy) -> str:
    """Human-readable name, e.g. 'per-pair(tile=16, workers=4)'."""
    if isinstance(strategy, Sequential):
        return "seq"
    if isinstance(strategy, PerRegion):
        return f"per-region(workers={strategy.workers})"
    return f"per-pair(tile={strategy.tile_k}, workers={strategy.workers})"


@dataclass
class BestPairTable:
    """Per-region best partner and dissimilarity for one search stage.

    ids are the live region ids ascending; partner_ids[k] is -1 and
    dissims[k] is +inf when region ids[k] has no eligible partner.
    """

    stage: MergeKind
    ids: np.ndarray
    partner_ids: np.ndarray
    dissims: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class ProfileStats:
    """Wall-clock split of a run: time inside dissimilarity scans vs total."""

    dissim_ns: int = 0
    total_ns: int = 0
    steps: int = 0

    @property
    def dissim_fraction(self) -> float:
        if self.total_ns == 0:
            return 0.0
        return self.dissim_ns / self.total_ns


# One shared pool per worker count. Scan tasks never submit nested work,
# so sharing across engines/executors cannot deadlock.
_POOLS: dict[int, ThreadPoolExecutor] = {}


def _pool(workers: int) -> ThreadPoolExecutor:
    pool = _POOLS.get(workers)
    if pool is None:
        pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix=f"scan{workers}")
        _POOLS[workers] = pool
    return pool


@atexit.register
def _shutdown_pools():
    for pool in _POOLS.values():
        pool.shutdown(wait=False, cancel_futures=True)
    _POOLS.clear()


@dataclass
class GraphSnapshot:
    """Immutable per-step view: counts, band sums, CSR adjacency, all in
    ascending-id index space."""

    ids: np.ndarray
    counts: np.ndarray
    sums: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray


def snapshot(graph: RegionGraph) -> GraphSnapshot:
    order = sorted(graph.regions)
    n = len(order)
    ids = np.array(order, dtype=np.int64)
    counts = np.empty(n)
    sums = np.empty((n, graph.bands))
    degrees = np.empty(n, dtype=np.int64)
    for k, rid in enumerate(order):
        reg = graph.regions[rid]
        counts[k] = reg.pixel_count
        sums[k] = reg.band_sums
        degrees[k] = len(reg.adjacency)
    total = int(degrees.sum())
    neighbor_ids = np.fromiter(
        chain.from_iterable(graph.regions[rid].adjacency for rid in order),
        dtype=np.int64,
        count=total,
    )
    cols = np.searchsorted(ids, neighbor_ids)
    rows = np.repeat(np.arange(n, dtype=np.int64), degrees)
    order_ix = np.lexsort((cols, rows))
    indices = cols[order_ix]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])
    return GraphSnapshot(ids, counts, sums, indptr, indices)


def _split_ranges(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n))
    base, extra = divmod(n, parts)
    ranges = []
    start = 0
    for k in range(parts):
        stop = start + base + (1 if k < extra else 0)
        if stop > start:
            ranges.append((start, stop))
        start = stop
    return ranges


def _scan(snap: GraphSnapshot, stage: MergeKind, strategy: SearchStrategy):
    n = len(snap.ids)
    out_d = np.empty(n)
    out_j = np.empty(n, dtype=np.int64)
    args = (snap.counts, snap.sums, snap.indptr, snap.indices, out_d, out_j)

    if stage is MergeKind.ADJACENT:
        def run(lo, hi, _tile=None):
            _kernels.scan_adjacent(lo, hi, *args)
    else:
        def run(lo, hi, tile):
            _kernels.scan_nonadjacent(lo, hi, tile, *args)

    if isinstance(strategy, Sequential):
        run(0, n, max(n, 1))
    elif isinstance(strategy, PerRegion):
        ranges = _split_ranges(n, strategy.workers)
        if len(ranges) <= 1:
            run(0, n, max(n, 1))
        else:
            pool = _pool(strategy.workers)
            futs = [pool.submit(run, lo, hi, max(n, 1)) for lo, hi in ranges]
            for f in futs:
                f.result()
    else:
        tile = strategy.tile_k
        panels = (n + tile - 1) // tile
        batches = _split_ranges(panels, 4 * strategy.workers)
        if len(batches) <= 1 or strategy.workers == 1:
            run(0, n, tile)
        else:
            pool = _pool(strategy.workers)
            futs = [
                pool.submit(run, lo * tile, min(hi * tile, n), tile)
                for lo, hi in batches
            ]
            for f in futs:
                f.result()
    return out_d, out_j


def _table(snap: GraphSnapshot, stage: MergeKind, out_d, out_j) -> BestPairTable:
    partner = np.where(out_j >= 0, snap.ids[np.maximum(out_j, 0)], np.int64(-1))
    return BestPairTable(stage=stage, ids=snap.ids, partner_ids=partner, dissims=out_d)


def search_table(
    graph_or_snapshot,
    stage: MergeKind,
    strategy: SearchStrategy,
    profile: ProfileStats | None = None,
) -> BestPairTable:
    snap = graph_or_snapshot
    if isinstance(snap, RegionGraph):
        snap = snapshot(snap)
    if profile is None:
        out_d, out_j = _scan(snap, stage, strategy)
    else:
        t0 = time.perf_counter_ns()
        out_d, out_j = _scan(snap, stage, strategy)
        profile.dissim_ns += time.perf_counter_ns() - t0
    return _table(snap, stage, out_d, out_j)


def parallel_search_per_region(graph, stage: MergeKind, workers: int) -> BestPairTable:
    return search_table(graph, stage, PerRegion(workers=workers))


def parallel_search_per_pair(
    graph, stage: MergeKind, tile_k: int, workers: int
) -> BestPairTable:
    return search_table(graph, stage, PerPair(tile_k=tile_k, workers=workers))


def reduce_best(table: BestPairTable):
    """Global minimum of a table as ((min_id, max_id), dissim), or None.

    np.argmin returns the first index holding the minimum; rows are in
    ascending-id order and each row already carries its smallest best
    partner, which together realize the canonical tie-break.
    """
    if len(table) == 0:
        return None
    k = int(np.argmin(table.dissims))
    d = float(table.dissims[k])
    if not np.isfinite(d):
        return None
    a = int(table.ids[k])
    b = int(table.partner_ids[k])
    return ((a, b) if a < b else (b, a)), d


def best_adjacent_pair(graph: RegionGraph, strategy: SearchStrategy = Sequential()):
    """Minimum-dissimilarity spatially adjacent pair, or None."""
    return reduce_best(search_table(graph, MergeKind.ADJACENT, strategy))


def best_nonadjacent_pair(graph: RegionGraph, strategy: SearchStrategy = Sequential()):
    """Minimum-dissimilarity spatially non-adjacent pair, or None."""
    return reduce_best(search_table(graph, MergeKind.NON_ADJACENT, strategy))


def hseg_step(
    graph: RegionGraph,
    params: HsegParams,
    strategy: SearchStrategy = Sequential(),
    profile: ProfileStats | None = None,
) -> MergeRecord | None:
    """One merge: adjacent candidate vs weighted non-adjacent candidate.

    The non-adjacent pair wins iff w > 0, it exists, and d_s < w * d_a
    (d_a = +inf when no adjacent pair exists). Both stages are evaluated
    against the same pre-step snapshot. Returns None when no merge is
    possible.
    """
    resolve_measure(params.measure)
    snap = snapshot(graph)
    adjacent = reduce_best(search_table(snap, MergeKind.ADJACENT, strategy, profile))
    chosen_pair, chosen_d, kind = None, None, None
    if params.spectral_weight > 0.0:
        spectral = reduce_best(
            search_table(snap, MergeKind.NON_ADJACENT, strategy, profile)
        )
        if spectral is not None:
            d_a = adjacent[1] if adjacent is not None else np.inf
            if spectral[1] < params.spectral_weight * d_a:
                chosen_pair, chosen_d = spectral
                kind = MergeKind.NON_ADJACENT
    if chosen_pair is None and adjacent is not None:
        chosen_pair, chosen_d = adjacent
        kind = MergeKind.ADJACENT
    if chosen_pair is None:
        return None
    if profile is not None:
        profile.steps += 1
    return merge_regions(graph, chosen_pair[0], chosen_pair[1], chosen_d, kind)


def hseg_run(
    graph: RegionGraph,
    params: HsegParams,
    strategy: SearchStrategy = Sequential(),
    profile: ProfileStats | None = None,
    stop_check=None,
) -> MergeHierarchy:
    """Merge until target_regions remain (or no merge is possible).

    stop_check, when given, is called between steps and ends the run
    early with hierarchy.interrupted set; schedulers use it to migrate a
    partially merged graph at a step boundary.
    """
    t0 = time.perf_counter_ns()
    hierarchy = MergeHierarchy(initial_region_count=graph.live_count)
    while graph.live_count > params.target_regions:
        if stop_check is not None and stop_check():
            hierarchy.interrupted = True
            break
        record = hseg_step(graph, params, strategy, profile)
        if record is None:
            hierarchy.converged_early = True
            break
        hierarchy.records.append(record)
    if profile is not None:
        profile.total_ns += time.perf_counter_ns() - t0
    return hierarchy
