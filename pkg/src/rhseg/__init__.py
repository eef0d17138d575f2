"""Hierarchical region-growing segmentation for hyperspectral cubes.

Interchangeable search engines (sequential, per-region, per-pair tiled),
a recursive divide-and-stitch driver, a hybrid scalar/fast scheduler,
and a distributed master/worker executor, all producing bit-identical
segmentations.
"""

from .accuracy import AccuracyReport, assign_plurality_classes, sweep_overall
from .bench import BenchReport, BenchRow, bench
from .cluster import ClusterExecutor, WorkerServer, worker_serve
from .dissim import sqrt_bsmse
from .engine import (
    BestPairTable,
    HsegParams,
    PerPair,
    PerRegion,
    ProfileStats,
    SearchStrategy,
    Sequential,
    best_adjacent_pair,
    best_nonadjacent_pair,
    hseg_run,
    hseg_step,
    make_strategy,
    parallel_search_per_pair,
    parallel_search_per_region,
    reduce_best,
    search_table,
)
from .errors import RhsegError
from .graph import (
    LabelMap,
    MergeHierarchy,
    MergeKind,
    MergeRecord,
    Region,
    RegionGraph,
    extract_labels,
    init_from_presegmentation,
    init_region_graph,
    label_map_from_graph,
)
from .hsio import read_image, read_labels, write_image, write_labels
from .hybrid import HybridExecutor, WorkerPoolConfig
from .image import HyperImage
from .recursive import (
    RhsegParams,
    RhsegResult,
    SequentialExecutor,
    rhseg_run,
)
from .sections import SectionId, SectionTask, partition, stitch
from .synth import GroundTruth, gen_synthetic

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "BenchReport",
    "BenchRow",
    "BestPairTable",
    "ClusterExecutor",
    "GroundTruth",
    "HsegParams",
    "HybridExecutor",
    "HyperImage",
    "LabelMap",
    "MergeHierarchy",
    "MergeKind",
    "MergeRecord",
    "PerPair",
    "PerRegion",
    "ProfileStats",
    "Region",
    "RegionGraph",
    "RhsegError",
    "RhsegParams",
    "RhsegResult",
    "SearchStrategy",
    "SectionId",
    "SectionTask",
    "Sequential",
    "SequentialExecutor",
    "WorkerPoolConfig",
    "WorkerServer",
    "assign_plurality_classes",
    "bench",
    "best_adjacent_pair",
    "best_nonadjacent_pair",
    "extract_labels",
    "gen_synthetic",
    "hseg_run",
    "hseg_step",
    "init_from_presegmentation",
    "init_region_graph",
    "label_map_from_graph",
    "make_strategy",
    "parallel_search_per_pair",
    "parallel_search_per_region",
    "partition",
    "read_image",
    "read_labels",
    "reduce_best",
    "rhseg_run",
    "search_table",
    "sqrt_bsmse",
    "stitch",
    "sweep_overall",
    "worker_serve",
    "write_image",
    "write_labels",
]
