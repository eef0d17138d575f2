"""Heterogeneous single-node executor with queue draining and migration.

One optional fast worker (parallel search strategy) and C scalar workers
(sequential strategy) pull section tasks from a shared queue. When the
queue is empty the fast worker asks the lowest-id running scalar section
to migrate: the scalar worker releases the graph at its next merge-step
boundary and the fast worker resumes from that exact state. Merge
decisions depend only on graph state, so every interleaving produces
the sequential executor's exact output; only the event log varies.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field

from .engine import SearchStrategy, Sequential, hseg_run
from .errors import WorkerPanic
from .graph import RegionGraph, init_region_graph
from .image import HyperImage
from .recursive import RhsegParams, RhsegResult, assemble_result
from .sections import SectionId, partition, section_side, stitch


@dataclass
class WorkerPoolConfig:
    """Shape of the worker pool: C scalar workers, an optional fast
    worker with its own (parallel) strategy, and the migration switch."""

    scalar_workers: int = 0
    fast_strategy: SearchStrategy | None = None
    migration_enabled: bool = True

    def __post_init__(self):
        if self.scalar_workers < 0:
            raise ValueError("scalar_workers must be >= 0")
        if self.scalar_workers == 0 and self.fast_strategy is None:
            raise ValueError("need at least one worker (scalar or fast)")
        if isinstance(self.fast_strategy, Sequential):
            raise ValueError("the fast worker takes a parallel strategy")


QUEUED, RUNNING, HANDED, FINISHED = "queued", "running", "handed", "finished"


@dataclass
class SectionState:
    section_id: SectionId
    make_graph: object  # () -> RegionGraph, re-callable for the one retry
    status: str = QUEUED
    owner: str | None = None
    migrate_requested: threading.Event = field(default_factory=threading.Event)
    attempts: int = 0
    partial: tuple | None = None  # (graph, records) while handed off


class HybridExecutor:
    """Runs the full quadtree on the configured worker pool.

    After execute() returns, .events holds the run's event log (dicts
    with event/section_id/worker/wall_ns keys, in emission order).
    """

    def __init__(self, config: WorkerPoolConfig, connectivity: int = 8):
        self.config = config
        self.connectivity = connectivity
        self.events: list[dict] = []

    # -- controller state (valid during one execute call) -------------

    def _log(self, event: str, sid: SectionId, worker: str):
        self.events.append(
            {
                "event": event,
                "section_id": str(sid),
                "worker": worker,
                "wall_ns": time.perf_counter_ns(),
            }
        )

    def execute(
        self,
        image: HyperImage,
        params: RhsegParams,
        strategy: SearchStrategy = Sequential(),
        profile=None,
    ) -> RhsegResult:
        fast = self.config.fast_strategy
        if fast is None and not isinstance(strategy, Sequential):
            fast = strategy
        if fast is None and self.config.scalar_workers == 0:
            raise ValueError("no workers: scalar_workers == 0 and no parallel strategy")

        self.events = []
        self._cond = threading.Condition()
        self._ready: deque[SectionId] = deque()
        self._states: dict[SectionId, SectionState] = {}
        self._results: dict[SectionId, tuple[RegionGraph, list]] = {}
        self._missing_children: dict[SectionId, int] = {}
        self._migration_target: SectionId | None = None
        self._done = False
        self._failure: BaseException | None = None
        self._converged_early = False
        self._root_initial: RegionGraph | None = None
        self._params = params

        for task in partition(image, params.levels):
            sid = task.section_id
            sub = task.image
            state = SectionState(sid, lambda s=sub: init_region_graph(s, self.connectivity))
            self._states[sid] = state
            self._ready.append(sid)
        for level in range(params.levels - 1, 0, -1):
            for r in range(section_side(level)):
                for c in range(section_side(level)):
                    sid = SectionId(level, r, c)
                    self._states[sid] = SectionState(sid, self._make_stitcher(sid))
                    self._missing_children[sid] = 4

        threads = []
        for k in range(self.config.scalar_workers):
            t = threading.Thread(
                target=self._worker, args=(f"scalar-{k}", Sequential(), False)
            )
            threads.append(t)
        if fast is not None:
            threads.append(threading.Thread(target=self._worker, args=("fast", fast, True)))
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        if self._failure is not None:
            raise self._failure

        root = SectionId(1, 0, 0)
        logs = {sid: self._results[sid][1] for sid in self._states}
        return assemble_result(
            params, logs, self._root_initial, self._results[root][0], self._converged_early
        )

    def _make_stitcher(self, sid: SectionId):
        def make():
            children = [self._results[k][0] for k in sid.children()]
            return stitch(children, self.connectivity)

        return make

    # -- task acquisition ----------------------------------------------

    def _next_task(self, worker: str, is_fast: bool):
        with self._cond:
            while True:
                if self._failure is not None or self._done:
                    return None
                if is_fast:
                    handed = sorted(
                        s.section_id for s in self._states.values() if s.status == HANDED
                    )
                    if handed:
                        sid = handed[0]
                        state = self._states[sid]
                        graph, records = state.partial
                        state.partial = None
                        state.status = RUNNING
                        state.owner = worker
                        state.migrate_requested = threading.Event()
                        if self._migration_target == sid:
                            self._migration_target = None
                        self._log("migrate", sid, worker)
                        return state, graph, records
                    if self._migration_target is None:
                        if self._ready:
                            return self._claim(self._ready.popleft(), worker)
                        if self.config.migration_enabled:
                            running = sorted(
                                s.section_id
                                for s in self._states.values()
                                if s.status == RUNNING and s.owner != worker
                            )
                            if running:
                                self._migration_target = running[0]
                                self._states[running[0]].migrate_requested.set()
                else:
                    if self._ready:
                        return self._claim(self._ready.popleft(), worker)
                self._cond.wait()

    def _claim(self, sid: SectionId, worker: str):
        state = self._states[sid]
        state.status = RUNNING
        state.owner = worker
        self._log("start", sid, worker)
        return state, None, None

    # -- worker body -----------------------------------------------------

    def _worker(self, name: str, strategy: SearchStrategy, is_fast: bool):
        while True:
            item = self._next_task(name, is_fast)
            if item is None:
                return
            state, graph, prior = item
            sid = state.section_id
            try:
                if graph is None:
                    graph = state.make_graph()
                    prior = []
                    if sid.level == 1:
                        with self._cond:
                            self._root_initial = graph.copy()
                stop_check = None if is_fast else state.migrate_requested.is_set
                hier = hseg_run(
                    graph,
                    self._params.section_params(sid),
                    strategy,
                    stop_check=stop_check,
                )
                records = prior + hier.records
                if hier.interrupted:
                    with self._cond:
                        state.status = HANDED
                        state.owner = None
                        state.partial = (graph, records)
                        self._cond.notify_all()
                    continue
                self._finish(state, graph, records, hier.converged_early, name)
            except Exception as exc:  # noqa: BLE001 - panic path re-queues once
                self._panic(state, exc)

    def _finish(self, state, graph, records, converged_early, worker):
        sid = state.section_id
        with self._cond:
            state.status = FINISHED
            state.owner = None
            self._results[sid] = (graph, records)
            self._converged_early |= converged_early
            if self._migration_target == sid:
                self._migration_target = None
            self._log("finish", sid, worker)
            if sid.level == 1:
                self._done = True
            else:
                parent = sid.parent()
                self._missing_children[parent] -= 1
                if self._missing_children[parent] == 0:
                    self._ready.append(parent)
                    self._log("combine", parent, worker)
            self._cond.notify_all()

    def _panic(self, state, exc):
        sid = state.section_id
        with self._cond:
            state.attempts += 1
            state.owner = None
            state.partial = None
            state.migrate_requested = threading.Event()
            if self._migration_target == sid:
                self._migration_target = None
            if state.attempts <= 1:
                state.status = QUEUED
                self._ready.append(sid)
            else:
                self._failure = WorkerPanic(sid, exc)
            self._cond.notify_all()
