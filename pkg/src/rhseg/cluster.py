"""Master/worker distribution of leaf sections over the wire protocol.

The master partitions the image, ships leaf sections round-robin to
{local} plus the remote workers, validates every returned graph, then
stitches and runs the upper levels itself. A worker that errors, lies,
or disappears is quarantined for the run and its sections are
recomputed locally, so outputs match the sequential executor exactly
regardless of worker behavior.
"""

from __future__ import annotations

import logging
import socket
import threading

from .engine import HsegParams, SearchStrategy, Sequential, hseg_run, make_strategy
from .errors import ProtocolError, ValidationFailure, WorkerUnreachable
from .graph import init_region_graph
from .image import HyperImage
from .recursive import (
    RhsegParams,
    RhsegResult,
    assemble_result,
    run_leaf,
    run_upper_levels,
)
from .sections import SectionId, partition
from . import wire

log = logging.getLogger("rhseg.cluster")

DEFAULT_TIMEOUT = 60.0


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint {text!r} is not host:port")
    return host, int(port)


def _strategy_wire_fields(strategy: SearchStrategy) -> tuple[str, int]:
    from .engine import PerPair, PerRegion

    if isinstance(strategy, PerPair):
        return "per-pair", strategy.tile_k
    if isinstance(strategy, PerRegion):
        return "per-region", 16
    return "seq", 16


class ClusterExecutor:
    """Distributes leaf sections to worker endpoints, recurses locally."""

    def __init__(
        self,
        endpoints: list[tuple[str, int]],
        connectivity: int = 8,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        if connectivity != 8:
            raise ValueError("the wire format carries 8-connectivity sections only")
        self.endpoints = list(endpoints)
        self.connectivity = connectivity
        self.timeout = timeout

    def execute(
        self,
        image: HyperImage,
        params: RhsegParams,
        strategy: SearchStrategy = Sequential(),
        profile=None,
    ) -> RhsegResult:
        leaves = partition(image, params.levels)
        slots: list = ["local", *self.endpoints]
        by_slot: dict[int, list] = {k: [] for k in range(len(slots))}
        for idx, task in enumerate(leaves):
            by_slot[idx % len(slots)].append(task)

        graphs, logs = {}, {}
        failed_tasks: list = []
        failed_lock = threading.Lock()
        converged_early = False
        root_initial = None

        threads = []
        for k, endpoint in enumerate(self.endpoints, start=1):
            tasks = by_slot[k]
            if not tasks:
                continue
            t = threading.Thread(
                target=self._serve_endpoint,
                args=(endpoint, tasks, params, strategy, graphs, logs, failed_tasks, failed_lock),
            )
            t.start()
            threads.append(t)

        for task in by_slot[0]:
            graph, records, converged, root0 = run_leaf(
                task, params, strategy, self.connectivity
            )
            converged_early |= converged
            if root0 is not None:
                root_initial = root0
            graphs[task.section_id] = graph
            logs[task.section_id] = records

        for t in threads:
            t.join()

        for task in sorted(failed_tasks, key=lambda t: t.section_id):
            log.warning("recomputing section %s locally", task.section_id)
            graph, records, converged, root0 = run_leaf(
                task, params, strategy, self.connectivity
            )
            converged_early |= converged
            if root0 is not None:
                root_initial = root0
            graphs[task.section_id] = graph
            logs[task.section_id] = records

        upper_root, upper_converged = run_upper_levels(
            params, strategy, self.connectivity, graphs, logs
        )
        converged_early |= upper_converged
        if upper_root is not None:
            root_initial = upper_root

        root = graphs[SectionId(1, 0, 0)]
        return assemble_result(params, logs, root_initial, root, converged_early)

    # -- one endpoint's dispatch loop ---------------------------------

    def _serve_endpoint(
        self, endpoint, tasks, params, strategy, graphs, logs, failed_tasks, failed_lock
    ):
        """Ship this endpoint's sections one at a time; on any failure,
        quarantine the endpoint and queue the rest for local recompute."""
        address = parse_endpoint(endpoint) if isinstance(endpoint, str) else endpoint
        name = f"{address[0]}:{address[1]}"
        strategy_name, tile_k = _strategy_wire_fields(strategy)
        pending = list(tasks)
        try:
            with socket.create_connection(address, timeout=self.timeout) as conn:
                stream_r = conn.makefile("rb")
                stream_w = conn.makefile("wb")
                self._send(stream_w, wire.encode_message(wire.HELLO))
                msg_type, _ = wire.read_message(stream_r)
                if msg_type != wire.HELLO:
                    raise WorkerUnreachable(f"{name}: bad handshake reply {msg_type}")
                while pending:
                    task = pending[0]
                    assign = wire.AssignPayload(
                        section_id=task.section_id,
                        image=task.image,
                        spectral_weight=params.hseg.spectral_weight,
                        section_target=params.target_for(task.section_id),
                        strategy=strategy_name,
                        tile_k=tile_k,
                    )
                    self._send(stream_w, wire.encode_message(wire.ASSIGN, assign.encode()))
                    msg_type, payload = wire.read_message(stream_r)
                    if msg_type == wire.ERROR:
                        raise ValidationFailure(
                            f"{name} reported: {wire.decode_error(payload)}"
                        )
                    if msg_type != wire.RESULT:
                        raise ValidationFailure(f"{name} sent unexpected type {msg_type}")
                    graph, records = self._accept_result(task, payload, params)
                    graphs[task.section_id] = graph
                    logs[task.section_id] = records
                    pending.pop(0)
        except (OSError, ProtocolError, WorkerUnreachable, ValidationFailure) as exc:
            log.warning("worker %s quarantined: %s", name, exc)
            with failed_lock:
                failed_tasks.extend(pending)
        except Exception:  # noqa: BLE001 - a worker must never sink sections
            log.exception("worker %s quarantined by unexpected error", name)
            with failed_lock:
                failed_tasks.extend(pending)

    @staticmethod
    def _send(stream_w, data: bytes):
        stream_w.write(data)
        stream_w.flush()

    def _accept_result(self, task, payload: bytes, params: RhsegParams):
        """Decode and validate one RESULT; raises ValidationFailure."""
        edge = task.edge
        try:
            result = wire.ResultPayload.decode(payload, edge, task.image.bands)
        except ProtocolError as exc:
            raise ValidationFailure(f"undecodable result: {exc}") from exc
        except Exception as exc:  # hostile payloads must not crash the master
            raise ValidationFailure(f"malformed result: {exc}") from exc
        if result.section_id != task.section_id:
            raise ValidationFailure(
                f"result for {result.section_id}, expected {task.section_id}"
            )
        expected_live = min(edge * edge, params.target_for(task.section_id))
        graph = result.graph
        if len(graph.regions) != expected_live:
            raise ValidationFailure(
                f"{len(graph.regions)} regions returned, expected {expected_live}"
            )
        if len(result.records) != edge * edge - expected_live:
            raise ValidationFailure("merge log length inconsistent with region count")
        reference = task.image.pixel_matrix().sum(axis=0)
        try:
            graph.check_invariants(reference_band_totals=reference)
        except AssertionError as exc:
            raise ValidationFailure(f"graph invariants violated: {exc}") from exc
        return graph, result.records


# -- worker side ------------------------------------------------------


class WorkerServer:
    """Serves ASSIGN requests until stopped or SHUTDOWN is received.

    fail_after_n, when set, makes the server drop the connection (and
    stop serving) after that many completed sections, a deterministic
    stand-in for killing the worker process mid-run.
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        workers: int = 1,
        fail_after: int | None = None,
    ):
        self.workers = workers
        self.fail_after = fail_after
        self._served = 0
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(8)
        self._sock.settimeout(0.2)
        self.address = self._sock.getsockname()
        self._threads: list[threading.Thread] = []
        self._accept_thread: threading.Thread | None = None

    @property
    def endpoint(self) -> tuple[str, int]:
        return self.address[0], self.address[1]

    def start(self) -> "WorkerServer":
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()
        return self

    def serve_forever(self):
        """Blocking variant for the CLI; returns after SHUTDOWN."""
        self._accept_loop()

    def stop(self):
        self._stop.set()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=5)
        for t in self._threads:
            t.join(timeout=5)
        self._sock.close()

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            t = threading.Thread(target=self._handle, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _handle(self, conn: socket.socket):
        try:
            stream_r = conn.makefile("rb")
            stream_w = conn.makefile("wb")
            while not self._stop.is_set():
                try:
                    msg_type, payload = wire.read_message(stream_r)
                except ProtocolError:
                    return  # malformed frame or closed peer: drop connection
                if msg_type == wire.HELLO:
                    stream_w.write(wire.encode_message(wire.HELLO))
                    stream_w.flush()
                elif msg_type == wire.SHUTDOWN:
                    self._stop.set()
                    return
                elif msg_type == wire.ASSIGN:
                    reply = self._run_assign(payload)
                    if reply is None:
                        return  # simulated crash: vanish without replying
                    stream_w.write(reply)
                    stream_w.flush()
                else:
                    stream_w.write(wire.encode_error(f"unexpected message {msg_type}"))
                    stream_w.flush()
        finally:
            conn.close()

    def _run_assign(self, payload: bytes) -> bytes | None:
        with self._lock:
            self._served += 1
            if self.fail_after is not None and self._served > self.fail_after:
                self._stop.set()
                return None
        try:
            assign = wire.AssignPayload.decode(payload)
            strategy = make_strategy(assign.strategy, assign.tile_k, self.workers)
            graph = init_region_graph(assign.image, 8)
            params = HsegParams(
                spectral_weight=assign.spectral_weight,
                target_regions=assign.section_target,
            )
            hier = hseg_run(graph, params, strategy)
            result = wire.ResultPayload(assign.section_id, hier.records, graph)
            return wire.encode_message(wire.RESULT, result.encode())
        except Exception as exc:  # noqa: BLE001 - reported to the master
            return wire.encode_error(f"{type(exc).__name__}: {exc}")


def worker_serve(host: str, port: int, workers: int = 1) -> int:
    """Run a worker node until SHUTDOWN; returns 0 for a clean exit."""
    server = WorkerServer(host, port, workers=workers)
    log.info("worker listening on %s:%d", *server.endpoint)
    try:
        server.serve_forever()
    finally:
        server._sock.close()
    return 0
