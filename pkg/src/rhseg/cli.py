"""Command line interface: synth, segment, accuracy, bench, worker.

Exit codes: 0 success, 1 usage error (bad flags or combinations),
2 runtime failure (bad input data, I/O, protocol errors).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import hsio, manifest
from .accuracy import assign_plurality_classes, sweep_overall
from .bench import bench
from .cluster import ClusterExecutor, WorkerServer, parse_endpoint
from .dissim import MEASURES
from .engine import (
    STRATEGY_NAMES,
    HsegParams,
    Sequential,
    make_strategy,
    strategy_label,
)
from .errors import RhsegError
from .hybrid import HybridExecutor, WorkerPoolConfig
from .recursive import RhsegParams, SequentialExecutor, rhseg_run
from .synth import GroundTruth, gen_synthetic

WORKERS_ENV = "RHSEG_WORKERS"


class UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this CLI reserves 2 for runtime
    # failures, so route them through UsageError -> exit 1 instead
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Validated flag set for `segment`."""

    input_header: Path
    out_stem: Path
    executor: str = "seq"
    strategy_name: str = "seq"
    tile_k: int = 16
    worker_count: int = 1
    endpoints: tuple[str, ...] = ()
    spawn_loopback: int | None = None
    levels: int = 1
    weight: float = 0.21
    measure: str = "sqrt-bsmse"
    target_regions: int = 100
    section_target: int | None = None
    connectivity: int = 8
    scalar_workers: int = 3
    migration: bool = True
    at_regions: int | None = None
    sweep: bool = False
    gt_path: Path | None = None
    drop_bands: tuple[int, ...] = ()
    crop: tuple[int, int, int, int] | None = None
    seed: int = 0

    def validate(self) -> "RunConfig":
        if self.executor not in ("seq", "hybrid", "cluster"):
            raise UsageError(f"unknown executor {self.executor!r}")
        if self.strategy_name not in STRATEGY_NAMES:
            raise UsageError(f"unknown strategy {self.strategy_name!r}")
        if not 0.0 <= self.weight <= 1.0:
            raise UsageError(f"--weight must be in [0, 1], got {self.weight}")
        if self.measure not in MEASURES:
            raise UsageError(
                f"unknown measure {self.measure!r}; choose from {sorted(MEASURES)}"
            )
        if self.levels < 1:
            raise UsageError(f"--levels must be >= 1, got {self.levels}")
        if self.target_regions < 1:
            raise UsageError("--target-regions must be >= 1")
        if self.section_target is not None and self.section_target < 1:
            raise UsageError("--section-target must be >= 1")
        if self.tile_k < 1:
            raise UsageError("--tile-k must be >= 1")
        if self.worker_count < 1:
            raise UsageError("--workers count must be >= 1")
        if self.connectivity not in (4, 8):
            raise UsageError("--connectivity must be 4 or 8")
        if self.executor == "cluster":
            if self.connectivity != 8:
                raise UsageError("--executor cluster supports --connectivity 8 only")
        elif self.endpoints:
            raise UsageError("worker endpoints are only valid with --executor cluster")
        if self.executor == "hybrid":
            if self.scalar_workers < 0:
                raise UsageError("--scalar-workers must be >= 0")
            if self.scalar_workers == 0 and self.strategy_name == "seq":
                raise UsageError(
                    "hybrid with --scalar-workers 0 needs a parallel --strategy"
                )
        if self.sweep and self.gt_path is None:
            raise UsageError("--sweep requires --gt")
        return self

    def parameters(self) -> dict:
        return {
            "input": self.input_header.name,
            "executor": self.executor,
            "strategy": self.strategy_name,
            "tile_k": self.tile_k,
            "workers": self.worker_count,
            "endpoints": list(self.endpoints),
            "loopback_workers": self.spawn_loopback,
            "levels": self.levels,
            "spectral_weight": self.weight,
            "measure": self.measure,
            "target_regions": self.target_regions,
            "section_target": self.section_target,
            "connectivity": self.connectivity,
            "scalar_workers": self.scalar_workers if self.executor == "hybrid" else None,
            "migration": self.migration if self.executor == "hybrid" else None,
            "drop_bands": list(self.drop_bands),
            "crop": list(self.crop) if self.crop else None,
            "seed": self.seed,
        }


def _parse_workers(text: str) -> tuple[int | None, tuple[str, ...]]:
    """'4' -> (4, ()); 'h1:5000,h2:5000' -> (None, endpoints)."""
    text = text.strip()
    if not text:
        raise UsageError("--workers requires a value")
    if text.isdigit():
        return int(text), ()
    endpoints = tuple(part.strip() for part in text.split(",") if part.strip())
    for ep in endpoints:
        try:
            parse_endpoint(ep)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return None, endpoints


def _workers_or_env(value: str | None) -> str | None:
    return value if value is not None else os.environ.get(WORKERS_ENV)


def _int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise UsageError(f"{flag} expects comma-separated integers") from exc


def _header_path(text: str) -> Path:
    path = Path(text)
    if path.suffix == hsio.HEADER_SUFFIX:
        return path
    return path.with_suffix(hsio.HEADER_SUFFIX) if path.suffix == hsio.RAW_SUFFIX \
        else Path(str(path) + hsio.HEADER_SUFFIX)


def _out_path(stem: Path, suffix: str) -> Path:
    return stem.parent / (stem.name + suffix)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="rhseg",
        description="Hierarchical region-growing segmentation for "
        "hyperspectral image cubes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene with ground truth")
    p.add_argument("--edge", type=int, required=True, help="image edge in pixels")
    p.add_argument("--bands", type=int, required=True, help="spectral band count")
    p.add_argument("--classes", type=int, required=True, help="distinct classes")
    p.add_argument("--regions", type=int, required=True, help="rectangular patches")
    p.add_argument("--noise-sigma", type=float, default=0.0, help="Gaussian noise")
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.add_argument("--out", required=True, help="output stem (writes .json/.raw/.gt.pgm)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("segment", help="segment an image cube")
    p.add_argument("--input", required=True, help="image header (.json) or stem")
    p.add_argument("--out", required=True, help="output stem")
    p.add_argument("--executor", choices=("seq", "hybrid", "cluster"), default="seq")
    p.add_argument("--strategy", choices=sorted(STRATEGY_NAMES), default="seq")
    p.add_argument("--tile-k", type=int, default=16, help="per-pair column tile")
    p.add_argument(
        "--workers",
        default=None,
        help="search worker count, or comma-separated host:port worker endpoints "
        f"for --executor cluster (default ${WORKERS_ENV} or 1; an integer with "
        "cluster spawns that many loopback workers, 0 keeps all sections local)",
    )
    p.add_argument("--levels", type=int, default=1, help="recursion levels")
    p.add_argument("--weight", type=float, default=0.21, help="spectral merge weight")
    p.add_argument("--measure", default="sqrt-bsmse",
                   help="dissimilarity measure (sqrt-bsmse is the only one)")
    p.add_argument("--target-regions", type=int, default=100)
    p.add_argument("--section-target", type=int, default=None,
                   help="regions to leave per section above level 1")
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--scalar-workers", type=int, default=3,
                   help="hybrid executor: scalar worker count")
    p.add_argument("--no-migration", action="store_true",
                   help="hybrid executor: disable section migration")
    p.add_argument("--at-regions", type=int, default=None,
                   help="also write the label map at this hierarchy level")
    p.add_argument("--sweep", action="store_true",
                   help="write accuracy per hierarchy level (needs --gt)")
    p.add_argument("--gt", default=None, help="ground-truth PGM for --sweep")
    p.add_argument("--drop-bands", default=None, help="band indices to remove, e.g. 3,7")
    p.add_argument("--crop", default=None, help="crop rectangle x,y,w,h before running")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("accuracy", help="score a label map against ground truth")
    p.add_argument("--labels", required=True, help="segmentation PGM")
    p.add_argument("--gt", required=True, help="ground-truth PGM (0 = unlabeled)")
    p.add_argument("--out", default=None,
                   help="report stem (writes .json/.csv/.png); text goes to stdout")
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("bench", help="time search strategies on one image")
    p.add_argument("--input", default=None, help="image header (.json) or stem")
    p.add_argument("--edge", type=int, default=64, help="synthetic edge (no --input)")
    p.add_argument("--bands", type=int, default=32)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--regions", type=int, default=4)
    p.add_argument("--noise-sigma", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--strategies",
        default="seq",
        help="comma list of name[:workers[:tile]] entries, e.g. "
        "seq,per-region:4,per-pair:4:16",
    )
    p.add_argument("--workers", default=None, help="default worker count for entries")
    p.add_argument("--tile-k", type=int, default=16)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--weight", type=float, default=0.21)
    p.add_argument("--target-regions", type=int, default=100)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--out", default=None, help="report stem (writes .json/.csv/.png)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("worker", help="serve sections for a cluster master")
    p.add_argument("--listen", default=None, help="bind address host:port")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0, help="0 picks a free port")
    p.add_argument("--workers", default=None, help="search worker count per section")
    p.set_defaults(func=cmd_worker)
    return parser


def cmd_synth(args) -> int:
    image, gt = gen_synthetic(
        args.edge, args.bands, args.classes, args.regions, args.noise_sigma, args.seed
    )
    stem = Path(args.out)
    stem.parent.mkdir(parents=True, exist_ok=True)
    header_path, raw_path = hsio.write_image(image, stem)
    from .graph import LabelMap

    gt_path = hsio.write_labels(
        LabelMap(gt.width, gt.height, gt.labels), _out_path(stem, ".gt.pgm")
    )
    print(f"wrote {header_path} {raw_path} {gt_path}")
    return 0


def _config_from_args(args) -> RunConfig:
    workers_text = _workers_or_env(args.workers)
    count, endpoints = (1, ())
    spawn = None
    if args.executor == "cluster":
        # topology must be explicit; a count spawns loopback workers
        if args.workers is None:
            raise UsageError("--executor cluster requires --workers")
        count_or_none, endpoints = _parse_workers(args.workers)
        if count_or_none is not None:
            spawn = count_or_none
        count = 1
    elif workers_text is not None:
        count_or_none, endpoints = _parse_workers(workers_text)
        if count_or_none is None:
            raise UsageError("worker endpoints are only valid with --executor cluster")
        count = count_or_none
    return RunConfig(
        input_header=_header_path(args.input),
        out_stem=Path(args.out),
        executor=args.executor,
        strategy_name=args.strategy,
        tile_k=args.tile_k,
        worker_count=count,
        endpoints=endpoints,
        spawn_loopback=spawn,
        levels=args.levels,
        weight=args.weight,
        measure=args.measure,
        target_regions=args.target_regions,
        section_target=args.section_target,
        connectivity=args.connectivity,
        scalar_workers=args.scalar_workers,
        migration=not args.no_migration,
        at_regions=args.at_regions,
        sweep=args.sweep,
        gt_path=Path(args.gt) if args.gt else None,
        drop_bands=_int_list(args.drop_bands, "--drop-bands") if args.drop_bands else (),
        crop=_crop_tuple(args.crop) if args.crop else None,
    ).validate()


def _crop_tuple(text: str) -> tuple[int, int, int, int]:
    values = _int_list(text, "--crop")
    if len(values) != 4:
        raise UsageError("--crop expects x,y,w,h")
    return values


def _read_gt(path: Path) -> GroundTruth:
    labels = hsio.read_labels(path)
    return GroundTruth(labels.width, labels.height, labels.labels)


def cmd_segment(args) -> int:
    config = _config_from_args(args)
    image = hsio.read_image(config.input_header)
    if config.drop_bands:
        image = image.drop_bands(config.drop_bands)
    if config.crop:
        image = image.crop(*config.crop)

    params = RhsegParams(
        hseg=HsegParams(
            spectral_weight=config.weight,
            target_regions=config.target_regions,
            measure=config.measure,
        ),
        levels=config.levels,
        section_target_regions=config.section_target,
    )
    strategy = make_strategy(config.strategy_name, config.tile_k, config.worker_count)

    servers: list[WorkerServer] = []
    try:
        if config.executor == "hybrid":
            executor = HybridExecutor(
                WorkerPoolConfig(
                    scalar_workers=config.scalar_workers,
                    fast_strategy=None if isinstance(strategy, Sequential) else strategy,
                    migration_enabled=config.migration,
                ),
                connectivity=config.connectivity,
            )
        elif config.executor == "cluster":
            endpoints = list(config.endpoints)
            if config.spawn_loopback:
                servers = [
                    WorkerServer("127.0.0.1", 0).start()
                    for _ in range(config.spawn_loopback)
                ]
                endpoints = ["%s:%d" % s.endpoint for s in servers]
            executor = ClusterExecutor(endpoints, connectivity=config.connectivity)
        else:
            executor = SequentialExecutor(connectivity=config.connectivity)
        result = rhseg_run(image, params, strategy, executor)
    finally:
        for server in servers:
            server.stop()

    stem = config.out_stem
    stem.parent.mkdir(parents=True, exist_ok=True)
    labels_path = hsio.write_labels(result.labels, _out_path(stem, ".pgm"))
    log_path = _out_path(stem, ".merges.jsonl")
    with open(log_path, "w") as fh:
        for record in result.flat_log():
            fh.write(json.dumps(record) + "\n")

    extra: list[tuple[str, Path]] = []
    if config.executor == "hybrid":
        events_path = _out_path(stem, ".events.jsonl")
        with open(events_path, "w") as fh:
            for event in executor.events:
                fh.write(json.dumps(event) + "\n")
        extra.append(("events", events_path))
    if config.at_regions is not None:
        at_path = hsio.write_labels(
            result.labels_at(config.at_regions),
            _out_path(stem, f".at{config.at_regions}.pgm"),
        )
        extra.append((f"labels_at_{config.at_regions}", at_path))
    if config.sweep:
        rows = sweep_overall(
            result.root_initial, result.root_hierarchy.records, _read_gt(config.gt_path)
        )
        sweep_csv = _out_path(stem, ".sweep.csv")
        with open(sweep_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["regions", "overall_percent"])
            writer.writerows(rows)
        extra.append(("sweep", sweep_csv))
        if rows:
            from . import plots

            sweep_png = plots.sweep_figure(
                [r for r, _ in rows], [p for _, p in rows], _out_path(stem, ".sweep.png")
            )
            extra.append(("sweep_figure", sweep_png))

    doc = manifest.write_manifest(
        _out_path(stem, ".manifest.json"),
        config.parameters(),
        hashed=[("labels", labels_path), ("merge_log", log_path)],
        extra=extra,
    )
    print(
        f"{result.graph.live_count} regions "
        f"({len(result.root_hierarchy.records)} root merges); "
        f"wrote {labels_path} {log_path}"
    )
    print(f"content hash {doc['content_hash']}")
    return 0


def cmd_accuracy(args) -> int:
    labels = hsio.read_labels(Path(args.labels))
    report = assign_plurality_classes(labels, _read_gt(Path(args.gt)))
    print(report.format_text())
    if args.out:
        stem = Path(args.out)
        stem.parent.mkdir(parents=True, exist_ok=True)
        json_path = _out_path(stem, ".json")
        json_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        csv_path = _out_path(stem, ".csv")
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true_class", *[f"pred_{c}" for c in report.class_ids]])
            for cid, row in zip(report.class_ids, report.confusion):
                writer.writerow([cid, *[int(v) for v in row]])
        from . import plots

        png_path = plots.confusion_figure(report, _out_path(stem, ".png"))
        print(f"wrote {json_path} {csv_path} {png_path}")
    return 0


def cmd_bench(args) -> int:
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    if args.input:
        image = hsio.read_image(_header_path(args.input))
    else:
        image, _ = gen_synthetic(
            args.edge, args.bands, args.classes, args.regions,
            args.noise_sigma, args.seed,
        )
    workers_text = _workers_or_env(args.workers)
    default_workers = 1
    if workers_text is not None:
        count, endpoints = _parse_workers(workers_text)
        if count is None:
            raise UsageError("bench --workers takes a count, not endpoints")
        default_workers = count

    matrix = []
    for entry in args.strategies.split(","):
        entry = entry.strip()
        if not entry:
            continue
        parts = entry.split(":")
        if parts[0] not in STRATEGY_NAMES:
            raise UsageError(f"unknown strategy {parts[0]!r} in --strategies")
        try:
            workers = int(parts[1]) if len(parts) > 1 else default_workers
            tile = int(parts[2]) if len(parts) > 2 else args.tile_k
        except ValueError as exc:
            raise UsageError(f"bad strategy entry {entry!r}") from exc
        strategy = make_strategy(parts[0], tile, workers)
        matrix.append((strategy_label(strategy), strategy))

    params = RhsegParams(
        hseg=HsegParams(
            spectral_weight=args.weight, target_regions=args.target_regions
        ),
        levels=args.levels,
    )
    report = bench(
        image, params, matrix, repeats=args.repeats, connectivity=args.connectivity
    )
    print(report.format_text())
    if args.out:
        stem = Path(args.out)
        stem.parent.mkdir(parents=True, exist_ok=True)
        json_path = _out_path(stem, ".json")
        json_path.write_text(report.to_json() + "\n")
        csv_path = _out_path(stem, ".csv")
        csv_path.write_text(report.to_csv_text())
        from . import plots

        png_path = plots.speedup_figure(report, _out_path(stem, ".png"))
        print(f"wrote {json_path} {csv_path} {png_path}")
    return 0


def cmd_worker(args) -> int:
    workers_text = _workers_or_env(args.workers)
    workers = 1
    if workers_text is not None:
        count, endpoints = _parse_workers(workers_text)
        if count is None or endpoints:
            raise UsageError("worker --workers takes a count")
        workers = count
    host, port = args.host, args.port
    if args.listen is not None:
        try:
            host, port = parse_endpoint(args.listen)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    server = WorkerServer(host, port, workers=workers)
    print("listening on %s:%d" % server.endpoint, flush=True)
    try:
        server.serve_forever()
    finally:
        server._sock.close()
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return 0 if not exc.code else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RhsegError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
