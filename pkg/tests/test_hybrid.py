import numpy as np
import pytest

import rhseg.hybrid as hybrid_mod
from rhseg.engine import HsegParams, PerPair, PerRegion, Sequential
from rhseg.errors import WorkerPanic
from rhseg.hybrid import HybridExecutor, WorkerPoolConfig
from rhseg.image import HyperImage
from rhseg.recursive import RhsegParams, SequentialExecutor
from rhseg.sections import SectionId


def make_image(edge, bands=1, seed=0):
    rng = np.random.default_rng(seed)
    samples = rng.normal(size=(bands, edge, edge)).astype(np.float32)
    return HyperImage(edge, edge, bands, samples)


def log_tuples(result):
    return [
        (r["level"], tuple(r["section"]), r["survivor"], r["absorbed"], r["dissim"], r["kind"])
        for r in result.flat_log()
    ]


def test_config_validation():
    with pytest.raises(ValueError):
        WorkerPoolConfig(scalar_workers=-1)
    with pytest.raises(ValueError):
        WorkerPoolConfig(scalar_workers=0, fast_strategy=None)
    with pytest.raises(ValueError):
        WorkerPoolConfig(scalar_workers=0, fast_strategy=Sequential())
    WorkerPoolConfig(scalar_workers=0, fast_strategy=PerPair(tile_k=4, workers=2))
    WorkerPoolConfig(scalar_workers=2)


POOLS = [
    WorkerPoolConfig(scalar_workers=1),
    WorkerPoolConfig(scalar_workers=3),
    WorkerPoolConfig(scalar_workers=4, migration_enabled=False),
    WorkerPoolConfig(scalar_workers=0, fast_strategy=PerPair(tile_k=2, workers=2)),
    WorkerPoolConfig(scalar_workers=2, fast_strategy=PerRegion(workers=2)),
    WorkerPoolConfig(
        scalar_workers=2, fast_strategy=PerPair(tile_k=4, workers=3), migration_enabled=False
    ),
]


@pytest.mark.parametrize("levels", [1, 2])
def test_results_identical_across_pools(levels):
    img = make_image(8, 2, seed=17)
    params = RhsegParams(
        HsegParams(spectral_weight=0.21, target_regions=5), levels, section_target_regions=8
    )
    baseline = SequentialExecutor().execute(img, params)
    base_log = log_tuples(baseline)
    for pool in POOLS:
        result = HybridExecutor(pool).execute(img, params)
        assert log_tuples(result) == base_log, pool
        np.testing.assert_array_equal(result.labels.labels, baseline.labels.labels)


def test_single_section_many_workers():
    img = make_image(5, 1, seed=2)
    params = RhsegParams(HsegParams(spectral_weight=0.21, target_regions=3), levels=1)
    ex = HybridExecutor(WorkerPoolConfig(scalar_workers=4))
    result = ex.execute(img, params)
    baseline = SequentialExecutor().execute(img, params)
    assert log_tuples(result) == log_tuples(baseline)
    starts = [e for e in ex.events if e["event"] == "start"]
    finishes = [e for e in ex.events if e["event"] == "finish"]
    assert len(starts) == 1 and len(finishes) == 1
    assert starts[0]["section_id"] == str(SectionId(1, 0, 0))


def test_event_log_shape_and_combines():
    img = make_image(8, 1, seed=4)
    params = RhsegParams(
        HsegParams(spectral_weight=0.21, target_regions=4), levels=3, section_target_regions=3
    )
    ex = HybridExecutor(WorkerPoolConfig(scalar_workers=2))
    ex.execute(img, params)
    for e in ex.events:
        assert set(e) == {"event", "section_id", "worker", "wall_ns"}
        assert e["event"] in ("start", "finish", "migrate", "combine")
    # 16 leaves + 4 mid + 1 root all start and finish exactly once
    # (no migration among scalar-only workers, so no re-starts)
    assert sum(e["event"] == "start" for e in ex.events) == 21
    assert sum(e["event"] == "finish" for e in ex.events) == 21
    # one combine per parent section: four at level 2, one at level 1
    combines = [e["section_id"] for e in ex.events if e["event"] == "combine"]
    assert len(combines) == 5
    assert set(combines) == {
        str(SectionId(2, r, c)) for r in range(2) for c in range(2)
    } | {str(SectionId(1, 0, 0))}
    # wall clock is monotone in emission order
    stamps = [e["wall_ns"] for e in ex.events]
    assert stamps == sorted(stamps)


def test_fast_worker_drains_queue():
    img = make_image(32, 2, seed=6)
    params = RhsegParams(
        HsegParams(spectral_weight=0.21, target_regions=5), levels=3, section_target_regions=10
    )
    ex = HybridExecutor(
        WorkerPoolConfig(scalar_workers=3, fast_strategy=PerPair(tile_k=8, workers=2))
    )
    result = ex.execute(img, params)
    baseline = SequentialExecutor().execute(img, params)
    assert log_tuples(result) == log_tuples(baseline)
    fast_finishes = [
        e for e in ex.events if e["event"] == "finish" and e["worker"] == "fast"
    ]
    assert len(fast_finishes) > 1


def test_migration_hands_running_section_to_fast_worker():
    # one big section, one scalar: the fast worker finds the queue empty,
    # requests migration, and must complete the section itself
    img = make_image(24, 2, seed=7)
    params = RhsegParams(HsegParams(spectral_weight=0.21, target_regions=400), levels=1)
    ex = HybridExecutor(
        WorkerPoolConfig(scalar_workers=1, fast_strategy=PerPair(tile_k=16, workers=2))
    )
    result = ex.execute(img, params)
    baseline = SequentialExecutor().execute(img, params)
    assert log_tuples(result) == log_tuples(baseline)
    np.testing.assert_array_equal(result.labels.labels, baseline.labels.labels)
    migrates = [e for e in ex.events if e["event"] == "migrate"]
    assert migrates, "fast worker never took over the running section"
    assert migrates[0]["worker"] == "fast"
    finishes = [e for e in ex.events if e["event"] == "finish"]
    assert finishes[-1]["worker"] == "fast"


def test_no_migration_when_disabled():
    img = make_image(16, 1, seed=9)
    params = RhsegParams(
        HsegParams(spectral_weight=0.21, target_regions=6),
        levels=2,
        section_target_regions=12,
    )
    ex = HybridExecutor(
        WorkerPoolConfig(
            scalar_workers=2, fast_strategy=PerRegion(workers=2), migration_enabled=False
        )
    )
    result = ex.execute(img, params)
    assert not any(e["event"] == "migrate" for e in ex.events)
    baseline = SequentialExecutor().execute(img, params)
    assert log_tuples(result) == log_tuples(baseline)


def test_panic_retries_once_then_succeeds(monkeypatch):
    img = make_image(8, 1, seed=11)
    params = RhsegParams(
        HsegParams(spectral_weight=0.21, target_regions=4), levels=2, section_target_regions=6
    )
    baseline = SequentialExecutor().execute(img, params)

    real = hybrid_mod.hseg_run
    tripped = []

    def flaky(graph, hseg_params, strategy=Sequential(), profile=None, stop_check=None):
        if not tripped:
            tripped.append(True)
            raise RuntimeError("injected fault")
        return real(graph, hseg_params, strategy, profile=profile, stop_check=stop_check)

    monkeypatch.setattr(hybrid_mod, "hseg_run", flaky)
    result = HybridExecutor(WorkerPoolConfig(scalar_workers=1)).execute(img, params)
    assert tripped
    assert log_tuples(result) == log_tuples(baseline)
    np.testing.assert_array_equal(result.labels.labels, baseline.labels.labels)


def test_panic_twice_raises_worker_panic(monkeypatch):
    img = make_image(4, 1, seed=12)
    params = RhsegParams(HsegParams(spectral_weight=0.21, target_regions=2), levels=1)

    def always_fail(*args, **kwargs):
        raise RuntimeError("injected fault")

    monkeypatch.setattr(hybrid_mod, "hseg_run", always_fail)
    with pytest.raises(WorkerPanic) as info:
        HybridExecutor(WorkerPoolConfig(scalar_workers=2)).execute(img, params)
    assert info.value.section_id == SectionId(1, 0, 0)
