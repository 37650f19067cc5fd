import json

import pytest

from softsplat import InvalidArgumentError
from softsplat._kernels import available_backends
from softsplat.bench import format_record, host_record, run_bench, run_case

CASE_KEYS = {
    "kind", "op", "mode", "height", "width", "channels", "precision",
    "workers", "backend", "reps", "median_ms", "p95_ms", "checksum",
}


def test_host_record_lists_backends():
    rec = host_record()
    assert rec["kind"] == "host"
    assert "numpy" in rec["backends"]
    json.dumps(rec)


def test_case_record_schema():
    rec = run_case("splat", height=16, width=16, mode="softmax", reps=5, seed=3)
    assert set(rec) == CASE_KEYS
    assert rec["kind"] == "case"
    assert rec["median_ms"] > 0.0
    assert rec["p95_ms"] >= rec["median_ms"]
    assert len(rec["checksum"]) == 16
    json.loads(format_record(rec))


def test_case_rejects_bad_arguments():
    with pytest.raises(InvalidArgumentError, match="at least 5"):
        run_case("splat", height=8, width=8, reps=3)
    with pytest.raises(InvalidArgumentError, match="unknown benchmark op"):
        run_case("transpose", height=8, width=8)


def test_checksum_repeatable_and_worker_independent():
    base = run_case("splat", height=24, width=20, mode="softmax", reps=5, seed=11)
    again = run_case("splat", height=24, width=20, mode="softmax", reps=5, seed=11)
    assert base["checksum"] == again["checksum"]
    for backend in available_backends():
        one = run_case("splat", height=24, width=20, mode="softmax", reps=5,
                       seed=11, backend=backend, workers=1)
        many = run_case("splat", height=24, width=20, mode="softmax", reps=5,
                        seed=11, backend=backend, workers=8)
        assert one["checksum"] == many["checksum"], backend


def test_seed_changes_checksum():
    a = run_case("backward_warp", height=16, width=16, reps=5, seed=1)
    b = run_case("backward_warp", height=16, width=16, reps=5, seed=2)
    assert a["checksum"] != b["checksum"]


def test_run_bench_streams_expected_rows():
    rows = list(run_bench(sizes=((12, 10),), modes=("average",), workers=(1,),
                          backends=("numpy",), reps=5, protocol=False))
    assert rows[0]["kind"] == "host"
    cases = rows[1:]
    # One splat mode plus the fixed backward-warp row.
    assert [r["op"] for r in cases] == ["splat", "backward_warp"]
    assert all(r["backend"] == "numpy" for r in cases)
    assert all(r["height"] == 12 and r["width"] == 10 for r in cases)


def test_metric_chain_case_runs():
    rec = run_case("splat_with_metric", height=12, width=12, reps=5, seed=0)
    assert rec["op"] == "splat_with_metric"
    assert len(rec["checksum"]) == 16
