import csv
import io
import json

import pytest

from mims.config import SimConfig
from mims.experiments import compare_modes, run
from mims.stats import (CSV_FIELDS, SEGMENTS, effective_bw_utilization, emit_report,
                        latency_breakdown, normalize)

GOLDEN_HEAD = (
    "workload,mode,sched_latency,compression,merge,cores,cycles,committed,runtime_ns,"
    "requests,reads,writes,useful_bytes,speedup,bw_utilization,norm_bw,"
)


@pytest.fixture(scope="module")
def reports(small_gups):
    cfg, traces = small_gups
    return compare_modes(cfg, ("DDR", "MI_MUL"), traces)


def test_csv_header_is_stable(reports):
    text = emit_report(reports, "csv").decode()
    head = text.splitlines()[0]
    assert head.startswith(GOLDEN_HEAD)
    assert head.endswith("energy_total_j,power_total_w,edp_js,norm_edp")
    assert tuple(head.split(",")) == CSV_FIELDS
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["mode"] for r in rows] == ["DDR", "MI_MUL"]


def test_every_segment_has_a_column():
    for c in ("read", "write"):
        for s in SEGMENTS:
            assert f"{c}_{s}_ns" in CSV_FIELDS


def test_jsonl_rows(reports):
    lines = emit_report(reports, "jsonl").decode().splitlines()
    assert len(lines) == 2
    assert list(json.loads(lines[1]).keys()) == list(CSV_FIELDS)


def test_text_report_mentions_the_mode(reports):
    txt = emit_report(reports[1]).decode()
    assert "MI_MUL" in txt and "speedup vs DDR" in txt


def test_unknown_format(reports):
    with pytest.raises(ValueError):
        emit_report(reports, "xml")


def test_emit_is_deterministic(small_gups):
    cfg, traces = small_gups
    a = emit_report(compare_modes(cfg, ("DDR", "MI_1"), traces), "csv")
    b = emit_report(compare_modes(cfg, ("DDR", "MI_1"), traces), "csv")
    assert a == b


def test_ddr_normalizes_to_one(reports):
    ddr = reports[0]
    assert ddr.speedup == 1.0 and ddr.norm_bw == 1.0 and ddr.norm_edp == pytest.approx(1.0)


def test_normalize_needs_a_baseline(reports):
    with pytest.raises(ValueError):
        normalize([reports[1]])


def test_single_mode_table():
    reps = compare_modes(SimConfig(cores=1, records=500), ("DDR",))
    assert [r.speedup for r in reps] == [1.0]


def test_bw_utilization_bounds():
    assert effective_bw_utilization(0, 100, 2) == 0.0
    assert effective_bw_utilization(100, 0, 2) == 0.0
    # 8 bytes per 667 MHz clock edge pair, two channels, one microsecond
    full = effective_bw_utilization(int(2 * 8 * 1e6 / 1500 * 2), 10**6, 2)
    assert full == pytest.approx(1.0, rel=1e-3)


def test_latency_breakdown_means():
    seg_sum = [[1000 * (j + 1) * 4 for j in range(6)], [0] * 6]
    out, counts = latency_breakdown(seg_sum, [4, 0])
    assert out["read"]["queuing_mc"] == 1.0 and out["read"]["return"] == 6.0
    assert counts == {"read": 4, "write": 0}
    assert out["write"]["dram_core"] == 0.0


def test_composition_shares_sum_to_one(reports):
    comp = reports[1].composition()
    assert sum(comp.values()) == pytest.approx(1.0)
    assert reports[1].requests_per_packet("read") > 1.0


def test_report_counts_are_consistent():
    rep = run(SimConfig(mode="MI_MUL", cores=2, records=2000, workload="stream"))
    assert rep.requests == rep.reads + rep.writes == 4000
    assert rep.latency_counts["read"] == rep.reads
