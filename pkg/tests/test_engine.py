"""Whole-system behaviour of the kernel: timing legality, scheduling policy,
conservation laws and agreement between the compiled and interpreted builds."""

import random

import pytest

from mims import SimConfig, engine
from mims.bufsched import service_order
from mims.dram import Cmd, validate_command_trace
from mims.experiments import build_traces, commands, run
from mims.trace import HitLevel, Trace, TraceRecord

MODES = ("DDR", "BOB", "MI_1", "MI_MUL")


def _records(recs):
    return Trace.from_records(recs)


def _single_bank_cfg(**kw):
    return SimConfig(mode="DDR", cores=1, channels=1, ranks=1, subranks=1, banks=1,
                     refresh=False, **kw)


# ------------------------------------------------------------------ legality

@pytest.mark.parametrize("mode", MODES)
def test_command_trace_is_legal(mode, small_gups):
    cfg, traces = small_gups
    rep = run(cfg.replace(mode=mode), traces, record_cmds=True)
    cmds = commands(rep)
    assert cmds
    assert validate_command_trace(cmds, cfg.timing, mimsmap=cfg.replace(mode=mode).mims) is None


def test_refresh_is_issued_and_legal():
    cfg = SimConfig(mode="MI_MUL", cores=2, records=20000, seed=3)
    rep = run(cfg, record_cmds=True)
    cmds = commands(rep)
    assert sum(c.cmd == Cmd.REF for c in cmds) > 0
    assert validate_command_trace(cmds) is None


# ------------------------------------------------------------------ scheduling policy

def test_single_read_act_then_read_ap_after_trcd():
    tr = _records([TraceRecord(0, 0x0, 8, False)])
    rep = run(_single_bank_cfg(), [tr], record_cmds=True)
    cmds = commands(rep)
    assert [c.cmd for c in cmds] == [Cmd.ACT, Cmd.RDA]
    assert cmds[1].time_ps - cmds[0].time_ps == 9 * 1500


def test_same_row_reads_share_one_activation():
    tr = _records([TraceRecord(0, 0x0, 8, False), TraceRecord(0, 0x80, 8, False)])
    cmds = commands(run(_single_bank_cfg(), [tr], record_cmds=True))
    assert [c.cmd for c in cmds] == [Cmd.ACT, Cmd.RD, Cmd.RDA]


def test_different_subranks_activate_back_to_back():
    tr = _records([TraceRecord(0, 0x0, 1, False), TraceRecord(0, 0x10, 1, False)])
    cfg = SimConfig(mode="MI_1", cores=1, refresh=False)
    acts = [c for c in commands(run(cfg, [tr], record_cmds=True)) if c.cmd == Cmd.ACT]
    assert [c.sr for c in acts] == [0, 1]
    assert acts[1].time_ps - acts[0].time_ps <= 40 * 1500  # no bank conflict, only packet spacing


@pytest.mark.parametrize("seed", range(20))
def test_frfcfs_degenerates_to_fcfs(seed):
    rng = random.Random(seed)
    rows = rng.sample(range(1 << 15), 20)
    tr = _records([TraceRecord(0, r << 18, 8, False) for r in rows])
    order = [o[4] for o in service_order(commands(run(_single_bank_cfg(), [tr], record_cmds=True)))]
    assert order == rows


# ------------------------------------------------------------------ conservation

@pytest.mark.parametrize("mode", MODES)
def test_conservation_and_identity(mode, small_gups):
    cfg, traces = small_gups
    rep = run(cfg.replace(mode=mode), traces)
    mem = sum(int((t.hit_level == HitLevel.MEM).sum()) for t in traces)
    assert rep.requests == mem
    assert rep.useful_bytes == sum(int(t.gran[t.hit_level == HitLevel.MEM].sum()) * 8 for t in traces)
    assert rep.committed == sum(t.instructions for t in traces)
    assert 0 < rep.bw_utilization < 1
    if mode in ("BOB", "MI_1"):
        for kind in ("read", "write", "return"):
            assert rep.requests_per_packet(kind) == 1.0
    if mode == "DDR":
        assert all(p["packets"] == 0 for p in rep.packets.values())
        assert rep.latency_ns["read"]["serialization"] == 0.0


def test_committed_instructions_do_not_depend_on_mode(small_gups):
    cfg, traces = small_gups
    assert len({run(cfg.replace(mode=m), traces).committed for m in MODES}) == 1


def test_sched_latency_is_echoed_exactly(small_gups):
    cfg, traces = small_gups
    for s in (0, 40, 120):
        rep = run(cfg.replace(mode="MI_MUL", sched_latency=s), traces)
        assert rep.latency_ns["read"]["sched_fixed"] == pytest.approx(s * 0.37, abs=1e-9)


def test_water_mark_hysteresis(small_gups):
    cfg, traces = small_gups
    for mode in MODES:
        raw = run(cfg.replace(mode=mode), traces).extra["raw"]
        assert max(raw["drain_clear_max"]) <= cfg.low_mark


def test_no_read_starves(small_gups):
    cfg, traces = small_gups
    rep = run(cfg.replace(mode="MI_MUL"), traces)
    assert rep.max_queue_mc_ns < 10 * max(rep.latency_ns["read"]["queuing_mc"], 1.0) + cfg.age_cap_ns


def test_peak_bandwidth_never_exceeded():
    cfg = SimConfig(mode="DDR", cores=4, records=20000, workload="stream")
    rep = run(cfg)
    assert 0.3 < rep.bw_utilization < 1.0


# ------------------------------------------------------------------ builds agree

@pytest.mark.skipif(engine.load_compiled() is None, reason="compiled kernel not built")
@pytest.mark.parametrize("mode", MODES)
def test_compiled_and_interpreted_agree(mode):
    cfg = SimConfig(mode=mode, cores=2, records=400, seed=5)
    traces = build_traces(cfg)
    a = run(cfg, traces, record_cmds=True, kernel=engine.load_compiled())
    b = run(cfg, traces, record_cmds=True, kernel=engine.load_pure())
    ra, rb = dict(a.extra["raw"]), dict(b.extra["raw"])
    assert ra == rb
    assert a.extra["kernel"] == "compiled" and b.extra["kernel"] == "python"


def test_wire_checker_matches_model_sizes(small_gups):
    cfg, traces = small_gups
    for mode, comp in (("BOB", "none"), ("MI_1", "none"), ("MI_MUL", "none"),
                       ("MI_MUL", "multi_offline"), ("MI_MUL", "single")):
        rep = run(cfg.replace(mode=mode, compression=comp, records=500), [t[:500] for t in traces],
                  wire=True)
        assert rep.extra["wire_packets"] == sum(p["packets"] for p in rep.packets.values())

