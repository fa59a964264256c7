import pytest

from mims import SimConfig
from mims.config import CoreConfig
from mims.core import reference_cycles, run_ideal
from mims.experiments import run
from mims.trace import HitLevel, Trace, TraceRecord, gen_synthetic, get_profile


def _trace(recs):
    return Trace.from_records(recs)


def test_nonmem_stream_is_retire_bound():
    # 999 filler instructions and one L1 hit: 1000 instructions at 2 per cycle
    tr = _trace([TraceRecord(999, 0, 1, False, HitLevel.L1)])
    ref = reference_cycles(tr)
    assert ref == pytest.approx(505, abs=5)
    assert run_ideal([tr]).cycles == ref


def test_single_memory_access_commits_after_data():
    tr = _trace([TraceRecord(0, 0x40, 1, False)])
    for lat in (0, 1, 50, 300):
        assert run_ideal([tr], mem_ns=lat * 0.37).cycles == reference_cycles(tr, mem_cycles=lat)
    assert reference_cycles(tr, mem_cycles=300) > 300


def test_full_rob_blocks_fetch():
    # the head waits 1000 cycles; 255 younger instructions fill the ROB behind it,
    # so nothing beyond them can be fetched until the head commits
    recs = [TraceRecord(0, 0x40, 1, False)] + [TraceRecord(0, 0x80 + 64 * i, 1, False, HitLevel.L1)
                                               for i in range(600)]
    tr = _trace(recs)
    slow = reference_cycles(tr, mem_cycles=1000)
    assert slow >= 1000 + (601 - 256) // 4
    assert run_ideal([tr], mem_ns=1000 * 0.37).cycles == slow


@pytest.mark.parametrize("level", [HitLevel.L1, HitLevel.L2, HitLevel.L3])
def test_cache_hits_use_their_latency(level):
    tr = _trace([TraceRecord(3, 64 * i, 1, i % 2 == 1, level) for i in range(200)])
    assert run_ideal([tr]).cycles == reference_cycles(tr)


def test_writes_are_posted():
    tr = _trace([TraceRecord(0, 64 * i, 1, True) for i in range(50)])
    assert run_ideal([tr], mem_ns=100).cycles == reference_cycles(tr, mem_cycles=0)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_kernel_core_matches_reference(seed):
    tr = gen_synthetic(get_profile("canneal"), 1500, seed)
    lv = tr.hit_level.copy()
    lv[::3] = int(HitLevel.L2)
    lv[1::7] = int(HitLevel.L1)
    tr = Trace(tr.gap, tr.addr, tr.gran, tr.is_write, lv, tr.tid)
    for lat in (0, 70):
        assert run_ideal([tr], mem_ns=lat * 0.37).cycles == reference_cycles(tr, mem_cycles=lat)


def test_zero_latency_memory_makes_modes_equal():
    cfg = SimConfig(cores=2, records=2000, seed=4)
    cycles = {run(cfg.replace(mode=m), ideal_mem_ps=0).cycles for m in ("DDR", "BOB", "MI_1", "MI_MUL")}
    assert len(cycles) == 1


def test_core_config_validation():
    with pytest.raises(ValueError):
        CoreConfig(rob_size=0).validate()
