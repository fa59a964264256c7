import pytest

from mims.config import SimConfig
from mims.experiments import compare_modes, run
from mims.power import (PowerBreakdown, PowerParams, account, command_energy, controller_energy,
                        devices_per_access)
from mims.trace import HitLevel, Trace, TraceRecord


def _counts(n_act=0, n_rd=0, n_wr=0, n_ref=0, mc=0, bs=(0, 0)):
    return {"n_act": [n_act], "n_rd": [n_rd], "n_wr": [n_wr], "n_ref": [n_ref],
            "mc_busy_ps": [mc], "bs_busy_ps": list(bs)}


def test_devices_per_access():
    assert devices_per_access("DDR") == devices_per_access("BOB") == 8
    assert devices_per_access("MI_MUL") == devices_per_access("MI_1") == 1


def test_one_act_energy():
    assert command_energy("ACT", "DDR")["act_pre"] == pytest.approx(120e-9)
    assert command_energy("act", "MI_MUL")["act_pre"] == pytest.approx(15e-9)
    assert sum(command_energy("PRE", "DDR").values()) == 0.0
    with pytest.raises(ValueError):
        command_energy("NOP", "DDR")


def test_fine_activation_costs_an_eighth():
    ddr = account("DDR", _counts(n_act=100), 10**9, 2, 2)
    mi = account("MI_MUL", _counts(n_act=100), 10**9, 2, 2)
    assert mi.act_pre / ddr.act_pre == pytest.approx(1 / 8)


def test_line_striped_over_subranks_costs_the_same():
    # one 64-byte line: one rank-wide ACT in DDR, eight single-device ACTs in MIMS
    ddr = account("DDR", _counts(n_act=1, n_rd=1), 10**9, 2, 2)
    mi = account("MI_MUL", _counts(n_act=8, n_rd=8), 10**9, 2, 2)
    assert ddr.act_pre / mi.act_pre == pytest.approx(1.0)
    assert ddr.burst / mi.burst == pytest.approx(1.0)


def test_zero_runtime_is_zero_energy():
    b = account("DDR", _counts(n_act=5), 0, 2, 2)
    assert b.total == 0.0 and b.edp == 0.0
    assert b.avg_watts()["total"] == 0.0


def test_idle_controller_draws_half_peak():
    e = controller_energy(8.5, 0, 10**12, 0.5)
    assert e == pytest.approx(8.5 * 0.5)
    assert controller_energy(8.5, 10**12, 10**12, 0.5) == pytest.approx(8.5)
    # busy time is clipped to the run
    assert controller_energy(8.5, 2 * 10**12, 10**12, 0.5) == pytest.approx(8.5)


def test_energy_is_additive_in_commands():
    a = account("MI_MUL", _counts(n_act=3, n_rd=4, n_ref=1), 10**9, 2, 2)
    b = account("MI_MUL", _counts(n_act=6, n_rd=8, n_ref=2), 10**9, 2, 2)
    assert b.act_pre == pytest.approx(2 * a.act_pre)
    assert b.burst == pytest.approx(2 * a.burst)
    assert b.refresh == pytest.approx(2 * a.refresh)
    assert b.background == pytest.approx(a.background)


def test_background_scales_with_devices_and_time():
    b = account("DDR", _counts(), 10**12, 2, 2)
    assert b.background == pytest.approx(0.085 * 32)


def test_breakdown_totals():
    b = PowerBreakdown(1.0, 2.0, 3.0, 4.0, 5.0, 2.0)
    assert b.total == 15.0 and b.edp == 30.0
    assert b.avg_watts()["act_pre"] == 1.5
    assert b.normalized_edp(PowerBreakdown(1, 1, 1, 1, 11, 2.0)) == pytest.approx(1.0)


def test_bad_params():
    with pytest.raises(ValueError):
        PowerParams(e_act_pre_nj=-1)
    with pytest.raises(ValueError):
        PowerParams(idle_fraction=1.5)


def _isolated_lines(gran, n=40):
    # far apart in time and address so every access opens its own row
    return Trace.from_records([TraceRecord(2000, i * (1 << 22), gran, False, HitLevel.MEM)
                               for i in range(n)])


def test_kernel_counts_give_the_device_ratio():
    base = SimConfig(cores=1, refresh=False)
    coarse = [_isolated_lines(8)]
    ddr = run(base.replace(mode="DDR"), coarse)
    mi = run(base.replace(mode="MI_MUL"), coarse)
    assert ddr.power.act_pre / mi.power.act_pre == pytest.approx(1.0)
    fine = [_isolated_lines(1)]
    ddr = run(base.replace(mode="DDR"), fine)
    mi = run(base.replace(mode="MI_MUL"), fine)
    assert mi.power.act_pre / ddr.power.act_pre == pytest.approx(1 / 8)


def test_edp_direction_on_fine_traffic(small_gups):
    cfg, traces = small_gups
    reps = {r.mode: r for r in compare_modes(cfg, ("DDR", "BOB", "MI_MUL"), traces)}
    assert reps["DDR"].norm_edp == pytest.approx(1.0)
    assert reps["MI_MUL"].norm_edp < 1.0
    assert reps["BOB"].power.total > reps["DDR"].power.total
