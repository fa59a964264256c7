import random

import pytest

from mims.dram import (Cmd, Command, MappedAddr, TimingParams, command_slacks, map_address,
                       peak_channel_bytes_per_ps, read_command_trace, request_units,
                       unmap_address, validate_command_trace, write_command_trace)

CK = 1500


def cmd(cyc, kind, bank=0, row=0, sr=0, rank=0, ch=0, col=0):
    return Command(cyc * CK, ch, rank, sr, bank, row, col, kind)


# ------------------------------------------------------------------ mapping

def test_mims_examples():
    assert map_address(0x0, True) == MappedAddr(0, 0, 0, 0, 0, 0, 0)
    assert map_address(0x8, True) == MappedAddr(1, 0, 0, 0, 0, 0, 0)
    assert map_address(0x40000, True) == MappedAddr(0, 0, 0, 0, 1, 0, 0)


def test_ddr_layout():
    m = map_address(0x40 | (5 << 14) | (1 << 17) | (3 << 7), False)
    assert (m.channel, m.bank, m.rank, m.colblock, m.subrank) == (1, 5, 1, 3, 0)


@pytest.mark.parametrize("mims", [True, False])
def test_mapping_is_a_bijection(mims):
    rng = random.Random(1)
    for _ in range(5000):
        a = rng.randrange(0, 1 << 33, 8)
        assert unmap_address(map_address(a, mims), mims) == a


def test_out_of_range():
    with pytest.raises(ValueError):
        map_address(1 << 33, True)


def test_line_stripes_over_subranks():
    units = request_units(0x0, 8)
    assert [u[1] for u in units] == list(range(8))
    assert len({(u[0], u[2], u[3], u[4]) for u in units}) == 1


# ------------------------------------------------------------------ timing params

def test_trc_identity_enforced():
    with pytest.raises(ValueError):
        TimingParams(tRC=30)
    with pytest.raises(ValueError):
        TimingParams(CL=0)


# ------------------------------------------------------------------ oracle: hand-built traces

def test_empty_trace_is_clean():
    assert validate_command_trace([]) is None


def test_read_before_trcd():
    bad = [cmd(0, Cmd.ACT), cmd(8, Cmd.RDA)]
    v = validate_command_trace(bad)
    assert v.constraint == "tRCD" and v.index == 1
    assert validate_command_trace([cmd(0, Cmd.ACT), cmd(9, Cmd.RDA)]) is None


def test_act_same_bank_trc():
    # explicit precharge at tRAS so only tRC binds the second ACT
    base = [cmd(0, Cmd.ACT), cmd(24, Cmd.PRE)]
    assert validate_command_trace(base + [cmd(32, Cmd.ACT, row=1)]).constraint == "tRC"
    assert validate_command_trace(base + [cmd(33, Cmd.ACT, row=1)]) is None


def test_faw_window():
    acts = [cmd(4 * i, Cmd.ACT, bank=i) for i in range(4)]
    v = validate_command_trace(acts + [cmd(19, Cmd.ACT, bank=4)])
    assert v.constraint == "tFAW"
    assert validate_command_trace(acts + [cmd(20, Cmd.ACT, bank=4)]) is None


def test_subranks_are_independent_for_rrd():
    acts = [cmd(i, Cmd.ACT, sr=i, bank=i) for i in range(8)]
    assert validate_command_trace(acts) is None
    assert validate_command_trace(acts, mimsmap=False).constraint == "tRRD"


def test_one_command_per_cycle():
    v = validate_command_trace([cmd(0, Cmd.ACT, sr=0), cmd(0, Cmd.ACT, sr=1)])
    assert v.constraint == "cmd_bus"
    off_grid = [Command(700, 0, 0, 0, 0, 0, 0, Cmd.ACT)]
    assert validate_command_trace(off_grid).constraint == "cmd_bus"


def test_cas_to_closed_bank():
    assert validate_command_trace([cmd(0, Cmd.RD)]).constraint == "state"
    assert validate_command_trace([cmd(0, Cmd.ACT), cmd(9, Cmd.RD, row=3)]).constraint == "state"


def test_auto_precharge_folds_trp():
    # READ_AP at 9: precharge at max(ACT+tRAS, 9+tRTP) = 24, bank idle from 33
    seq = [cmd(0, Cmd.ACT), cmd(9, Cmd.RDA)]
    assert validate_command_trace(seq + [cmd(32, Cmd.ACT, row=1)]) is not None
    assert validate_command_trace(seq + [cmd(33, Cmd.ACT, row=1)]) is None


def test_write_to_read_turnaround():
    seq = [cmd(0, Cmd.ACT), cmd(4, Cmd.ACT, bank=1), cmd(9, Cmd.WR)]
    # write data ends at 9 + tCWL + tBURST = 20, read allowed from 25
    v = validate_command_trace(seq + [cmd(24, Cmd.RD, bank=1)])
    assert v.constraint == "tWTR"
    assert validate_command_trace(seq + [cmd(25, Cmd.RD, bank=1)]) is None


def test_refresh_blocks_rank():
    seq = [cmd(0, Cmd.REF)]
    assert validate_command_trace(seq + [cmd(106, Cmd.ACT)]).constraint == "tRFC"
    assert validate_command_trace(seq + [cmd(107, Cmd.ACT)]) is None
    # REF with a row open is illegal
    assert validate_command_trace([cmd(0, Cmd.ACT), cmd(30, Cmd.REF)]).constraint == "state"


def test_data_bus_overlap():
    seq = [cmd(0, Cmd.ACT), cmd(4, Cmd.ACT, rank=1), cmd(9, Cmd.RD)]
    # different rank on the same subrank lane needs one bubble after the burst
    v = validate_command_trace(seq + [cmd(13, Cmd.RD, rank=1)])
    assert v.constraint == "data_bus"
    assert validate_command_trace(seq + [cmd(14, Cmd.RD, rank=1)]) is None


def test_unsorted_trace_rejected():
    with pytest.raises(ValueError):
        command_slacks([cmd(5, Cmd.ACT), cmd(1, Cmd.ACT, bank=1)])


# ------------------------------------------------------------------ random legal generator

def _legal_sequence(rng, n, T=TimingParams()):
    """Greedy generator: each command at the first cycle every slack allows."""
    cmds = []
    open_rows = {}
    t = 0
    while len(cmds) < n:
        sr, bank = rng.randrange(8), rng.randrange(8)
        key = (sr, bank)
        cand = (Cmd.RDA if rng.random() < .5 else Cmd.WRA) if key in open_rows else Cmd.ACT
        row = open_rows.get(key, rng.randrange(1 << 15))
        for dt in range(1, 200):
            c = cmd(t + dt, cand, bank=bank, row=row, sr=sr)
            if all(v >= 0 for v in command_slacks(cmds + [c], T)[-1].values()):
                break
        cmds.append(c)
        t = c.time_ps // CK
        if cand == Cmd.ACT:
            open_rows[key] = row
        else:
            del open_rows[key]
    return cmds


def test_generated_legal_sequences_validate_and_mutants_fail():
    rng = random.Random(9)
    for _ in range(5):
        seq = _legal_sequence(rng, 60)
        assert validate_command_trace(seq) is None
        slacks = command_slacks(seq)
        tight = [i for i, s in enumerate(slacks) if i and 0 in s.values()]
        assert tight
        for i in tight[:5]:
            c = seq[i]
            mutant = sorted(seq[:i] + [c._replace(time_ps=c.time_ps - CK)] + seq[i + 1:],
                            key=lambda x: x.time_ps)
            assert validate_command_trace(mutant) is not None


# ------------------------------------------------------------------ trace files

def test_trace_file_round_trip(tmp_path):
    seq = [cmd(0, Cmd.ACT, row=7, sr=3), cmd(9, Cmd.RDA, row=7, sr=3, col=5), cmd(200, Cmd.REF)]
    for name in ("c.txt", "c.txt.gz"):
        p = tmp_path / name
        write_command_trace(seq, p, True)
        got, mims = read_command_trace(p)
        assert got == seq and mims is True


def test_peak_bandwidth():
    assert peak_channel_bytes_per_ps() * 1e12 == pytest.approx(10.667e9, rel=1e-3)
