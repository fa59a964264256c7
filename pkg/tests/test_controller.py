"""Reference controller: queue pair, packet selection, link timing, and the
buffer-scheduler helpers that sit on the other side of the link."""

import pytest

from mims.bufsched import ReturnBuffer, decode_cycles
from mims.controller import (QueuePair, Req, channel_of, dispatch_times, entry_bytes,
                             link_time_ps, select_for_packet)


def _reads(addrs, t=0):
    qp = QueuePair()
    for a in addrs:
        assert qp.accept(Req(a, 1, t_created=t))
    return qp


def test_mi_mul_packet_is_address_sorted():
    qp = _reads([0x300, 0x100, 0x200])
    assert [r.addr for r in select_for_packet(qp, "MI_MUL")] == [0x100, 0x200, 0x300]


@pytest.mark.parametrize("mode", ["DDR", "BOB", "MI_1"])
def test_single_request_modes_take_the_oldest(mode):
    qp = _reads([0x300, 0x100, 0x200])
    assert [r.addr for r in select_for_packet(qp, mode)] == [0x300]


def test_payload_limit_fits_42_read_messages():
    qp = QueuePair(read_cap=64)
    for i in range(60):
        qp.accept(Req(i * 64, 1))
    picked = select_for_packet(qp, "MI_MUL", max_payload=504)
    assert len(picked) == 42
    assert sum(entry_bytes(r) for r in picked) == 504


def test_write_payload_counts_data():
    qp = QueuePair()
    for i in range(10):
        qp.accept(Req(i * 64, 8, is_write=True))
    qp.drain_mode = True
    picked = select_for_packet(qp, "MI_MUL", max_payload=504)
    # each entry is 12 + 64 bytes
    assert len(picked) == 504 // 76


def test_aged_requests_go_first():
    qp = QueuePair()
    qp.accept(Req(0x900, 1, t_created=0))
    qp.accept(Req(0x100, 1, t_created=5_000_000))
    out = select_for_packet(qp, "MI_MUL", now=5_000_000, age_cap_ps=2_000_000)
    assert [r.addr for r in out] == [0x900, 0x100]


def test_limit_caps_the_count():
    qp = _reads(range(0, 640, 64))
    assert len(select_for_packet(qp, "MI_MUL", limit=3)) == 3


def test_empty_queues_select_nothing():
    assert select_for_packet(QueuePair(), "MI_MUL") == []


def test_capacity_rejects():
    qp = QueuePair(read_cap=2)
    assert qp.accept(Req(0, 1)) and qp.accept(Req(64, 1))
    assert not qp.accept(Req(128, 1))


def test_water_mark_hysteresis():
    qp = QueuePair()
    reqs = [Req(i * 64, 1, is_write=True) for i in range(49)]
    for r in reqs[:48]:
        qp.accept(r)
    assert not qp.drain_mode
    qp.accept(reqs[48])
    assert qp.drain_mode and qp.direction() is True
    for r in reqs[:33]:
        qp.remove(r)
    assert qp.drain_mode          # 16 left, not below the low mark yet
    qp.remove(reqs[33])
    assert not qp.drain_mode
    assert qp.clear_levels == [15]


def test_direction_falls_back_to_other_queue():
    qp = QueuePair()
    assert qp.direction() is None
    qp.accept(Req(0, 1, is_write=True))
    assert qp.direction() is True
    qp.accept(Req(64, 1))
    assert qp.direction() is False


def test_link_time():
    assert link_time_ps(28) == 14 * 370
    assert link_time_ps(29) == 15 * 370
    assert link_time_ps(520, width_bits=32) == 130 * 370


def test_dispatch_waits_for_busy_link():
    assert dispatch_times(0, 1000, 28, 40) == (1000, 1000 + 14 * 370, 1000 + 54 * 370)
    assert dispatch_times(5000, 1000, 28, 0) == (5000, 5000 + 14 * 370, 5000 + 14 * 370)


def test_channel_interleave():
    assert channel_of(0x8, "MI_MUL") == 1 and channel_of(0x10, "MI_MUL") == 0
    assert channel_of(0x40, "DDR") == 1 and channel_of(0x8, "DDR") == 0


# ------------------------------------------------------------------ buffer scheduler

def test_decode_cycles():
    assert decode_cycles("MI_MUL", "read", 42) == 11
    assert decode_cycles("MI_MUL", "read", 4) == 1
    assert decode_cycles("MI_MUL", "write", 6) == 6
    assert decode_cycles("BOB", "write", 1) == 1
    with pytest.raises(ValueError):
        decode_cycles("MI_1", "return", 1)


def test_return_buffer_packs_up_to_payload():
    rb = ReturnBuffer(max_payload=504)
    for i in range(10):
        rb.push(i, 8)          # 4 + 64 bytes each
    first = rb.take_packet()
    assert [e[0] for e in first] == list(range(7))
    assert [e[0] for e in rb.take_packet()] == [7, 8, 9]
    assert rb.take_packet() == []


def test_return_buffer_single_mode_is_fifo():
    rb = ReturnBuffer(mode="MI_1")
    rb.push(3, 1)
    rb.push(4, 1)
    assert rb.take_packet() == [(3, 1)]


def test_oversized_return_still_leaves():
    rb = ReturnBuffer(max_payload=504)
    rb.push(0, 512)
    assert rb.take_packet() == [(0, 512)]
