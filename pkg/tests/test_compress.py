import random

import pytest
from hypothesis import given, settings, strategies as st

from mims.codec import Scheme
from mims.compress import (BaseTable, CompressError, CompressorContext, RatioMeter,
                           compress_multi_base, compress_single_base, compression_ratio,
                           decompress_multi_base, decompress_single_base, parse_scheme,
                           single_base_size, single_base_width)

addr_lists = st.lists(st.integers(0, (1 << 48) - 8).map(lambda a: a & ~7), min_size=1, max_size=48)
near_lists = st.integers(0, 1 << 40).flatmap(
    lambda b: st.lists(st.integers(-4096, 4096).map(lambda d: (b + 8 * d) & ~7 if b + 8 * d >= 0 else 0),
                       min_size=1, max_size=48))


# ------------------------------------------------------------------ single base

def test_stride_64_block_is_21_bytes():
    addrs = [0x10000 + 0x40 * i for i in range(8)]
    assert single_base_width(addrs) == 2
    assert single_base_size(addrs) == 21
    assert len(compress_single_base(addrs)) == 21
    assert 48 / 21 == pytest.approx(2.2857, abs=1e-4)


def test_single_address_costs_seven():
    assert single_base_size([0x1234 * 8]) == 7


def test_far_apart_falls_back_to_raw():
    addrs = [0, (1 << 33) - 8]
    assert single_base_width(addrs) == 6
    assert single_base_size(addrs) == 13


@settings(max_examples=300, deadline=None)
@given(st.one_of(addr_lists, near_lists))
def test_single_base_round_trip_and_minimal_width(addrs):
    block = compress_single_base(addrs)
    got, used = decompress_single_base(block, len(addrs))
    assert got == addrs and used == len(block)
    w = single_base_width(addrs)
    base = addrs[0]
    for smaller in (1, 2, 3, 4):
        if smaller >= w:
            break
        lim = 1 << (8 * smaller - 1)
        assert any(not -lim <= a - base < lim for a in addrs)


def test_bad_width_descriptor():
    with pytest.raises(CompressError):
        decompress_single_base(bytes([5]) + bytes(6), 1)


# ------------------------------------------------------------------ multi base

def test_hit_after_miss_coarse():
    t = BaseTable(8, 8)
    assert len(compress_multi_base([0x0, 0x40], t, offline=False)) == 9


def test_signed_range_boundary():
    assert len(compress_multi_base([0x0, 0x80], BaseTable(8, 8), offline=False)) == 14
    # -128 is inside the signed byte, +128 is not
    assert len(compress_multi_base([0x80, 0x0], BaseTable(8, 8), offline=False)) == 9


def test_offline_second_packet_all_hits():
    enc = BaseTable(8, 8)
    compress_multi_base([0x0, 0x40], enc, offline=True)
    assert enc.bases[0] == 0x40
    assert len(compress_multi_base([0x80], enc, offline=True)) == 2
    inline = BaseTable(8, 8)
    compress_multi_base([0x0, 0x40], inline, offline=False)
    assert inline.bases[0] == 0
    assert len(compress_multi_base([0x80], inline, offline=False)) == 7


def test_lru_fill_from_empty():
    t = BaseTable(8, 8)
    addrs = [i << 20 for i in range(11)]
    compress_multi_base(addrs, t, offline=False)
    assert sorted(t.bases) == addrs[-8:]


def test_index_out_of_range_rejected():
    t = BaseTable(4, 8)
    t.insert(0)
    with pytest.raises(CompressError):
        t.decode(bytes([0x80 | 6, 1]), 1, False)


def test_unknown_base_rejected():
    with pytest.raises(CompressError):
        BaseTable(8, 8).decode(bytes([0x80, 1]), 1, False)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.one_of(addr_lists, near_lists), min_size=1, max_size=4),
       st.sampled_from([Scheme.MULTI_INLINE, Scheme.MULTI_OFFLINE]), st.sampled_from([8, 24]))
def test_multi_base_round_trip_keeps_tables_in_step(packets, scheme, bits):
    enc, dec = CompressorContext(8, bits), CompressorContext(8, bits)
    for addrs in packets:
        size = CompressorContext(8, bits)
        size.table = enc.table.copy()
        block = enc.compress(addrs, scheme)
        assert size.compressed_size(addrs, scheme) == len(block)
        got, used = dec.decompress(block, len(addrs), scheme)
        assert got == addrs and used == len(block)
        assert enc.table.snapshot() == dec.table.snapshot()


def test_many_random_lists_are_lossless():
    rng = random.Random(11)
    for scheme in Scheme:
        for bits in (8, 24):
            enc, dec = CompressorContext(8, bits), CompressorContext(8, bits)
            for _ in range(300):
                base = rng.randrange(0, 1 << 33, 8)
                addrs = [max(0, base + 8 * rng.randint(-3000, 3000)) for _ in range(rng.randint(1, 40))]
                block = enc.compress(addrs, scheme)
                assert dec.decompress(block, len(addrs), scheme)[0] == addrs


# ------------------------------------------------------------------ ratios

def test_incompressible_ratio_bounds():
    rng = random.Random(5)
    packets = [[rng.randrange(0, 1 << 33, 1 << 20) for _ in range(16)] for _ in range(50)]
    for scheme in (Scheme.MULTI_INLINE, Scheme.MULTI_OFFLINE):
        r = compression_ratio(packets, scheme)
        assert 6 / 7 <= r <= 1.0


def test_fine_all_hit_ceiling_is_exact():
    # one cold miss per base would pull the ratio below the ceiling, so prime the table
    ctx = CompressorContext(8, 24)
    ctx.compress([0x100000], Scheme.MULTI_INLINE)
    meter = RatioMeter()
    for p in range(100):
        addrs = [0x100000 + 8 * (p * 10 + i) for i in range(10)]
        meter.add(len(addrs), ctx.compressed_size(addrs, Scheme.MULTI_INLINE))
    assert meter.ratio == 1.5


def test_sequential_ordering():
    packets = [[0x40 * i] for i in range(8000)]
    off = compression_ratio(packets, Scheme.MULTI_OFFLINE)
    inl = compression_ratio(packets, Scheme.MULTI_INLINE)
    single = compression_ratio(packets, Scheme.SINGLE)
    assert off >= inl >= single - 0.05
    assert off == pytest.approx(3.0, abs=1e-3)   # one cold miss short of the 2-byte hit ceiling


def test_parse_scheme():
    assert parse_scheme("none") is None
    assert parse_scheme("Multi_Offline") is Scheme.MULTI_OFFLINE
    with pytest.raises(ValueError):
        parse_scheme("zip")


def test_ratio_meter_needs_packets():
    with pytest.raises(ValueError):
        RatioMeter().ratio
