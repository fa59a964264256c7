"""On-chip memory controller: address mapping, queue pair with water marks, the
packet-selection policy and link timing.

The engine carries its own compiled copy of this logic; the classes here are the
readable reference it is tested against, plus :class:`WireChecker`, which pushes
every packet the engine sends through the real codec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import codec
from .codec import PacketHead, PacketType, Rtmsg, Scheme
from .compress import CompressorContext
from .dram import MappedAddr, map_address, unmap_address

__all__ = ["map_address", "unmap_address", "MappedAddr", "QueuePair", "Req", "select_for_packet",
           "link_time_ps", "dispatch_times", "WireChecker", "channel_of"]

MODE_IDS = {"DDR": 0, "BOB": 1, "MI_1": 2, "MI_MUL": 3}


def channel_of(addr: int, mode: str, channels: int = 2) -> int:
    mims = mode in ("MI_1", "MI_MUL")
    return ((addr >> 3) if mims else (addr >> 6)) & (channels - 1)


@dataclass
class Req:
    addr: int
    gran: int
    is_write: bool = False
    t_created: int = 0
    tid: int = 0


@dataclass
class QueuePair:
    read_cap: int = 64
    write_cap: int = 64
    high_mark: int = 48
    low_mark: int = 16
    reads: list = field(default_factory=list)
    writes: list = field(default_factory=list)
    drain_mode: bool = False
    clear_levels: list = field(default_factory=list)

    def accept(self, req: Req) -> bool:
        q, cap = (self.writes, self.write_cap) if req.is_write else (self.reads, self.read_cap)
        if len(q) >= cap:
            return False
        q.append(req)
        if req.is_write and len(self.writes) > self.high_mark:
            self.drain_mode = True
        return True

    def remove(self, req: Req) -> None:
        (self.writes if req.is_write else self.reads).remove(req)
        if req.is_write and self.drain_mode and len(self.writes) < self.low_mark:
            self.drain_mode = False
            self.clear_levels.append(len(self.writes))

    def direction(self) -> bool | None:
        """True for writes, False for reads, None when both queues are empty."""
        want = self.drain_mode
        q = self.writes if want else self.reads
        if q:
            return want
        other = self.reads if want else self.writes
        return (not want) if other else None


def entry_bytes(req: Req) -> int:
    return codec.RTMSG_BYTES + (req.gran * codec.UNIT if req.is_write else 0)


def select_for_packet(qp: QueuePair, mode: str, max_payload: int = 504, now: int = 0,
                      age_cap_ps: int = 2_000_000, limit: int | None = None) -> list[Req]:
    """Requests for the next packet, in packet order. Does not dequeue them."""
    d = qp.direction()
    if d is None:
        return []
    q = qp.writes if d else qp.reads
    if mode in ("DDR", "BOB", "MI_1"):
        return [q[0]]
    aged = [r for r in q if now - r.t_created >= age_cap_ps]
    fresh = sorted((r for r in q if now - r.t_created < age_cap_ps), key=lambda r: r.addr)
    out, used = [], 0
    for r in aged + fresh:
        if limit is not None and len(out) >= limit:
            break
        b = entry_bytes(r)
        if out and used + b > max_payload:
            break
        out.append(r)
        used += b
    return out


def link_time_ps(nbytes: int, width_bits: int = 16, cycle_ps: int = 370) -> int:
    return math.ceil(nbytes * 8 / width_bits) * cycle_ps


def dispatch_times(now: int, link_free: int, nbytes: int, sched_latency_cycles: int = 40,
                   width_bits: int = 16, cycle_ps: int = 370) -> tuple[int, int, int]:
    """(start, end of serialization, arrival at the buffer scheduler)."""
    start = max(now, link_free)
    end = start + link_time_ps(nbytes, width_bits, cycle_ps)
    return start, end, end + sched_latency_cycles * cycle_ps


class WireChecker:
    """Encodes each packet the engine sends, decodes it at the far end and checks
    that nothing changed. Returns the byte count so the engine can compare it with
    its arithmetic size."""

    def __init__(self, channels: int, n_base: int = 8, diff_bits: int = 8):
        self.enc = [CompressorContext(n_base, diff_bits) for _ in range(channels)]
        self.dec = [CompressorContext(n_base, diff_bits) for _ in range(channels)]
        self.seq = [0] * channels
        self.packets = 0
        self.bytes = 0

    @staticmethod
    def _data(addr: int, gran: int) -> bytes:
        return bytes((addr >> 3) + i & 0xFF for i in range(gran * codec.UNIT))

    def packet(self, ch, kind, mode, scheme, addrs, grans, tids, reqids) -> int:
        self.seq[ch] = (self.seq[ch] + 1) & 0xFF
        seq = self.seq[ch]
        n = len(addrs)
        if mode == MODE_IDS["BOB"]:
            line = addrs[0] & ~63
            if kind == 0:
                wire = codec.encode_bob(PacketType.READ, line, b"", ch, seq)
            else:
                pt = PacketType.WRITE if kind == 1 else PacketType.READ_RETURN
                wire = codec.encode_bob(pt, line, self._data(line, 8), ch, seq)
            head, addr, payload = codec.decode_bob(wire, expect_desid=ch)
            if addr != line or head.cnt != 1:
                raise AssertionError("BOB frame did not survive the link")
        elif kind == 0:
            msgs = [Rtmsg(a, g, t, 0, i) for a, g, t, i in zip(addrs, grans, tids, reqids)]
            sch = None if scheme < 0 else Scheme(scheme)
            wire = codec.encode_read(PacketHead(ch, PacketType.READ, n), msgs, sch, self.enc[ch], seq)
            head, got = codec.decode_read(wire, self.dec[ch], expect_desid=ch)
            if got != msgs:
                raise AssertionError("read packet did not survive the link")
        elif kind == 1:
            entries = [(Rtmsg(a, g, t, 0, 0), self._data(a, g))
                       for a, g, t in zip(addrs, grans, tids)]
            wire = codec.encode_write(PacketHead(ch, PacketType.WRITE, n), entries, seq)
            head, got = codec.decode_write(wire, expect_desid=ch)
            if got != entries:
                raise AssertionError("write packet did not survive the link")
        else:
            entries = [(i, g, self._data(a, g)) for a, g, i in zip(addrs, grans, reqids)]
            wire = codec.encode_return(entries, ch, seq)
            got = codec.decode_return(wire, expect_desid=ch)
            if got != entries:
                raise AssertionError("return packet did not survive the link")
        self.packets += 1
        self.bytes += len(wire)
        return len(wire)
