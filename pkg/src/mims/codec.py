"""Wire format for read, write and read-return packets.

Every packet is ``LKOH || body`` where the 8-byte link overhead carries a 16-bit
start/sequence word, the 16-bit body length and a CRC32 of the body. The body
starts with an 8-byte head (destination, type, count, reserved). Multi-byte
fields are little-endian.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass
from typing import NamedTuple, Sequence

LKOH_BYTES = 8
HEAD_BYTES = 8
ADDR_BYTES = 6
RTMSG_BYTES = 12
RTMSG_TAIL_BYTES = RTMSG_BYTES - ADDR_BYTES  # gran, tid, to, reqid
RETURN_META_BYTES = 4  # reqid + gran
UNIT = 8
BOB_LINE = 64
START_MAGIC = 0xA5

_LKOH = struct.Struct("<HHI")
_HEAD = struct.Struct("<BBHI")
_TAIL = struct.Struct("<HBBH")
_RET = struct.Struct("<HH")


class PacketType(enum.IntEnum):
    READ = 0
    WRITE = 1
    READ_RETURN = 2


class Scheme(enum.IntEnum):
    SINGLE = 0
    MULTI_INLINE = 1
    MULTI_OFFLINE = 2


class CodecError(ValueError):
    """Malformed packet contents (encode or decode side)."""


class LinkError(CodecError):
    """CRC or framing failure on the serial link."""


class RoutingError(CodecError):
    """Packet delivered to the wrong buffer scheduler."""


@dataclass(frozen=True)
class PacketHead:
    desid: int
    pt: PacketType
    cnt: int
    rsv: int = 0

    @property
    def compressed(self) -> bool:
        return bool(self.rsv & 1)

    @property
    def scheme(self) -> Scheme:
        return Scheme((self.rsv >> 1) & 3)

    @staticmethod
    def rsv_for(scheme: Scheme | None) -> int:
        return 0 if scheme is None else 1 | (int(scheme) << 1)

    def pack(self) -> bytes:
        if not 1 <= self.cnt <= 0xFFFF:
            raise CodecError(f"packet count {self.cnt} outside 1..65535")
        if not 0 <= self.desid <= 0xFF:
            raise CodecError(f"desid {self.desid} outside 8 bits")
        return _HEAD.pack(self.desid, int(self.pt), self.cnt, self.rsv)

    @classmethod
    def unpack(cls, b: bytes) -> "PacketHead":
        desid, pt, cnt, rsv = _HEAD.unpack_from(b)
        try:
            ptype = PacketType(pt)
        except ValueError:
            raise CodecError(f"unknown packet type {pt}") from None
        if cnt < 1:
            raise CodecError("packet count is zero")
        return cls(desid, ptype, cnt, rsv)


@dataclass(frozen=True)
class Rtmsg:
    addr: int
    gran: int
    tid: int = 0
    to: int = 0
    reqid: int = 0

    def check(self) -> None:
        if not 0 <= self.addr < 1 << 48:
            raise CodecError(f"address {self.addr:#x} outside 48 bits")
        if not 1 <= self.gran <= 512:
            raise CodecError(f"granularity {self.gran} outside 1..512")
        if not 0 <= self.tid <= 0xFF or not 0 <= self.to <= 0xFF:
            raise CodecError("tid/to outside 8 bits")
        if not 0 <= self.reqid <= 0xFFFF:
            raise CodecError("reqid outside 16 bits")

    def tail(self) -> bytes:
        return _TAIL.pack(self.gran, self.tid, self.to, self.reqid)

    def pack(self) -> bytes:
        self.check()
        return self.addr.to_bytes(ADDR_BYTES, "little") + self.tail()

    @classmethod
    def unpack(cls, b: bytes, off: int = 0) -> "Rtmsg":
        addr = int.from_bytes(b[off:off + ADDR_BYTES], "little")
        gran, tid, to, reqid = _TAIL.unpack_from(b, off + ADDR_BYTES)
        return cls(addr, gran, tid, to, reqid)

    @classmethod
    def unpack_tail(cls, addr: int, b: bytes, off: int) -> "Rtmsg":
        gran, tid, to, reqid = _TAIL.unpack_from(b, off)
        return cls(addr, gran, tid, to, reqid)


# --------------------------------------------------------------------------- framing

def frame(body: bytes, seq: int = 0) -> bytes:
    if len(body) > 0xFFFF:
        raise CodecError(f"packet body of {len(body)} bytes exceeds the 16-bit length field")
    start = (START_MAGIC << 8) | (seq & 0xFF)
    return _LKOH.pack(start, len(body), zlib.crc32(body)) + body


def unframe(data: bytes) -> bytes:
    if len(data) < LKOH_BYTES + HEAD_BYTES:
        raise LinkError(f"packet of {len(data)} bytes is shorter than LKOH + head")
    start, length, crc = _LKOH.unpack_from(data)
    if start >> 8 != START_MAGIC:
        raise LinkError("bad start symbol")
    body = data[LKOH_BYTES:]
    if len(body) != length:
        raise LinkError(f"length field {length} does not match body of {len(body)} bytes")
    if zlib.crc32(body) != crc:
        raise LinkError("CRC mismatch")
    return body


def _check_dest(head: PacketHead, expect_desid: int | None) -> None:
    if expect_desid is not None and head.desid != expect_desid:
        raise RoutingError(f"packet for scheduler {head.desid} delivered to {expect_desid}")


# --------------------------------------------------------------------------- read

def encode_read(head: PacketHead, rtmsgs: Sequence[Rtmsg], compression: Scheme | None = None,
                ctx=None, seq: int = 0) -> bytes:
    """Encode a read packet; with ``compression`` the address column is replaced
    by a compressed block produced with (and updating) ``ctx``."""
    if head.pt != PacketType.READ:
        raise CodecError("encode_read needs a READ head")
    if head.cnt != len(rtmsgs) or not rtmsgs:
        raise CodecError(f"head count {head.cnt} does not match {len(rtmsgs)} request messages")
    for r in rtmsgs:
        r.check()
    if compression is None:
        body = head.pack() + b"".join(r.pack() for r in rtmsgs)
    else:
        if ctx is None:
            raise CodecError("compressed encoding needs a compressor context")
        head = PacketHead(head.desid, head.pt, head.cnt, PacketHead.rsv_for(compression))
        block = ctx.compress([r.addr for r in rtmsgs], compression)
        body = head.pack() + block + b"".join(r.tail() for r in rtmsgs)
    return frame(body, seq)


def decode_read(data: bytes, ctx=None, expect_desid: int | None = None):
    body = unframe(data)
    head = PacketHead.unpack(body)
    _check_dest(head, expect_desid)
    if head.pt != PacketType.READ:
        raise CodecError(f"expected READ packet, got {head.pt.name}")
    off = HEAD_BYTES
    if head.compressed:
        if ctx is None:
            raise CodecError("compressed packet but no decompressor context")
        addrs, used = ctx.decompress(body[off:], head.cnt, head.scheme)
        off += used
        need = off + head.cnt * RTMSG_TAIL_BYTES
        if len(body) != need:
            raise CodecError("read packet length does not match its count")
        msgs = [Rtmsg.unpack_tail(a, body, off + i * RTMSG_TAIL_BYTES) for i, a in enumerate(addrs)]
    else:
        if len(body) != HEAD_BYTES + head.cnt * RTMSG_BYTES:
            raise CodecError("read packet length does not match its count")
        msgs = [Rtmsg.unpack(body, off + i * RTMSG_BYTES) for i in range(head.cnt)]
    # cleared so decode(encode(x)) reproduces the caller's head
    return PacketHead(head.desid, head.pt, head.cnt, 0), msgs


def read_decode_cycles(cnt: int, batch: int = 4) -> int:
    """Scheduler cycles to decode a read packet: fixed-size entries go ``batch`` at a time."""
    return -(-cnt // batch)


def write_decode_cycles(cnt: int) -> int:
    return cnt


# --------------------------------------------------------------------------- write

def encode_write(head: PacketHead, entries: Sequence[tuple[Rtmsg, bytes]], seq: int = 0) -> bytes:
    if head.pt != PacketType.WRITE:
        raise CodecError("encode_write needs a WRITE head")
    if head.cnt != len(entries) or not entries:
        raise CodecError(f"head count {head.cnt} does not match {len(entries)} entries")
    parts = [head.pack()]
    for r, data in entries:
        if len(data) != r.gran * UNIT:
            raise CodecError(f"write data of {len(data)} bytes for granularity {r.gran}")
        parts.append(r.pack())
        parts.append(bytes(data))
    return frame(b"".join(parts), seq)


def decode_write(data: bytes, expect_desid: int | None = None):
    body = unframe(data)
    head = PacketHead.unpack(body)
    _check_dest(head, expect_desid)
    if head.pt != PacketType.WRITE:
        raise CodecError(f"expected WRITE packet, got {head.pt.name}")
    off = HEAD_BYTES
    out = []
    for _ in range(head.cnt):
        if off + RTMSG_BYTES > len(body):
            raise CodecError("write packet truncated")
        r = Rtmsg.unpack(body, off)
        off += RTMSG_BYTES
        n = r.gran * UNIT
        if off + n > len(body):
            raise CodecError("write data truncated")
        out.append((r, body[off:off + n]))
        off += n
    if off != len(body):
        raise CodecError("trailing bytes after last write entry")
    return head, out


# --------------------------------------------------------------------------- read return

def encode_return(entries: Sequence[tuple[int, int, bytes]], desid: int = 0, seq: int = 0) -> bytes:
    if not entries:
        raise CodecError("return packet needs at least one entry")
    seen = set()
    parts = [PacketHead(desid, PacketType.READ_RETURN, len(entries)).pack()]
    for reqid, gran, data in entries:
        if reqid in seen:
            raise CodecError(f"duplicate reqid {reqid} in return packet")
        seen.add(reqid)
        if not 1 <= gran <= 512:
            raise CodecError(f"granularity {gran} outside 1..512")
        if len(data) != gran * UNIT:
            raise CodecError(f"return data of {len(data)} bytes for granularity {gran}")
        parts.append(_RET.pack(reqid, gran))
        parts.append(bytes(data))
    return frame(b"".join(parts), seq)


def decode_return(data: bytes, expect_desid: int | None = None):
    body = unframe(data)
    head = PacketHead.unpack(body)
    _check_dest(head, expect_desid)
    if head.pt != PacketType.READ_RETURN:
        raise CodecError(f"expected READ_RETURN packet, got {head.pt.name}")
    off = HEAD_BYTES
    out = []
    for _ in range(head.cnt):
        if off + RETURN_META_BYTES > len(body):
            raise CodecError("return packet truncated")
        reqid, gran = _RET.unpack_from(body, off)
        off += RETURN_META_BYTES
        n = gran * UNIT
        if off + n > len(body):
            raise CodecError("return data truncated")
        out.append((reqid, gran, body[off:off + n]))
        off += n
    if off != len(body):
        raise CodecError("trailing bytes after last return entry")
    return out


# --------------------------------------------------------------------------- BOB frames

_BOB_ADDR = ADDR_BYTES


def encode_bob(pt: PacketType, addr: int, data: bytes = b"", desid: int = 0, seq: int = 0) -> bytes:
    """Single-request frame without request messages: head + 6-byte address (+ 64B line)."""
    head = PacketHead(desid, pt, 1)
    need = 0 if pt == PacketType.READ else BOB_LINE
    if len(data) != need:
        raise CodecError(f"BOB {pt.name} frame carries {need} data bytes, got {len(data)}")
    return frame(head.pack() + addr.to_bytes(_BOB_ADDR, "little") + bytes(data), seq)


def decode_bob(data: bytes, expect_desid: int | None = None):
    body = unframe(data)
    head = PacketHead.unpack(body)
    _check_dest(head, expect_desid)
    addr = int.from_bytes(body[HEAD_BYTES:HEAD_BYTES + _BOB_ADDR], "little")
    payload = body[HEAD_BYTES + _BOB_ADDR:]
    return head, addr, payload


# --------------------------------------------------------------------------- sizes

class Composition(NamedTuple):
    """Byte classes of one packet. ``message`` holds the non-address request fields
    (granularity, tid, timeout, request id)."""

    overhead: int
    address: int
    message: int
    data: int

    @property
    def total(self) -> int:
        return self.overhead + self.address + self.message + self.data

    def shares(self) -> tuple[float, float, float, float]:
        t = self.total
        return (self.overhead / t, self.address / t, self.message / t, self.data / t)

    def __add__(self, other):
        return Composition(*(a + b for a, b in zip(self, other)))


OVERHEAD = LKOH_BYTES + HEAD_BYTES


def packet_bytes(mode: str, direction: str, grans: Sequence[int],
                 compressed_addr_bytes: int | None = None) -> tuple[int, Composition]:
    """Size of one packet carrying requests with granularities ``grans``.

    ``mode`` is one of DDR/BOB/MI_1/MI_MUL, ``direction`` one of read/write/return.
    BOB frames always move whole 64-byte lines.
    """
    mode = mode.upper()
    if not grans:
        raise CodecError("a packet carries at least one request")
    if mode == "DDR":
        raise CodecError("DDR mode does not use packets")
    n = len(grans)
    if mode == "BOB":
        if n != 1:
            raise CodecError("BOB frames carry exactly one request")
        if direction == "read":
            c = Composition(OVERHEAD, ADDR_BYTES, 0, 0)
        elif direction in ("write", "return"):
            c = Composition(OVERHEAD, ADDR_BYTES, 0, BOB_LINE)
        else:
            raise CodecError(f"unknown direction {direction!r}")
        return c.total, c
    if mode == "MI_1" and n != 1:
        raise CodecError("MI_1 packets carry exactly one request")
    data = UNIT * sum(grans)
    if direction == "read":
        addr = ADDR_BYTES * n if compressed_addr_bytes is None else compressed_addr_bytes
        c = Composition(OVERHEAD, addr, RTMSG_TAIL_BYTES * n, 0)
    elif direction == "write":
        c = Composition(OVERHEAD, ADDR_BYTES * n, RTMSG_TAIL_BYTES * n, data)
    elif direction == "return":
        c = Composition(OVERHEAD, 0, RETURN_META_BYTES * n, data)
    else:
        raise CodecError(f"unknown direction {direction!r}")
    return c.total, c


def link_cycles(nbytes: int, width_bits: int = 16) -> int:
    return -(-nbytes * 8 // width_bits)


# --------------------------------------------------------------------------- dump

def dump_packet(data: bytes, ctx=None) -> str:
    """Human-readable rendering of an encoded packet (used by ``pkt-dump``)."""
    lines = []
    body = unframe(data)
    start, length, crc = _LKOH.unpack_from(data)
    head = PacketHead.unpack(body)
    lines.append(f"LKOH start={start:#06x} len={length} crc={crc:#010x}")
    lines.append(f"HEAD desid={head.desid} pt={head.pt.name} cnt={head.cnt} rsv={head.rsv:#x}"
                 + (f" compressed={head.scheme.name}" if head.compressed else ""))
    if head.pt == PacketType.READ:
        if len(body) == HEAD_BYTES + ADDR_BYTES and head.cnt == 1:
            _, addr, _ = decode_bob(data)
            lines.append(f"  [0] addr={addr:#x} (BOB)")
        else:
            _, msgs = decode_read(data, ctx)
            for i, r in enumerate(msgs):
                lines.append(f"  [{i}] addr={r.addr:#x} gran={r.gran} tid={r.tid} to={r.to} reqid={r.reqid}")
    elif head.pt == PacketType.WRITE:
        if len(body) == HEAD_BYTES + ADDR_BYTES + BOB_LINE and head.cnt == 1:
            _, addr, payload = decode_bob(data)
            lines.append(f"  [0] addr={addr:#x} data={payload.hex()} (BOB)")
        else:
            _, entries = decode_write(data)
            for i, (r, d) in enumerate(entries):
                lines.append(f"  [{i}] addr={r.addr:#x} gran={r.gran} tid={r.tid} to={r.to} "
                             f"reqid={r.reqid} data={d.hex()}")
    else:
        for i, (reqid, gran, d) in enumerate(decode_return(data)):
            lines.append(f"  [{i}] reqid={reqid} gran={gran} data={d.hex()}")
    lines.append(f"total {len(data)} bytes")
    return "\n".join(lines)
