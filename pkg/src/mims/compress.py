"""Address compression for read packets.

Three schemes share one block vocabulary:

* Single_Base: ``w | base(6) | (cnt-1) x signed diff(w)``. ``w`` is the smallest of
  1..4 bytes that covers every diff against the first address; ``w == 6`` means the
  remaining addresses are sent raw.
* Multi_Base (inline / offline): one tag byte per address (bit 7 hit, bits 2..0 base
  index) followed by a ``diff_bits/8`` byte signed delta on a hit or the raw 6-byte
  address on a miss. A miss inserts the address as a base, evicting the LRU entry.

Base tables persist across packets; encoder and decoder each keep their own copy and
stay in lockstep because every update is a function of the decoded addresses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .codec import ADDR_BYTES, CodecError, Scheme

SINGLE_WIDTHS = (1, 2, 3, 4)
RAW_WIDTH = 6
HIT = 0x80
COARSE_DIFF_BITS = 8
FINE_DIFF_BITS = 24


class CompressError(CodecError):
    """Malformed compressed address block."""


def _fits(delta: int, nbytes: int) -> bool:
    lim = 1 << (8 * nbytes - 1)
    return -lim <= delta < lim


def _sbytes(v: int, n: int) -> bytes:
    return v.to_bytes(n, "little", signed=True)


def _addr(a: int) -> bytes:
    if not 0 <= a < 1 << 48:
        raise CompressError(f"address {a:#x} outside 48 bits")
    return a.to_bytes(ADDR_BYTES, "little")


# --------------------------------------------------------------------------- single base

def single_base_width(addrs: Sequence[int]) -> int:
    base = addrs[0]
    lo = min(addrs) - base
    hi = max(addrs) - base
    for w in SINGLE_WIDTHS:
        if _fits(lo, w) and _fits(hi, w):
            return w
    return RAW_WIDTH


def single_base_size(addrs: Sequence[int]) -> int:
    if not addrs:
        raise CompressError("cannot compress an empty address list")
    return 1 + ADDR_BYTES + (len(addrs) - 1) * single_base_width(addrs)


def compress_single_base(addrs: Sequence[int]) -> bytes:
    if not addrs:
        raise CompressError("cannot compress an empty address list")
    w = single_base_width(addrs)
    base = addrs[0]
    out = [bytes([w]), _addr(base)]
    if w == RAW_WIDTH:
        out.extend(_addr(a) for a in addrs[1:])
    else:
        out.extend(_sbytes(a - base, w) for a in addrs[1:])
    return b"".join(out)


def decompress_single_base(data: bytes, cnt: int) -> tuple[list[int], int]:
    if cnt < 1 or len(data) < 1 + ADDR_BYTES:
        raise CompressError("single-base block truncated")
    w = data[0]
    if w not in SINGLE_WIDTHS and w != RAW_WIDTH:
        raise CompressError(f"bad single-base width descriptor {w}")
    base = int.from_bytes(data[1:1 + ADDR_BYTES], "little")
    used = 1 + ADDR_BYTES + (cnt - 1) * w
    if len(data) < used:
        raise CompressError("single-base block truncated")
    out = [base]
    off = 1 + ADDR_BYTES
    for _ in range(cnt - 1):
        chunk = data[off:off + w]
        if w == RAW_WIDTH:
            out.append(int.from_bytes(chunk, "little"))
        else:
            a = base + int.from_bytes(chunk, "little", signed=True)
            if not 0 <= a < 1 << 48:
                raise CompressError("single-base delta leaves the address space")
            out.append(a)
        off += w
    return out, used


# --------------------------------------------------------------------------- multi base

@dataclass
class BaseTable:
    n_base: int = 8
    diff_bits: int = COARSE_DIFF_BITS
    bases: list = field(default_factory=list)
    lru: list = field(default_factory=list)  # least recent first

    def __post_init__(self):
        if not 1 <= self.n_base <= 8:
            raise ValueError("n_base must be in 1..8 (3-bit index)")
        if self.diff_bits % 8 or not 8 <= self.diff_bits <= 40:
            raise ValueError("diff_bits must be a whole number of bytes")
        if not self.bases:
            self.bases = [None] * self.n_base

    @property
    def diff_bytes(self) -> int:
        return self.diff_bits // 8

    def copy(self) -> "BaseTable":
        return BaseTable(self.n_base, self.diff_bits, list(self.bases), list(self.lru))

    def snapshot(self) -> tuple:
        return tuple(self.bases), tuple(self.lru)

    def _touch(self, i: int) -> None:
        if i in self.lru:
            self.lru.remove(i)
        self.lru.append(i)

    def lookup(self, a: int):
        """Index and delta of the closest base within range, else None."""
        best = None
        lim = 1 << (self.diff_bits - 1)
        for i, b in enumerate(self.bases):
            if b is None:
                continue
            d = a - b
            if -lim <= d < lim and (best is None or abs(d) < abs(best[1])):
                best = (i, d)
        return best

    def insert(self, a: int) -> int:
        try:
            i = self.bases.index(None)
        except ValueError:
            i = self.lru[0]
        self.bases[i] = a
        self._touch(i)
        return i

    # One walk used by both sides; ``emit`` gets (hit, index, delta, addr).
    def _process(self, addrs: Iterable[int], offline: bool, emit) -> None:
        last_hit = {}
        for a in addrs:
            h = self.lookup(a)
            if h is None:
                self.insert(a)
                emit(False, 0, 0, a)
            else:
                i, d = h
                self._touch(i)
                last_hit[i] = a
                emit(True, i, d, a)
        if offline:
            for i, a in last_hit.items():
                self.bases[i] = a

    def encode(self, addrs: Sequence[int], offline: bool) -> bytes:
        out = []
        db = self.diff_bytes

        def emit(hit, i, d, a):
            if hit:
                out.append(bytes([HIT | i]) + _sbytes(d, db))
            else:
                out.append(b"\x00" + _addr(a))

        self._process(addrs, offline, emit)
        return b"".join(out)

    def encoded_size(self, addrs: Sequence[int], offline: bool) -> int:
        n = [0]
        hit_cost = 1 + self.diff_bytes

        def emit(hit, i, d, a):
            n[0] += hit_cost if hit else 1 + ADDR_BYTES

        self._process(addrs, offline, emit)
        return n[0]

    def decode(self, data: bytes, cnt: int, offline: bool) -> tuple[list[int], int]:
        out = []
        off = 0
        db = self.diff_bytes
        last_hit = {}
        for _ in range(cnt):
            if off >= len(data):
                raise CompressError("multi-base block truncated")
            tag = data[off]
            off += 1
            if tag & HIT:
                if tag & 0x78:
                    raise CompressError(f"reserved tag bits set in {tag:#04x}")
                i = tag & 7
                if i >= self.n_base or self.bases[i] is None:
                    raise CompressError(f"tag refers to unknown base {i}")
                if off + db > len(data):
                    raise CompressError("multi-base block truncated")
                a = self.bases[i] + int.from_bytes(data[off:off + db], "little", signed=True)
                off += db
                if not 0 <= a < 1 << 48:
                    raise CompressError("multi-base delta leaves the address space")
                self._touch(i)
                last_hit[i] = a
            else:
                if tag:
                    raise CompressError(f"miss tag with payload bits {tag:#04x}")
                if off + ADDR_BYTES > len(data):
                    raise CompressError("multi-base block truncated")
                a = int.from_bytes(data[off:off + ADDR_BYTES], "little")
                off += ADDR_BYTES
                self.insert(a)
            out.append(a)
        if offline:
            for i, a in last_hit.items():
                self.bases[i] = a
        return out, off


def compress_multi_base(addrs: Sequence[int], table: BaseTable, offline: bool) -> bytes:
    if not addrs:
        raise CompressError("cannot compress an empty address list")
    return table.encode(addrs, offline)


def decompress_multi_base(data: bytes, cnt: int, table: BaseTable, offline: bool):
    return table.decode(data, cnt, offline)


# --------------------------------------------------------------------------- contexts

class CompressorContext:
    """State held by one end of a link. Single_Base is stateless; Multi_Base keeps a table."""

    def __init__(self, n_base: int = 8, diff_bits: int = COARSE_DIFF_BITS):
        self.table = BaseTable(n_base, diff_bits)

    def compress(self, addrs: Sequence[int], scheme: Scheme) -> bytes:
        scheme = Scheme(scheme)
        if scheme == Scheme.SINGLE:
            return compress_single_base(addrs)
        return compress_multi_base(addrs, self.table, scheme == Scheme.MULTI_OFFLINE)

    def compressed_size(self, addrs: Sequence[int], scheme: Scheme) -> int:
        if scheme == Scheme.SINGLE:
            return single_base_size(addrs)
        if not addrs:
            raise CompressError("cannot compress an empty address list")
        return self.table.encoded_size(addrs, scheme == Scheme.MULTI_OFFLINE)

    def decompress(self, data: bytes, cnt: int, scheme: Scheme) -> tuple[list[int], int]:
        scheme = Scheme(scheme)
        if scheme == Scheme.SINGLE:
            return decompress_single_base(data, cnt)
        return decompress_multi_base(data, cnt, self.table, scheme == Scheme.MULTI_OFFLINE)


SCHEME_NAMES = {
    "single": Scheme.SINGLE,
    "multi_inline": Scheme.MULTI_INLINE,
    "multi_offline": Scheme.MULTI_OFFLINE,
}


def parse_scheme(name: str | None) -> Scheme | None:
    if name is None or name.lower() in ("", "none", "off"):
        return None
    try:
        return SCHEME_NAMES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown compression scheme {name!r}; "
                         f"choose none or one of {', '.join(SCHEME_NAMES)}") from None


@dataclass
class RatioMeter:
    """Running Σ6·cnt / Σ block bytes over compressed read packets."""

    raw: int = 0
    packed: int = 0
    packets: int = 0

    def add(self, cnt: int, block_bytes: int) -> None:
        self.raw += ADDR_BYTES * cnt
        self.packed += block_bytes
        self.packets += 1

    @property
    def ratio(self) -> float:
        if not self.packets:
            raise ValueError("no packets were compressed")
        return self.raw / self.packed


def compression_ratio(packets: Iterable[Sequence[int]], scheme: Scheme,
                      n_base: int = 8, diff_bits: int = COARSE_DIFF_BITS) -> float:
    """Ratio over a sequence of packets (address lists), starting from cold tables."""
    ctx = CompressorContext(n_base, diff_bits)
    meter = RatioMeter()
    for addrs in packets:
        meter.add(len(addrs), ctx.compressed_size(addrs, scheme))
    return meter.ratio
