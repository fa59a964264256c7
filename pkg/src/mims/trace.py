"""Memory-access traces: record format, text I/O, synthetic workloads and trunk merging.

A trace is held column-wise (numpy arrays) so that million-record traces stay
cheap; indexing or iterating a :class:`Trace` yields :class:`TraceRecord` values.
"""

from __future__ import annotations

import enum
import gzip
import io
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

UNIT = 8
MAX_ADDR = 1 << 48
MAX_GRAN = 512
LINE = 64


class HitLevel(enum.IntEnum):
    L1 = 0
    L2 = 1
    L3 = 2
    MEM = 3


class Pattern(enum.Enum):
    UNIFORM_RANDOM = "uniform_random"
    SEQUENTIAL = "sequential"
    STRIDED = "strided"
    POINTER_CHASE = "pointer_chase"


class TraceFormatError(ValueError):
    """Raised for malformed trace lines; carries the 1-based line number."""

    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class TraceRecord:
    gap: int
    addr: int
    gran: int
    is_write: bool
    hit_level: HitLevel = HitLevel.MEM
    tid: int = 0

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError(f"negative gap {self.gap}")
        if not 0 <= self.addr < MAX_ADDR:
            raise ValueError(f"address {self.addr:#x} outside 48 bits")
        if self.addr % UNIT:
            raise ValueError(f"address {self.addr:#x} not 8-byte aligned")
        if not 1 <= self.gran <= MAX_GRAN:
            raise ValueError(f"granularity {self.gran} outside 1..{MAX_GRAN}")
        if not 0 <= self.tid <= 255:
            raise ValueError(f"thread id {self.tid} outside 0..255")

    @property
    def nbytes(self) -> int:
        return self.gran * UNIT


class Trace(Sequence[TraceRecord]):
    """Column-oriented sequence of trace records."""

    __slots__ = ("gap", "addr", "gran", "is_write", "hit_level", "tid")

    def __init__(self, gap, addr, gran, is_write, hit_level=None, tid=None):
        n = len(addr)
        self.gap = np.asarray(gap, dtype=np.int64)
        self.addr = np.asarray(addr, dtype=np.int64)
        self.gran = np.asarray(gran, dtype=np.int64)
        self.is_write = np.asarray(is_write, dtype=bool)
        self.hit_level = (np.full(n, HitLevel.MEM, dtype=np.int8) if hit_level is None
                          else np.asarray(hit_level, dtype=np.int8))
        self.tid = np.zeros(n, dtype=np.int64) if tid is None else np.asarray(tid, dtype=np.int64)
        if not (len(self.gap) == len(self.gran) == len(self.is_write)
                == len(self.hit_level) == len(self.tid) == n):
            raise ValueError("trace columns differ in length")

    @classmethod
    def from_records(cls, records: Iterable[TraceRecord]) -> "Trace":
        recs = list(records)
        return cls([r.gap for r in recs], [r.addr for r in recs], [r.gran for r in recs],
                   [r.is_write for r in recs], [int(r.hit_level) for r in recs],
                   [r.tid for r in recs])

    @classmethod
    def empty(cls) -> "Trace":
        return cls([], [], [], [])

    def __len__(self) -> int:
        return len(self.addr)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trace(self.gap[i], self.addr[i], self.gran[i], self.is_write[i],
                         self.hit_level[i], self.tid[i])
        return TraceRecord(int(self.gap[i]), int(self.addr[i]), int(self.gran[i]),
                           bool(self.is_write[i]), HitLevel(int(self.hit_level[i])),
                           int(self.tid[i]))

    def __iter__(self) -> Iterator[TraceRecord]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return all(np.array_equal(getattr(self, c), getattr(other, c)) for c in self.__slots__)

    def __repr__(self) -> str:
        return f"Trace(n={len(self)})"

    def validate(self) -> None:
        if len(self) == 0:
            return
        if (self.addr % UNIT).any():
            i = int(np.flatnonzero(self.addr % UNIT)[0])
            raise ValueError(f"record {i}: address {int(self.addr[i]):#x} not 8-byte aligned")
        if (self.gran < 1).any() or (self.gran > MAX_GRAN).any():
            raise ValueError("granularity outside 1..512")
        if (self.gap < 0).any():
            raise ValueError("negative gap")

    @property
    def instructions(self) -> int:
        return int(self.gap.sum()) + len(self)

    @property
    def mem_bytes(self) -> int:
        mem = self.hit_level == HitLevel.MEM
        return int(self.gran[mem].sum()) * UNIT

    def with_tid(self, tid: int) -> "Trace":
        return Trace(self.gap, self.addr, self.gran, self.is_write, self.hit_level,
                     np.full(len(self), tid, dtype=np.int64))

    def split_by_tid(self) -> dict[int, "Trace"]:
        out = {}
        for t in np.unique(self.tid):
            m = self.tid == t
            out[int(t)] = Trace(self.gap[m], self.addr[m], self.gran[m], self.is_write[m],
                                self.hit_level[m], self.tid[m])
        return out


def concat(traces: Sequence[Trace]) -> Trace:
    if not traces:
        return Trace.empty()
    return Trace(*(np.concatenate([getattr(t, c) for t in traces]) for c in Trace.__slots__))


# --------------------------------------------------------------------------- profiles

GRANS = tuple(range(1, 9))


@dataclass(frozen=True)
class WorkloadProfile:
    name: str
    rpki: float
    wpki: float
    read_gran_dist: dict[int, float]
    write_gran_dist: dict[int, float]
    pattern: Pattern = Pattern.UNIFORM_RANDOM
    stride: int = 64
    footprint: int = 1 << 30

    def validate(self) -> None:
        if not (self.rpki > 0 and self.wpki > 0):
            raise ValueError(f"{self.name}: rpki and wpki must be positive")
        for label, dist in (("read", self.read_gran_dist), ("write", self.write_gran_dist)):
            if any(g not in GRANS for g in dist):
                raise ValueError(f"{self.name}: {label} distribution has granularity outside 1..8")
            if any(p < 0 for p in dist.values()):
                raise ValueError(f"{self.name}: {label} distribution has a negative probability")
            total = sum(dist.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"{self.name}: {label} granularity distribution sums to {total!r}, not 1")
        if self.footprint < LINE or self.footprint % LINE:
            raise ValueError(f"{self.name}: footprint must be a positive multiple of 64")
        if self.pattern is Pattern.STRIDED and (self.stride <= 0 or self.stride % UNIT):
            raise ValueError(f"{self.name}: stride must be a positive multiple of 8")

    def mean_gran(self, write: bool = False) -> float:
        d = self.write_gran_dist if write else self.read_gran_dist
        return sum(g * p for g, p in d.items())

    def _vec(self, write: bool) -> np.ndarray:
        d = self.write_gran_dist if write else self.read_gran_dist
        return np.array([d.get(g, 0.0) for g in GRANS])


# Fig 6 gives only a few shares explicitly; the other buckets are filled so the
# means match Table 2.
PROFILES: dict[str, WorkloadProfile] = {
    p.name: p for p in [
        # random 8-byte updates: no whole-line accesses at all
        WorkloadProfile("gups", 69.67, 69.62,
                        {1: .50, 2: .30, 3: .12, 4: .08},
                        {1: .50, 2: .30, 3: .12, 4: .08}),
        WorkloadProfile("ssca2", 20.89, 20.42,
                        {1: .64, 2: .24, 3: .05, 4: .04, 8: .03},
                        {1: .70, 2: .21, 3: .04, 4: .03, 8: .02},
                        pattern=Pattern.POINTER_CHASE),
        WorkloadProfile("canneal", 17.79, 8.64,
                        {1: .7285, 2: .153, 3: .0685, 8: .05},
                        {1: .9759, 4: .017175, 8: .006925}),
        WorkloadProfile("pagerank", 9.76, 6.14,
                        {1: .40, 2: .30, 3: .10, 4: .10, 8: .10},
                        {1: .30, 2: .35, 3: .10, 4: .10, 8: .15}),
        WorkloadProfile("listrank", 22.56, 15.45,
                        {2: .5299, 4: .3154, 8: .1547},
                        {2: .7651, 4: .009, 8: .2259}),
        WorkloadProfile("bfs", 22.36, 2.44,
                        {1: .25, 2: .30, 4: .25, 8: .20},
                        {1: .20, 2: .25, 4: .30, 8: .25}),
        WorkloadProfile("stream", 33.33, 16.63, {8: 1.0}, {8: 1.0},
                        pattern=Pattern.SEQUENTIAL, footprint=1 << 28),
    ]
}


def get_profile(name: str) -> WorkloadProfile:
    try:
        return PROFILES[name.lower()]
    except KeyError:
        raise KeyError(f"unknown workload profile {name!r}; known: {', '.join(PROFILES)}") from None


def _splitmix(x: np.uint64) -> int:
    x = (int(x) + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def gen_synthetic(profile: WorkloadProfile, n_records: int, seed: int, base: int = 0,
                  tid: int = 0) -> Trace:
    """Draw a post-cache trace (every record is a MEM access) from ``profile``.

    Gaps are geometric so that reads and writes arrive at ``rpki``/``wpki`` per
    thousand instructions. Records of granularity <= 8 never cross a 64-byte line.
    Addresses fall in ``[base, base + footprint)``.
    """
    if n_records <= 0:
        raise ValueError("n_records must be positive")
    profile.validate()
    if base % LINE or base + profile.footprint > MAX_ADDR:
        raise ValueError("base must be 64-byte aligned and keep the footprint inside 48 bits")
    rng = np.random.default_rng(seed)
    n = n_records
    p_mem = (profile.rpki + profile.wpki) / 1000.0
    if p_mem >= 1.0:
        raise ValueError(f"{profile.name}: rpki + wpki must stay below 1000")
    gap = rng.geometric(p_mem, n).astype(np.int64) - 1
    is_write = rng.random(n) < profile.wpki / (profile.rpki + profile.wpki)
    gran = np.empty(n, dtype=np.int64)
    grans = np.array(GRANS)
    nw = int(is_write.sum())
    gran[~is_write] = rng.choice(grans, size=n - nw, p=profile._vec(False))
    gran[is_write] = rng.choice(grans, size=nw, p=profile._vec(True))

    lines = profile.footprint // LINE
    pat = profile.pattern
    if pat is Pattern.UNIFORM_RANDOM:
        line = rng.integers(0, lines, n)
        off = rng.integers(0, 1 << 30, n) % (9 - gran)
        addr = line * LINE + off * UNIT
    elif pat is Pattern.POINTER_CHASE:
        line = np.empty(n, dtype=np.int64)
        cur = int(rng.integers(0, lines))
        for i in range(n):
            line[i] = cur
            cur = _splitmix(cur) % lines
        off = rng.integers(0, 1 << 30, n) % (9 - gran)
        addr = line * LINE + off * UNIT
    else:
        # reads and writes walk separate streams (halves of the footprint) so that
        # consecutive same-direction accesses are contiguous or evenly strided
        half = max(profile.footprint // 2 // LINE * LINE, LINE)
        seq = pat is Pattern.SEQUENTIAL
        addr_l = [0] * n
        pos = [0, 0]
        g_l = gran.tolist()
        for i, w in enumerate(is_write.tolist()):
            p = pos[w]
            nb = g_l[i] * UNIT
            if p % LINE + nb > LINE:
                p += LINE - p % LINE
            if p + nb > half:
                p = 0
            addr_l[i] = p + (half if w else 0)
            pos[w] = p + (nb if seq else profile.stride)
        addr = np.array(addr_l, dtype=np.int64)
    addr = addr + base
    return Trace(gap, addr, gran, is_write, None, np.full(n, tid, dtype=np.int64))


# --------------------------------------------------------------------------- merging

def _merge_pass(tr: Trace, window: int, read_cap: int, write_cap: int) -> Trace:
    n = len(tr)
    gap = tr.gap.tolist()
    addr = tr.addr.tolist()
    gran = tr.gran.tolist()
    wr = tr.is_write.tolist()
    lvl = tr.hit_level.tolist()
    tid = tr.tid.tolist()
    out_gap, out_addr, out_gran, out_wr, out_lvl, out_tid = [], [], [], [], [], []
    mem = int(HitLevel.MEM)
    caps = (read_cap // UNIT, write_cap // UNIT)
    for w0 in range(0, n, window):
        open_run = [-1, -1]  # output index of the current run per direction
        for i in range(w0, min(w0 + window, n)):
            d = 1 if wr[i] else 0
            j = open_run[d]
            if (lvl[i] == mem and j >= 0 and out_tid[j] == tid[i]
                    and out_addr[j] + out_gran[j] * UNIT == addr[i]
                    and out_gran[j] + gran[i] <= caps[d]):
                out_gran[j] += gran[i]
                out_gap[j] += gap[i] + 1
                continue
            out_gap.append(gap[i])
            out_addr.append(addr[i])
            out_gran.append(gran[i])
            out_wr.append(wr[i])
            out_lvl.append(lvl[i])
            out_tid.append(tid[i])
            if lvl[i] == mem:
                open_run[d] = len(out_addr) - 1
    return Trace(out_gap, out_addr, out_gran, out_wr, out_lvl, out_tid)


def merge_trunks(trace: Trace | Sequence[TraceRecord], window: int = 256,
                 read_cap: int = 4096, write_cap: int = 512) -> Trace:
    """Fuse contiguous same-direction accesses into trunk requests.

    Inside each block of ``window`` records, a read (write) extends the most recent
    read (write) run when it starts exactly where that run ends and the run stays
    within ``read_cap`` (``write_cap``) bytes; otherwise it opens a new run.
    Records are never reordered. The fused record sits where its run began and its
    gap absorbs the gaps and instruction slots of the absorbed records, so the
    instruction count is unchanged. Passes repeat until nothing changes, which makes
    the result a fixed point.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if read_cap < UNIT or write_cap < UNIT:
        raise ValueError("caps must be at least 8 bytes")
    tr = trace if isinstance(trace, Trace) else Trace.from_records(trace)
    tr.validate()
    while True:
        nxt = _merge_pass(tr, window, read_cap, write_cap)
        if len(nxt) == len(tr):
            return nxt
        tr = nxt


# --------------------------------------------------------------------------- file I/O

_LEVEL_NAMES = {lv.name: lv for lv in HitLevel}


def _open_text(path, mode: str):
    path = str(path)
    if path.endswith(".gz"):
        return io.TextIOWrapper(gzip.open(path, mode + "b"), encoding="ascii")
    return open(path, mode, encoding="ascii")


def save_trace(records: Trace | Iterable[TraceRecord], path) -> None:
    tr = records if isinstance(records, Trace) else Trace.from_records(records)
    with _open_text(path, "w") as f:
        for g, a, n, w, lv, t in zip(tr.gap.tolist(), tr.addr.tolist(), tr.gran.tolist(),
                                      tr.is_write.tolist(), tr.hit_level.tolist(), tr.tid.tolist()):
            f.write(f"{g} {a:#x} {n} {'W' if w else 'R'} {HitLevel(lv).name} {t}\n")


def parse_line(line: str, lineno: int = 1) -> TraceRecord:
    parts = line.split()
    if len(parts) != 6:
        raise TraceFormatError(lineno, f"expected 6 fields, got {len(parts)}")
    g, a, n, rw, lv, t = parts
    try:
        gap, addr, gran, tid = int(g), int(a, 16), int(n), int(t)
    except ValueError as e:
        raise TraceFormatError(lineno, str(e)) from None
    if rw not in ("R", "W"):
        raise TraceFormatError(lineno, f"direction must be R or W, got {rw!r}")
    if lv not in _LEVEL_NAMES:
        raise TraceFormatError(lineno, f"unknown hit level {lv!r}")
    try:
        return TraceRecord(gap, addr, gran, rw == "W", _LEVEL_NAMES[lv], tid)
    except ValueError as e:
        raise TraceFormatError(lineno, str(e)) from None


def load_trace(path) -> Trace:
    recs = []
    with _open_text(path, "r") as f:
        for lineno, line in enumerate(f, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            recs.append(parse_line(s, lineno))
    return Trace.from_records(recs)


# --------------------------------------------------------------------------- histograms

@dataclass
class GranHistogram:
    read: dict[int, float]
    write: dict[int, float]
    read_counts: dict[int, int]
    write_counts: dict[int, int]
    rpki: float
    wpki: float
    instructions: int = 0
    extra: dict = field(default_factory=dict)

    def mean(self, write: bool = False) -> float:
        d = self.write if write else self.read
        return sum(g * p for g, p in d.items())


def granularity_histogram(trace: Trace | Sequence[TraceRecord]) -> GranHistogram:
    tr = trace if isinstance(trace, Trace) else Trace.from_records(trace)
    mem = tr.hit_level == HitLevel.MEM
    out = []
    for w in (False, True):
        g = tr.gran[mem & (tr.is_write == w)]
        vals, counts = np.unique(g, return_counts=True)
        c = {int(v): int(k) for v, k in zip(vals, counts)}
        tot = sum(c.values())
        out.append((c, {v: k / tot for v, k in c.items()} if tot else {}))
    instr = tr.instructions
    nr = sum(out[0][0].values())
    nw = sum(out[1][0].values())
    return GranHistogram(out[0][1], out[1][1], out[0][0], out[1][0],
                         1000.0 * nr / instr if instr else 0.0,
                         1000.0 * nw / instr if instr else 0.0, instr)
