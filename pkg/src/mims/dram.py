"""DDR3 timing parameters, address mapping, command traces and the timing oracle.

The oracle in :func:`validate_command_trace` rebuilds device state from nothing but a
list of commands. It shares no code with the scheduler in the engine, so a clean
report is real evidence that the engine respected every constraint.
"""

from __future__ import annotations

import dataclasses
import enum
import gzip
import io
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

TCK_PS = 1500
MEM_LIMIT = 1 << 33  # 8 GB


@dataclass(frozen=True)
class TimingParams:
    """DDR3-1333 (9-9-9) values in command-clock cycles."""

    CL: int = 9
    tRCD: int = 9
    tRP: int = 9
    tRAS: int = 24
    tRC: int = 33
    tCCD: int = 4
    tRRD: int = 4
    tFAW: int = 20
    tWR: int = 10
    tWTR: int = 5
    tRTP: int = 5
    tCWL: int = 7
    tBURST: int = 4
    tRFC: int = 107
    tREFI: int = 5200
    tRTRS: int = 1
    tCK_ps: int = TCK_PS

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "tRTRS":
                if v < 0:
                    raise ValueError("tRTRS must be nonnegative")
            elif v <= 0:
                raise ValueError(f"{f.name} must be positive, got {v}")
        if self.tRC != self.tRAS + self.tRP:
            raise ValueError(f"tRC ({self.tRC}) must equal tRAS + tRP ({self.tRAS + self.tRP})")

    def as_tuple(self) -> tuple:
        return dataclasses.astuple(self)


# --------------------------------------------------------------------------- mapping

class MappedAddr(NamedTuple):
    channel: int
    rank: int
    subrank: int
    bank: int
    row: int
    colblock: int
    offset: int  # byte within unit (MIMS) or line (DDR)


def map_address(addr: int, mimsmap: bool) -> MappedAddr:
    if not 0 <= addr < MEM_LIMIT:
        raise ValueError(f"address {addr:#x} outside the 8 GB physical space")
    if mimsmap:
        return MappedAddr(
            channel=(addr >> 3) & 1, subrank=(addr >> 4) & 7, colblock=(addr >> 7) & 127,
            bank=(addr >> 14) & 7, rank=(addr >> 17) & 1, row=(addr >> 18) & 0x7FFF,
            offset=addr & 7)
    return MappedAddr(
        channel=(addr >> 6) & 1, subrank=0, colblock=(addr >> 7) & 127,
        bank=(addr >> 14) & 7, rank=(addr >> 17) & 1, row=(addr >> 18) & 0x7FFF,
        offset=addr & 63)


def unmap_address(m: MappedAddr, mimsmap: bool) -> int:
    base = (m.row << 18) | (m.rank << 17) | (m.bank << 14) | (m.colblock << 7)
    if mimsmap:
        return base | (m.subrank << 4) | (m.channel << 3) | m.offset
    if m.subrank:
        raise ValueError("DDR addresses have no subrank")
    return base | (m.channel << 6) | m.offset


def request_units(addr: int, gran: int) -> list[tuple[int, int, int, int, int]]:
    """(rank, subrank, bank, row, colblock) of each 8-byte unit of a MIMS request.

    The channel is taken from the start address; the units occupy consecutive
    channel-local unit slots so a request never leaves its buffer scheduler.
    """
    u0 = addr >> 4
    out = []
    for i in range(gran):
        u = u0 + i
        out.append(((u >> 13) & 1, u & 7, (u >> 10) & 7, (u >> 14) & 0x7FFF, (u >> 3) & 127))
    return out


# --------------------------------------------------------------------------- commands

class Cmd(enum.IntEnum):
    ACT = 0
    RD = 1
    RDA = 2
    WR = 3
    WRA = 4
    PRE = 5
    REF = 6


class Command(NamedTuple):
    time_ps: int
    ch: int
    rank: int
    sr: int
    bank: int
    row: int
    col: int
    cmd: Cmd

    def format(self) -> str:
        return (f"{self.time_ps} {self.ch} {self.rank} {self.sr} {self.bank} "
                f"{self.row} {self.col} {self.cmd.name}")


def _open(path, mode):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="ascii")
    return open(path, mode, encoding="ascii")


def write_command_trace(cmds: Iterable[Command], path_or_file, mimsmap: bool) -> None:
    own = not isinstance(path_or_file, io.TextIOBase)
    f = _open(path_or_file, "w") if own else path_or_file
    try:
        f.write(f"# mims command trace; map={'MIMS' if mimsmap else 'DDR'}\n")
        f.write("# time_ps ch rank sr bank row col CMD\n")
        for c in cmds:
            f.write(c.format())
            f.write("\n")
    finally:
        if own:
            f.close()


def read_command_trace(path) -> tuple[list[Command], bool]:
    """Returns the commands and whether the header declared the MIMS mapping."""
    cmds = []
    mimsmap = True
    with _open(path, "r") as f:
        for lineno, line in enumerate(f, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                if "map=DDR" in s:
                    mimsmap = False
                continue
            p = s.split()
            if len(p) != 8:
                raise ValueError(f"line {lineno}: expected 8 fields, got {len(p)}")
            try:
                nums = [int(x) for x in p[:7]]
                cmd = Cmd[p[7]]
            except (ValueError, KeyError):
                raise ValueError(f"line {lineno}: malformed command {s!r}") from None
            cmds.append(Command(*nums, cmd))
    return cmds, mimsmap


# --------------------------------------------------------------------------- oracle

class Violation(NamedTuple):
    index: int
    time_ps: int
    constraint: str
    detail: str


CONSTRAINTS = ("cmd_bus", "state", "tRCD", "tRC", "tRP", "tRRD", "tFAW", "tCCD",
               "tWTR", "data_bus", "tRAS", "tRTP", "tWR", "tRFC")


class _Bank:
    __slots__ = ("row", "act", "pre", "min_pre")

    def __init__(self):
        self.row = None      # open row, or None
        self.act = None      # last ACT cycle
        self.pre = None      # cycle the last precharge happened (explicit or auto)
        self.min_pre = None  # earliest legal precharge while open


def command_slacks(cmds: Sequence[Command], timing: TimingParams = TimingParams(),
                   mimsmap: bool = True, check_refresh_interval: bool = False):
    """Per command, the slack (in cycles) left for each constraint that applies.

    A negative value is a violation. State problems (CAS to a closed bank, ACT to an
    open one) are reported with slack -1 under ``state``.
    """
    T = timing
    out = []
    banks: dict = {}
    acts_group: dict = {}
    last_cas_lane: dict = {}
    lane_busy: dict = {}  # lane -> (end_cycle, rank, is_write)
    wr_end: dict = {}     # (ch, rank, sr) -> last write data end
    ref_end: dict = {}    # (ch, rank) -> cycle refresh finishes
    last_cmd_cycle: dict = {}
    prev_time = None

    for c in cmds:
        if prev_time is not None and c.time_ps < prev_time:
            raise ValueError("command trace is not sorted by time")
        prev_time = c.time_ps
        s = {}
        if c.time_ps % T.tCK_ps:
            s["cmd_bus"] = -1
            out.append(s)
            continue
        t = c.time_ps // T.tCK_ps
        sr = c.sr if mimsmap else 0
        lc = last_cmd_cycle.get(c.ch)
        if lc is not None:
            s["cmd_bus"] = t - lc - 1
        last_cmd_cycle[c.ch] = t
        rk = (c.ch, c.rank)
        re = ref_end.get(rk)

        if c.cmd == Cmd.REF:
            worst = None
            for key, b in banks.items():
                if key[0] != c.ch or key[1] != c.rank:
                    continue
                if b.row is not None:
                    s["state"] = -1
                elif b.pre is not None:
                    v = t - (b.pre + T.tRP)
                    worst = v if worst is None else min(worst, v)
            if worst is not None:
                s["tRP"] = worst
            if re is not None:
                s["tRFC"] = t - re
            ref_end[rk] = t + T.tRFC
            out.append(s)
            continue

        bk = banks.setdefault((c.ch, c.rank, sr, c.bank), _Bank())
        if c.cmd == Cmd.ACT:
            if bk.row is not None:
                s["state"] = -1
            if bk.act is not None:
                s["tRC"] = t - (bk.act + T.tRC)
            if bk.pre is not None:
                s["tRP"] = t - (bk.pre + T.tRP)
            if re is not None:
                s["tRFC"] = t - re
            grp = (c.ch, c.rank, sr) if mimsmap else (c.ch, c.rank)
            hist = acts_group.setdefault(grp, [])
            if hist:
                s["tRRD"] = t - (hist[-1] + T.tRRD)
            if len(hist) >= 4:
                s["tFAW"] = t - (hist[-4] + T.tFAW)
            hist.append(t)
            if len(hist) > 4:
                del hist[0]
            bk.row = c.row
            bk.act = t
            bk.min_pre = t + T.tRAS
        elif c.cmd in (Cmd.RD, Cmd.RDA, Cmd.WR, Cmd.WRA):
            is_wr = c.cmd in (Cmd.WR, Cmd.WRA)
            if bk.row is None or bk.row != c.row:
                s["state"] = -1
                out.append(s)
                continue
            s["tRCD"] = t - (bk.act + T.tRCD)
            lane = (c.ch, sr)
            lcas = last_cas_lane.get(lane)
            if lcas is not None:
                s["tCCD"] = t - (lcas + T.tCCD)
            last_cas_lane[lane] = t
            dkey = (c.ch, c.rank, sr)
            if not is_wr and dkey in wr_end:
                s["tWTR"] = t - (wr_end[dkey] + T.tWTR)
            start = t + (T.tCWL if is_wr else T.CL)
            end = start + T.tBURST
            lb = lane_busy.get(lane)
            if lb is not None:
                gap = T.tRTRS if (lb[1] != c.rank or (not lb[2] and is_wr)) else 0
                s["data_bus"] = start - (lb[0] + gap)
            lane_busy[lane] = (end, c.rank, is_wr)
            if is_wr:
                wr_end[dkey] = end
                bk.min_pre = max(bk.min_pre, end + T.tWR)
            else:
                bk.min_pre = max(bk.min_pre, t + T.tRTP)
            if c.cmd in (Cmd.RDA, Cmd.WRA):
                bk.pre = bk.min_pre
                bk.row = None
        elif c.cmd == Cmd.PRE:
            if bk.row is None:
                s["state"] = -1
            else:
                s["tRAS"] = t - (bk.act + T.tRAS)
                # the tighter of the CAS-derived limits; name it after its source
                extra = bk.min_pre - (bk.act + T.tRAS)
                if extra > 0:
                    s["tRTP/tWR"] = t - bk.min_pre
                bk.pre = t
                bk.row = None
        out.append(s)
    return out


def validate_command_trace(cmds: Sequence[Command], timing: TimingParams = TimingParams(),
                           mimsmap: bool = True) -> Violation | None:
    """First violation in the trace, or None when every constraint holds."""
    for i, s in enumerate(command_slacks(cmds, timing, mimsmap)):
        for name, v in s.items():
            if v < 0:
                c = cmds[i]
                return Violation(i, c.time_ps, name,
                                 f"{c.format()} misses {name} by {-v} cycle(s)")
    return None


def peak_channel_bytes_per_ps(timing: TimingParams = TimingParams()) -> float:
    """64-bit data path, two transfers per clock."""
    return 8 * 2 / timing.tCK_ps
