"""Buffer scheduler: packet decode cost, the FRFCFS policy (compiled in the
kernel) and read-return packing.

The helpers here are small reference versions of what the kernel does, kept in
plain Python so tests can state the expected behaviour directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from . import codec
from .dram import Cmd, Command

def decode_cycles(mode: str, kind: str, cnt: int, batch: int = 4) -> int:
    """Scheduler cycles spent decoding a downstream packet of ``cnt`` requests."""
    if mode == "BOB":
        return 1
    if kind == "read":
        return codec.read_decode_cycles(cnt, batch)
    if kind == "write":
        return codec.write_decode_cycles(cnt)
    raise ValueError(f"kind must be read or write, got {kind!r}")


@dataclass
class ReturnBuffer:
    """Completed reads waiting for the upstream link, drained greedily."""

    mode: str = "MI_MUL"
    max_payload: int = 504
    entries: list = field(default_factory=list)   # (reqid, gran)

    def push(self, reqid: int, gran: int) -> None:
        self.entries.append((reqid, gran))

    def take_packet(self) -> list[tuple[int, int]]:
        """Entries for the next return packet (FIFO, at least one)."""
        if not self.entries:
            return []
        if self.mode != "MI_MUL":
            return [self.entries.pop(0)]
        out, used = [], 0
        while self.entries:
            b = codec.RETURN_META_BYTES + self.entries[0][1] * codec.UNIT
            if out and used + b > self.max_payload:
                break
            out.append(self.entries.pop(0))
            used += b
        return out


def service_order(cmds: Iterable[Command]) -> list[tuple[int, int, int, int, int]]:
    """(ch, rank, sr, bank, row) of each row activation, in issue order. The
    scheduler never activates a row it does not then read or write."""
    return [(c.ch, c.rank, c.sr, c.bank, c.row)
            for c in sorted(cmds, key=lambda c: c.time_ps) if c.cmd == Cmd.ACT]

