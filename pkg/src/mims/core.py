"""Trace-driven out-of-order core.

The cycle loop itself lives in the kernel (``_engine.Core`` plus
``Engine._core_tick``); this module holds the reference model used to check it and
a convenience wrapper that drives cores against a fixed-latency memory.

Per CPU cycle a core retires up to ``retire_per_cycle`` ready instructions from the
ROB head, then fetches up to ``fetch_per_cycle`` instructions. A trace record
expands to ``gap`` non-memory instructions followed by the access itself.
"""

from __future__ import annotations

from typing import Sequence

from .config import CoreConfig, SimConfig
from .trace import HitLevel, Trace

__all__ = ["CoreConfig", "reference_cycles", "run_ideal"]


def reference_cycles(trace: Trace, cfg: CoreConfig = CoreConfig(), mem_cycles: int = 0) -> int:
    """Cycle count of one core whose memory accesses all take ``mem_cycles``.

    A slow, obviously-correct model: a list of ready cycles as the ROB, no
    queues. It returns the cycle after the last commit, so it agrees with
    :func:`run_ideal` for the same latency.
    """
    lat = {HitLevel.L1: cfg.l1_latency, HitLevel.L2: cfg.l2_latency,
           HitLevel.L3: cfg.l3_latency, HitLevel.MEM: mem_cycles}
    instrs: list[int] = []
    for rec in trace:
        instrs.extend([cfg.nonmem_latency] * rec.gap)
        # writes are posted: ready as soon as the memory system takes them
        instrs.append(0 if rec.is_write and rec.hit_level == HitLevel.MEM else lat[rec.hit_level])
    rob: list[int] = []
    i = 0
    cycle = 0
    last = 0
    n = len(instrs)
    while i < n or rob:
        done = 0
        while rob and done < cfg.retire_per_cycle and rob[0] <= cycle:
            rob.pop(0)
            done += 1
            last = cycle
        fetched = 0
        while i < n and fetched < cfg.fetch_per_cycle and len(rob) < cfg.rob_size:
            rob.append(cycle + instrs[i])
            i += 1
            fetched += 1
        cycle += 1
    return last + 1


def run_ideal(traces: Sequence[Trace], mem_ns: float = 0.0, cfg: SimConfig | None = None):
    """Run the kernel's cores against a memory that answers every access after
    ``mem_ns``; returns the :class:`~mims.stats.RunReport`."""
    from .experiments import run

    cfg = (cfg or SimConfig()).replace(cores=len(traces), mode="DDR")
    return run(cfg, traces, ideal_mem_ps=int(round(mem_ns * 1000)))
