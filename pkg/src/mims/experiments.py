"""Build traces, run the kernel and turn its counters into a :class:`RunReport`.

>>> from mims.config import SimConfig
>>> rep = run(SimConfig(mode="DDR", cores=1, records=200, workload="stream"))
>>> rep.requests
200
"""

from __future__ import annotations

import time
from array import array
from types import SimpleNamespace
from typing import Sequence

import numpy as np

from . import engine as _engine_sel
from .compress import CompressorContext
from .config import MODES, SimConfig
from .controller import WireChecker
from .dram import Cmd, Command
from .power import account
from .stats import RunReport, effective_bw_utilization, latency_breakdown, normalize, packet_stats
from .trace import (LINE, Trace, concat, gen_synthetic, get_profile, load_trace,
                    merge_trunks)

MODE_ID = {m: i for i, m in enumerate(MODES)}
SCHEME_ID = {"none": -1, "single": 0, "multi_inline": 1, "multi_offline": 2}
ADDR_LIMIT = 1 << 33          # 8 GiB: 2 channels x 2 ranks x 2 GiB
ACCESS_CAP = 4096


class TraceError(ValueError):
    pass


# --------------------------------------------------------------------------- traces

def core_seed(seed: int, core: int) -> int:
    return int(np.random.SeedSequence([seed, core]).generate_state(1)[0])


def build_traces(cfg: SimConfig) -> list[Trace]:
    """One trace per core, before any merging."""
    if cfg.trace_file:
        per_tid = load_trace(cfg.trace_file).split_by_tid()
        if len(per_tid) > cfg.cores:
            raise TraceError(f"trace has {len(per_tid)} threads but only {cfg.cores} cores")
        return [per_tid[k] for k in sorted(per_tid)]
    prof = get_profile(cfg.workload)
    span = -(-prof.footprint // LINE) * LINE
    return [gen_synthetic(prof, cfg.records, core_seed(cfg.seed, c),
                          base=(c * span) % ADDR_LIMIT, tid=c)
            for c in range(cfg.cores)]


def prepare_traces(cfg: SimConfig, traces: Sequence[Trace]) -> list[Trace]:
    """Merge (if enabled) and check that every request fits the chosen system."""
    out = []
    for tr in traces:
        if cfg.merge:
            tr = merge_trunks(tr, cfg.merge_window, cfg.merge_read_cap, cfg.merge_write_cap)
        check_trace(tr, cfg)
        out.append(tr)
    return out


def check_trace(tr: Trace, cfg: SimConfig) -> None:
    tr.validate()
    if len(tr) == 0:
        return
    end = tr.addr + tr.gran * 8
    if int(end.max()) > ADDR_LIMIT:
        raise TraceError("trace touches memory beyond the 8 GiB the channels hold")
    if not cfg.mims:
        crosses = (tr.addr % LINE) + tr.gran * 8 > LINE
        if crosses.any():
            i = int(np.argmax(crosses))
            raise TraceError(f"record {i} crosses a 64-byte line; {cfg.mode} moves whole lines "
                             "only (merged traces need MI_1 or MI_MUL)")


def _columns(traces: Sequence[Trace]):
    offsets = [0]
    for tr in traces:
        offsets.append(offsets[-1] + len(tr))
    if traces:
        allt = concat(traces)
        cols = [array("q", np.ascontiguousarray(c, dtype=np.int64).tobytes())
                for c in (allt.gap, allt.addr, allt.gran, allt.is_write.astype(np.int64),
                          allt.hit_level, allt.tid)]
    else:
        cols = [array("q") for _ in range(6)]
    return cols, offsets


# --------------------------------------------------------------------------- params

def engine_params(cfg: SimConfig, ncores: int, record_cmds=False, wire=False,
                  ideal_mem_ps: int = -1) -> SimpleNamespace:
    c = cfg.core
    scheme = SCHEME_ID[cfg.compression]
    return SimpleNamespace(
        mode=MODE_ID[cfg.mode], cores=ncores, channels=cfg.channels, ranks=cfg.ranks,
        subranks=cfg.subranks, banks=cfg.banks, cpu_ps=c.clock_ps, timing=cfg.timing,
        fetch_width=c.fetch_per_cycle, retire_width=c.retire_per_cycle, rob_size=c.rob_size,
        nonmem_latency=c.nonmem_latency, l1_latency=c.l1_latency, l2_latency=c.l2_latency,
        l3_latency=c.l3_latency, rq_cap=cfg.read_queue, wq_cap=cfg.write_queue,
        high_mark=cfg.high_mark, low_mark=cfg.low_mark, link_bits=cfg.link_bits,
        sched_latency=cfg.sched_latency, max_payload=cfg.max_payload,
        sched_queue=cfg.sched_queue, age_cap_ps=cfg.age_cap_ns * 1000,
        decode_batch=cfg.decode_batch, refresh=cfg.refresh, ideal_mem_ps=ideal_mem_ps,
        scheme=scheme,
        compressors=[CompressorContext(cfg.n_base, cfg.diff_bits) for _ in range(cfg.channels)]
        if scheme >= 0 else None,
        wire=WireChecker(cfg.channels, cfg.n_base, cfg.diff_bits) if wire else None,
        reqid_bits=cfg.reqid_bits, record_cmds=record_cmds, access_cap=ACCESS_CAP,
    )


# --------------------------------------------------------------------------- run

def run(cfg: SimConfig, traces: Sequence[Trace] | None = None, *, record_cmds: bool = False,
        wire: bool = False, ideal_mem_ps: int = -1, kernel=None) -> RunReport:
    """Simulate one configuration.

    ``traces`` are per-core raw traces (merging is applied here when enabled);
    ``kernel`` picks a specific engine module, defaulting to the selected one.
    """
    cfg.validate()
    raw = build_traces(cfg) if traces is None else list(traces)
    trs = prepare_traces(cfg, raw)
    cols, offsets = _columns(trs)
    p = engine_params(cfg, len(trs), record_cmds, wire, ideal_mem_ps)
    mod = kernel or _engine_sel.kernel
    t0 = time.perf_counter()
    res = mod.Engine(p, *cols, offsets).run()
    wall = time.perf_counter() - t0

    expect = sum(tr.instructions for tr in trs)
    if sum(res["committed"]) != expect:
        raise RuntimeError(f"committed {sum(res['committed'])} of {expect} instructions")

    C = cfg.core.clock_ps
    runtime = max(res["commit_ps"]) if res["commit_ps"] else 0
    lat, counts = latency_breakdown(res["seg_sum"], res["seg_count"])
    pk = packet_stats(res["packets"])
    ratio = None
    if cfg.compression != "none" and res["comp_packed"]:
        ratio = res["comp_raw"] / res["comp_packed"]
    power = account(cfg.mode, res, runtime, cfg.channels, cfg.ranks, cfg.power, cfg.timing)
    extra = {"wall_s": wall, "kernel": "compiled" if _engine_sel._is_compiled(mod) else "python",
             "raw": res}
    if p.wire is not None:
        extra["wire_packets"] = p.wire.packets
        extra["wire_bytes"] = p.wire.bytes
    return RunReport(
        mode=cfg.mode, workload=cfg.workload if not cfg.trace_file else cfg.trace_file,
        sched_latency=cfg.sched_latency, compression=cfg.compression, merge=cfg.merge,
        cores=len(trs), cycles=runtime // C + 1, committed=sum(res["committed"]),
        runtime_ps=runtime, requests=res["requests"], reads=res["reads"], writes=res["writes"],
        useful_bytes=res["useful_bytes"],
        bw_utilization=effective_bw_utilization(res["useful_bytes"], runtime, cfg.channels,
                                                cfg.timing),
        latency_ns=lat, latency_counts=counts, packets=pk, compression_ratio=ratio,
        power=power, max_queue_mc_ns=res["max_queue_mc_ps"] / 1e3, extra=extra)


def commands(report: RunReport) -> list[Command]:
    """The DRAM command trace of a run made with ``record_cmds=True``, in time order."""
    log = report.extra["raw"].get("cmd_log")
    if log is None:
        raise ValueError("run was made without record_cmds=True")
    out = []
    for ch, cols in enumerate(log):
        t, rank, sr, bank, row, col, cmd = cols
        out.extend(Command(t[i], ch, rank[i], sr[i], bank[i], row[i], col[i], Cmd(cmd[i]))
                   for i in range(len(t)))
    out.sort(key=lambda c: (c.time_ps, c.ch))
    return out


# --------------------------------------------------------------------------- studies

def compare_modes(cfg: SimConfig, modes: Sequence[str] = MODES,
                  traces: Sequence[Trace] | None = None, **kw) -> list[RunReport]:
    """The same traces under several systems, normalized to DDR when it is present."""
    raw = build_traces(cfg) if traces is None else list(traces)
    reps = [run(cfg.replace(mode=m, compression=cfg.compression if m == "MI_MUL" else "none",
                            merge=cfg.merge and m in ("MI_1", "MI_MUL")), raw, **kw)
            for m in modes]
    if any(r.mode == "DDR" for r in reps):
        normalize(reps)
    return reps


class SweepError(RuntimeError):
    pass


def sweep_sched_latency(cfg: SimConfig, latencies: Sequence[int] = range(0, 201, 20),
                        traces: Sequence[Trace] | None = None, check: bool = True,
                        **kw) -> list[RunReport]:
    """One run per scheduler latency (CPU cycles), speedups against a DDR run of the
    same traces. With ``check`` a speedup that rises with latency raises
    :class:`SweepError`."""
    if not cfg.mims:
        raise SweepError("the latency sweep needs mode MI_1 or MI_MUL")
    raw = build_traces(cfg) if traces is None else list(traces)
    base = run(cfg.replace(mode="DDR", compression="none", merge=False), raw, **kw)
    reps = [run(cfg.replace(sched_latency=int(s)), raw, **kw) for s in latencies]
    for r in reps:
        normalize([r], base)
    committed = {r.committed for r in reps}
    if len(committed) > 1:
        raise SweepError(f"sweep points committed different instruction counts: {committed}")
    if check:
        for a, b in zip(reps, reps[1:]):
            if b.speedup > a.speedup:
                raise SweepError(f"speedup rose from {a.speedup:.6f} at {a.sched_latency} "
                                 f"to {b.speedup:.6f} at {b.sched_latency} cycles")
    return reps
