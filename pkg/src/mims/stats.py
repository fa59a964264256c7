"""Run reports: speedup, bandwidth utilization, latency breakdown, packet
composition, compression ratio and power, with text/CSV/JSON-lines output."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .dram import TimingParams, peak_channel_bytes_per_ps
from .power import PowerBreakdown

SEGMENTS = ("queuing_mc", "serialization", "sched_fixed", "queuing_sched", "dram_core", "return")
CLASSES = ("read", "write")
PACKET_KINDS = ("read", "write", "return")
SHARES = ("overhead", "address", "message", "data")


@dataclass
class RunReport:
    mode: str
    workload: str
    sched_latency: int
    compression: str
    merge: bool
    cores: int
    cycles: int
    committed: int
    runtime_ps: int
    requests: int
    reads: int
    writes: int
    useful_bytes: int
    bw_utilization: float
    latency_ns: dict            # class -> segment -> mean ns
    latency_counts: dict        # class -> count
    packets: dict               # kind -> {"packets", "requests", "overhead", ...}
    compression_ratio: float | None
    power: PowerBreakdown
    max_queue_mc_ns: float = 0.0
    speedup: float = 1.0
    norm_edp: float = 1.0
    norm_bw: float = 1.0
    extra: dict = field(default_factory=dict)

    # ------------------------------------------------------------------ derived

    def requests_per_packet(self, kind: str) -> float:
        p = self.packets.get(kind)
        if not p or not p["packets"]:
            return 0.0
        return p["requests"] / p["packets"]

    def composition(self, kind: str | None = None) -> dict[str, float]:
        """Byte shares of overhead/address/message/data over one or all packet kinds."""
        kinds = PACKET_KINDS if kind is None else (kind,)
        tot = {s: 0 for s in SHARES}
        for k in kinds:
            p = self.packets.get(k)
            if p:
                for s in SHARES:
                    tot[s] += p[s]
        n = sum(tot.values())
        return {s: (tot[s] / n if n else 0.0) for s in SHARES}

    def mean_latency_ns(self, cls: str = "read") -> float:
        return sum(self.latency_ns[cls].values())

    def row(self) -> dict:
        """Flat record with a fixed key order (the CSV schema)."""
        w = self.power.avg_watts()
        r = {
            "workload": self.workload, "mode": self.mode, "sched_latency": self.sched_latency,
            "compression": self.compression, "merge": int(self.merge), "cores": self.cores,
            "cycles": self.cycles, "committed": self.committed, "runtime_ns": _r(self.runtime_ps / 1e3),
            "requests": self.requests, "reads": self.reads, "writes": self.writes,
            "useful_bytes": self.useful_bytes, "speedup": _r(self.speedup),
            "bw_utilization": _r(self.bw_utilization), "norm_bw": _r(self.norm_bw),
        }
        for c in CLASSES:
            for s in SEGMENTS:
                r[f"{c}_{s}_ns"] = _r(self.latency_ns[c][s])
        for k in PACKET_KINDS:
            r[f"{k}_packets"] = self.packets[k]["packets"]
            r[f"{k}_req_per_packet"] = _r(self.requests_per_packet(k))
        comp = self.composition()
        for s in SHARES:
            r[f"share_{s}"] = _r(comp[s])
        r["compression_ratio"] = "" if self.compression_ratio is None else _r(self.compression_ratio)
        for k in PowerBreakdown.COMPONENTS:
            r[f"energy_{k}_j"] = _r(getattr(self.power, k))
        r["energy_total_j"] = _r(self.power.total)
        r["power_total_w"] = _r(w["total"])
        r["edp_js"] = _r(self.power.edp)
        r["norm_edp"] = _r(self.norm_edp)
        return r


def _r(x: float) -> float:
    return float(f"{x:.6g}")


CSV_FIELDS = tuple(RunReport(
    "DDR", "", 0, "none", False, 1, 1, 0, 1, 0, 0, 0, 0, 0.0,
    {c: {s: 0.0 for s in SEGMENTS} for c in CLASSES}, {c: 0 for c in CLASSES},
    {k: {"packets": 0, "requests": 0, **{s: 0 for s in SHARES}} for k in PACKET_KINDS},
    None, PowerBreakdown(0, 0, 0, 0, 0, 0)).row().keys())


# --------------------------------------------------------------------------- metrics

def effective_bw_utilization(useful_bytes: int, runtime_ps: int, channels: int,
                             timing: TimingParams = TimingParams()) -> float:
    """Useful bytes over what the DRAM data buses could have moved in the run."""
    if runtime_ps <= 0 or useful_bytes <= 0:
        return 0.0
    return useful_bytes / (peak_channel_bytes_per_ps(timing) * runtime_ps * channels)


def latency_breakdown(seg_sum, seg_count) -> tuple[dict, dict]:
    out, counts = {}, {}
    for i, c in enumerate(CLASSES):
        n = seg_count[i]
        counts[c] = n
        out[c] = {s: (seg_sum[i][j] / n / 1e3 if n else 0.0) for j, s in enumerate(SEGMENTS)}
    return out, counts


def packet_stats(pk) -> dict:
    out = {}
    for k, vals in zip(PACKET_KINDS, pk):
        out[k] = dict(zip(("packets", "requests", *SHARES), (int(v) for v in vals)))
    return out


def normalize(reports: list[RunReport], baseline: RunReport | None = None) -> list[RunReport]:
    """Fill speedup / normalized bandwidth / normalized EDP against the baseline
    (the DDR report by default)."""
    if baseline is None:
        base = [r for r in reports if r.mode == "DDR"]
        if not base:
            raise ValueError("normalization needs a DDR baseline")
        baseline = base[0]
    for r in reports:
        r.speedup = baseline.cycles / r.cycles
        r.norm_bw = r.bw_utilization / baseline.bw_utilization if baseline.bw_utilization else 0.0
        r.norm_edp = r.power.normalized_edp(baseline.power)
    return reports


# --------------------------------------------------------------------------- output

def emit_report(reports, fmt: str = "text") -> bytes:
    if isinstance(reports, RunReport):
        reports = [reports]
    rows = [r.row() for r in reports]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue().encode()
    if fmt in ("json", "jsonl", "json-lines"):
        return "".join(json.dumps(r, sort_keys=False) + "\n" for r in rows).encode()
    if fmt == "text":
        return "\n".join(_text(r) for r in reports).encode()
    raise ValueError(f"unknown report format {fmt!r}")


def _text(r: RunReport) -> str:
    w = r.power.avg_watts()
    lines = [
        f"== {r.workload} / {r.mode} (sched_latency={r.sched_latency}, compression={r.compression}, "
        f"merge={'on' if r.merge else 'off'})",
        f"cycles            {r.cycles}",
        f"committed         {r.committed}",
        f"runtime           {r.runtime_ps / 1e3:.3f} ns",
        f"requests          {r.requests} ({r.reads} R / {r.writes} W)",
        f"speedup vs DDR    {r.speedup:.4f}",
        f"bw utilization    {r.bw_utilization:.4f}",
    ]
    for c in CLASSES:
        seg = "  ".join(f"{s}={r.latency_ns[c][s]:.2f}" for s in SEGMENTS)
        lines.append(f"{c:5s} latency ns  {seg}")
    for k in PACKET_KINDS:
        p = r.packets[k]
        if p["packets"]:
            lines.append(f"{k:6s} packets    {p['packets']}  req/packet={r.requests_per_packet(k):.2f}")
    comp = r.composition()
    lines.append("packet bytes      " + "  ".join(f"{s}={comp[s]:.4f}" for s in SHARES))
    if r.compression_ratio is not None:
        lines.append(f"compression ratio {r.compression_ratio:.4f}")
    lines.append("energy J          " + "  ".join(
        f"{k}={getattr(r.power, k):.6g}" for k in PowerBreakdown.COMPONENTS)
        + f"  total={r.power.total:.6g}")
    lines.append(f"avg power W       {w['total']:.4f}")
    lines.append(f"EDP J*s           {r.power.edp:.6g}  (normalized {r.norm_edp:.4f})")
    return "\n".join(lines) + "\n"
