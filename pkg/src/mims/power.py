"""Memory-system energy: DRAM background, refresh, activate/precharge and burst
energy, plus controller power, and the energy-delay product."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping

from .dram import TimingParams

PS = 1e-12


@dataclass(frozen=True)
class PowerParams:
    """Per-device figures for a 2 Gb x8 DDR3-1333 part plus controller peaks."""

    e_act_pre_nj: float = 15.0
    p_burst_mw: float = 250.0
    p_background_mw: float = 85.0
    e_refresh_nj: float = 420.0
    vdd: float = 1.5
    devices_per_rank: int = 8
    mc_power_w: float = 8.5
    bufsched_power_w: float = 14.0
    idle_fraction: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be nonnegative")
        if not 0 <= self.idle_fraction <= 1:
            raise ValueError("idle_fraction must be within [0, 1]")


@dataclass(frozen=True)
class PowerBreakdown:
    background: float
    refresh: float
    act_pre: float
    burst: float
    controller: float
    runtime_s: float

    COMPONENTS = ("background", "refresh", "act_pre", "burst", "controller")

    @property
    def total(self) -> float:
        return self.background + self.refresh + self.act_pre + self.burst + self.controller

    @property
    def edp(self) -> float:
        return self.total * self.runtime_s

    def avg_watts(self) -> dict[str, float]:
        if self.runtime_s <= 0:
            return {k: 0.0 for k in (*self.COMPONENTS, "total")}
        out = {k: getattr(self, k) / self.runtime_s for k in self.COMPONENTS}
        out["total"] = self.total / self.runtime_s
        return out

    def normalized_edp(self, baseline: "PowerBreakdown") -> float:
        return self.edp / baseline.edp if baseline.edp else float("nan")


def devices_per_access(mode: str, p: PowerParams = PowerParams()) -> int:
    """Devices that take part in one ACT or one burst: a whole rank for line-based
    systems, a single x8 device for a sub-ranked access."""
    return 1 if mode in ("MI_1", "MI_MUL") else p.devices_per_rank


def command_energy(cmd: str, mode: str, p: PowerParams = PowerParams(),
                   timing: TimingParams = TimingParams()) -> dict[str, float]:
    """Energy (J) that one DRAM command adds, split by component."""
    dev = devices_per_access(mode, p)
    cmd = cmd.upper()
    out = {k: 0.0 for k in PowerBreakdown.COMPONENTS}
    if cmd == "ACT":
        out["act_pre"] = p.e_act_pre_nj * 1e-9 * dev
    elif cmd in ("RD", "RDA", "WR", "WRA"):
        out["burst"] = p.p_burst_mw * 1e-3 * timing.tBURST * timing.tCK_ps * PS * dev
    elif cmd == "REF":
        out["refresh"] = p.e_refresh_nj * 1e-9
    elif cmd != "PRE":  # precharge energy is folded into the ACT/PRE pair
        raise ValueError(f"unknown DRAM command {cmd!r}")
    return out


def controller_energy(peak_w: float, busy_ps: float, runtime_ps: float, idle_fraction: float) -> float:
    busy = min(max(busy_ps, 0.0), runtime_ps)
    idle = runtime_ps - busy
    return peak_w * (busy + idle_fraction * idle) * PS


def account(mode: str, counts: Mapping, runtime_ps: int, channels: int, ranks: int,
            p: PowerParams = PowerParams(), timing: TimingParams = TimingParams()) -> PowerBreakdown:
    """Energy of a finished run from its command counts and busy times.

    ``counts`` carries per-channel lists ``n_act``, ``n_rd``, ``n_wr``, ``n_ref``,
    ``mc_busy_ps`` and ``bs_busy_ps``.
    """
    if runtime_ps <= 0:
        return PowerBreakdown(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    dev = devices_per_access(mode, p)
    n_act = sum(counts["n_act"])
    n_cas = sum(counts["n_rd"]) + sum(counts["n_wr"])
    n_ref = sum(counts["n_ref"])
    t = runtime_ps * PS
    n_devices = channels * ranks * p.devices_per_rank
    background = p.p_background_mw * 1e-3 * n_devices * t
    refresh = p.e_refresh_nj * 1e-9 * n_ref
    act_pre = p.e_act_pre_nj * 1e-9 * dev * n_act
    burst = p.p_burst_mw * 1e-3 * timing.tBURST * timing.tCK_ps * PS * dev * n_cas
    if mode == "DDR":
        # one on-chip controller serving every channel; busy if any channel is
        busy = max(counts["mc_busy_ps"]) if counts["mc_busy_ps"] else 0
        ctrl = controller_energy(p.mc_power_w, busy, runtime_ps, p.idle_fraction)
    else:
        ctrl = sum(controller_energy(p.bufsched_power_w, b, runtime_ps, p.idle_fraction)
                   for b in counts["bs_busy_ps"])
    return PowerBreakdown(background, refresh, act_pre, burst, ctrl, t)
