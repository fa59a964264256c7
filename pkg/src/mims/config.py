"""Simulator configuration and its INI representation.

Defaults follow the evaluated system: 16 cores at ~2.7 GHz, two channels with one
buffer scheduler each, two ranks of eight x8 devices, DDR3-1333 timing.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from pathlib import Path

from .dram import TimingParams
from .power import PowerParams

MODES = ("DDR", "BOB", "MI_1", "MI_MUL")
COMPRESSION = ("none", "single", "multi_inline", "multi_offline")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CoreConfig:
    clock_ps: int = 370
    rob_size: int = 256
    fetch_per_cycle: int = 4
    retire_per_cycle: int = 2
    nonmem_latency: int = 5
    l1_latency: int = 9
    l2_latency: int = 15
    l3_latency: int = 45

    def validate(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) <= 0:
                raise ConfigError(f"core.{f.name} must be positive")


@dataclass(frozen=True)
class SimConfig:
    mode: str = "MI_MUL"
    cores: int = 16
    channels: int = 2
    ranks: int = 2
    subranks: int = 8
    banks: int = 8
    read_queue: int = 64
    write_queue: int = 64
    high_mark: int = 48
    low_mark: int = 16
    link_bits: int = 16
    sched_latency: int = 40
    max_payload: int = 504
    sched_queue: int = 24
    age_cap_ns: int = 2000
    decode_batch: int = 4
    reqid_bits: int = 10
    compression: str = "none"
    n_base: int = 8
    diff_bits: int = 8
    merge: bool = False
    merge_window: int = 256
    merge_read_cap: int = 4096
    merge_write_cap: int = 512
    refresh: bool = True
    workload: str = "gups"
    records: int = 1_000_000
    trace_file: str = ""
    seed: int = 1
    core: CoreConfig = field(default_factory=CoreConfig)
    timing: TimingParams = field(default_factory=TimingParams)
    power: PowerParams = field(default_factory=PowerParams)

    # ------------------------------------------------------------------ checks

    @property
    def mims(self) -> bool:
        return self.mode in ("MI_1", "MI_MUL")

    def validate(self) -> "SimConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.compression not in COMPRESSION:
            raise ConfigError(f"compression must be one of {', '.join(COMPRESSION)}")
        if self.compression != "none" and self.mode != "MI_MUL":
            raise ConfigError("address compression needs multi-request packets (mode MI_MUL)")
        if self.merge and not self.mims:
            raise ConfigError("trunk merging needs a message interface (mode MI_1 or MI_MUL)")
        for name in ("channels", "ranks", "banks"):
            v = getattr(self, name)
            if v not in (1, 2, 4, 8) or (name != "banks" and v > 2):
                raise ConfigError(f"{name}={v} is not supported by the address map")
        if self.subranks not in (1, 8):
            raise ConfigError("subranks must be 1 or 8")
        if self.mims and self.subranks != 8:
            raise ConfigError("message-interface modes need 8 subranks")
        if self.cores < 1 or self.cores > 256:
            raise ConfigError("cores must be in 1..256")
        if not 0 < self.low_mark < self.high_mark <= self.write_queue:
            raise ConfigError("water marks must satisfy 0 < low < high <= write_queue")
        if self.read_queue < 1 or self.write_queue < 1:
            raise ConfigError("queue sizes must be positive")
        if self.sched_latency < 0:
            raise ConfigError("sched_latency must be nonnegative")
        if self.max_payload < 12 or self.max_payload > 0xFFFF - 16:
            raise ConfigError("max_payload out of range")
        if self.sched_queue < 1 or self.decode_batch < 1 or self.link_bits < 1:
            raise ConfigError("sched_queue, decode_batch and link_bits must be positive")
        if not 1 <= self.reqid_bits <= 16:
            raise ConfigError("reqid_bits must be in 1..16")
        if self.diff_bits not in (8, 16, 24, 32):
            raise ConfigError("diff_bits must be 8, 16, 24 or 32")
        if not 1 <= self.n_base <= 8:
            raise ConfigError("n_base must be in 1..8")
        if self.records < 1:
            raise ConfigError("records must be positive")
        self.core.validate()
        return self

    def replace(self, **kw) -> "SimConfig":
        return dataclasses.replace(self, **kw)

    # ------------------------------------------------------------------ INI

    _SECTIONS = {"core": CoreConfig, "timing": TimingParams, "power": PowerParams}

    def to_ini(self) -> str:
        cp = _parser()
        cp["sim"] = {f.name: _fmt(getattr(self, f.name)) for f in dataclasses.fields(self)
                     if f.name not in self._SECTIONS}
        for sec in self._SECTIONS:
            obj = getattr(self, sec)
            cp[sec] = {f.name: _fmt(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "SimConfig":
        cp = _parser()
        cp.read_string(text)
        unknown = set(cp.sections()) - {"sim", *cls._SECTIONS}
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
        kw = {}
        if cp.has_section("sim"):
            kw.update(_parse_section(cls, cp["sim"], skip=cls._SECTIONS))
        for sec, typ in cls._SECTIONS.items():
            if cp.has_section(sec):
                kw[sec] = typ(**_parse_section(typ, cp[sec]))
        return cls(**kw).validate()

    @classmethod
    def load(cls, path) -> "SimConfig":
        return cls.from_ini(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_ini())

    def with_overrides(self, pairs) -> "SimConfig":
        """Apply ``key=value`` strings; dotted keys reach into core/timing/power."""
        cur = self
        for item in pairs:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            key, val = item.split("=", 1)
            key = key.strip()
            if "." in key:
                sec, name = key.split(".", 1)
                if sec not in self._SECTIONS:
                    raise ConfigError(f"unknown section {sec!r}")
                sub = getattr(cur, sec)
                conv = _converter(type(sub), name)
                cur = dataclasses.replace(cur, **{sec: dataclasses.replace(sub, **{name: conv(val)})})
            else:
                conv = _converter(SimConfig, key)
                cur = dataclasses.replace(cur, **{key: conv(val)})
        return cur.validate()


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # timing keys are case-sensitive (tRCD, tCK_ps)
    return cp


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _converter(typ, name):
    fields = {f.name: f for f in dataclasses.fields(typ)}
    if name not in fields:
        raise ConfigError(f"unknown key {name!r} for {typ.__name__}")
    default = fields[name].default
    if default is dataclasses.MISSING:
        default = fields[name].default_factory()
    if isinstance(default, bool):
        return _bool
    if isinstance(default, int):
        return lambda s: int(s, 0)
    if isinstance(default, float):
        return float
    if isinstance(default, str):
        return str
    raise ConfigError(f"{name} cannot be set from a string")


def _parse_section(typ, sec, skip=()):
    out = {}
    for k, v in sec.items():
        if k in skip:
            continue
        out[k] = _converter(typ, k)(v)
    return out
