"""Command-line driver.

Reports go to stdout; when ``MIMS_OUT_DIR`` is set (or ``--out-dir`` is given)
a copy is also written there.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from . import __version__
from .codec import (CodecError, PacketHead, PacketType, Rtmsg, dump_packet, encode_read,
                    encode_return, encode_write)
from .compress import CompressorContext, compression_ratio, parse_scheme, SCHEME_NAMES
from .config import MODES, ConfigError, SimConfig
from .dram import read_command_trace, validate_command_trace, write_command_trace
from .engine import SimulationError
from .experiments import (SweepError, TraceError, build_traces, commands, compare_modes, run,
                          sweep_sched_latency)
from .stats import emit_report
from .trace import (TraceFormatError, concat, gen_synthetic, get_profile, load_trace,
                    merge_trunks, save_trace, PROFILES)

OUT_ENV = "MIMS_OUT_DIR"
_SKIP = {"core", "timing", "power"}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="INI file with [sim]/[core]/[timing]/[power]")
    for f in dataclasses.fields(SimConfig):
        if f.name in _SKIP:
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.type in ("bool", bool):
            p.add_argument(flag, dest=f.name, default=None, action=argparse.BooleanOptionalAction)
        else:
            p.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any key, dotted for sections (e.g. timing.tRFC=110)")
    p.add_argument("--format", choices=("text", "csv", "jsonl"), default="text")
    p.add_argument("--out-dir", default=None, help=f"also write the report here (default ${OUT_ENV})")


def _config(ns) -> SimConfig:
    cfg = SimConfig.load(ns.config) if ns.config else SimConfig()
    pairs = []
    for f in dataclasses.fields(SimConfig):
        if f.name in _SKIP:
            continue
        v = getattr(ns, f.name, None)
        if v is None:
            continue
        if isinstance(v, bool):
            v = "true" if v else "false"
        pairs.append(f"{f.name}={v}")
    return cfg.with_overrides(pairs + list(ns.set)).validate()


def _emit(ns, reports, stem: str) -> None:
    data = emit_report(reports, ns.format)
    sys.stdout.write(data.decode())
    out = ns.out_dir or os.environ.get(OUT_ENV)
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        ext = {"text": "txt", "csv": "csv", "jsonl": "jsonl"}[ns.format]
        (d / f"{stem}.{ext}").write_bytes(data)


# --------------------------------------------------------------------------- commands

def cmd_run(ns) -> int:
    cfg = _config(ns)
    rep = run(cfg, record_cmds=bool(ns.cmd_trace), wire=ns.wire)
    if ns.cmd_trace:
        write_command_trace(commands(rep), ns.cmd_trace, cfg.mims)
    _emit(ns, [rep], f"run_{cfg.workload}_{cfg.mode}")
    return 0


def cmd_sweep(ns) -> int:
    cfg = _config(ns)
    lat = range(ns.start, ns.stop + 1, ns.step)
    reps = sweep_sched_latency(cfg, lat, check=not ns.no_check)
    _emit(ns, reps, f"sweep_{cfg.workload}_{cfg.mode}")
    return 0


def cmd_compare(ns) -> int:
    cfg = _config(ns)
    modes = [m.strip() for m in ns.modes.split(",") if m.strip()]
    bad = [m for m in modes if m not in MODES]
    if bad or "DDR" not in modes:
        raise ConfigError("--modes must name known modes and include DDR")
    _emit(ns, compare_modes(cfg, modes), f"compare_{cfg.workload}")
    return 0


def cmd_gen_trace(ns) -> int:
    cfg = SimConfig(workload=ns.workload, records=ns.records, cores=ns.cores, seed=ns.seed)
    save_trace(concat(build_traces(cfg)), ns.output)
    return 0


def cmd_merge_trace(ns) -> int:
    tr = load_trace(ns.input)
    parts = [merge_trunks(t, ns.window, ns.read_cap, ns.write_cap)
             for _, t in sorted(tr.split_by_tid().items())]
    out = concat(parts) if parts else tr
    save_trace(out, ns.output)
    before, after = len(tr), len(out)
    print(f"{before} records -> {after} records, {tr.mem_bytes} bytes preserved")
    return 0


def cmd_compress_bench(ns) -> int:
    if ns.trace:
        tr = load_trace(ns.trace)
    else:
        prof = get_profile(ns.workload)
        tr = gen_synthetic(prof, ns.records, ns.seed)
    reads = [int(a) for a, w in zip(tr.addr, tr.is_write) if not w]
    if ns.sort:
        reads.sort()
    k = ns.packet_size
    packets = [reads[i:i + k] for i in range(0, len(reads), k)]
    print(f"{len(reads)} read addresses in {len(packets)} packets of up to {k} "
          f"(n_base={ns.n_base}, diff_bits={ns.diff_bits})")
    for name in SCHEME_NAMES:
        r = compression_ratio(packets, parse_scheme(name), ns.n_base, ns.diff_bits)
        print(f"{name:14s} {r:.4f}")
    return 0


def _example_packet(kind: str, scheme_name: str | None) -> tuple[bytes, CompressorContext | None]:
    addrs = [0x1000, 0x1040, 0x1080, 0x2000]
    if kind == "read":
        msgs = [Rtmsg(a, 1, 0, 0, i) for i, a in enumerate(addrs)]
        scheme = parse_scheme(scheme_name)
        ctx = CompressorContext() if scheme is not None else None
        data = encode_read(PacketHead(0, PacketType.READ, len(msgs)), msgs, scheme, ctx)
        return data, (CompressorContext() if scheme is not None else None)
    if kind == "write":
        ents = [(Rtmsg(a, 1, 0, 0, 0), bytes(8)) for a in addrs]
        return encode_write(PacketHead(0, PacketType.WRITE, len(ents)), ents), None
    return encode_return([(i, 1, bytes(8)) for i in range(len(addrs))], 0), None


def cmd_pkt_dump(ns) -> int:
    if ns.file:
        raw = Path(ns.file).read_bytes()
        if ns.hex:
            raw = bytes.fromhex(raw.decode().replace("\n", " ").replace(" ", ""))
        ctx = CompressorContext(ns.n_base, ns.diff_bits)
    else:
        raw, ctx = _example_packet(ns.example, ns.scheme)
    print(dump_packet(raw, ctx))
    return 0


def cmd_validate(ns) -> int:
    cmds, mimsmap = read_command_trace(ns.file)
    v = validate_command_trace(cmds, mimsmap=mimsmap)
    if v is None:
        print(f"ok: {len(cmds)} commands, no timing violations")
        return 0
    print(f"violation: {v}")
    return 1


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mims", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    _add_config_flags(p)
    p.add_argument("--cmd-trace", metavar="FILE", help="dump the DRAM command trace")
    p.add_argument("--wire", action="store_true", help="encode and decode every packet")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep the buffer-scheduler latency")
    _add_config_flags(p)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--stop", type=int, default=200)
    p.add_argument("--step", type=int, default=20)
    p.add_argument("--no-check", action="store_true", help="do not fail on a non-monotone sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="run several modes on the same traces")
    _add_config_flags(p)
    p.add_argument("--modes", default=",".join(MODES))
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen-trace", help="write a synthetic multi-core trace")
    p.add_argument("--workload", default="gups", choices=sorted(PROFILES))
    p.add_argument("--records", type=int, default=100_000, help="records per core")
    p.add_argument("--cores", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("-o", "--output", required=True, help="trace file (.gz to compress)")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("merge-trace", help="fuse contiguous accesses into trunk requests")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--window", type=int, default=256)
    p.add_argument("--read-cap", type=int, default=4096)
    p.add_argument("--write-cap", type=int, default=512)
    p.set_defaults(func=cmd_merge_trace)

    p = sub.add_parser("compress-bench", help="address compression ratios of the three schemes")
    p.add_argument("--trace", help="trace file (default: synthetic)")
    p.add_argument("--workload", default="stream", choices=sorted(PROFILES))
    p.add_argument("--records", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--packet-size", type=int, default=8, help="addresses per packet")
    p.add_argument("--n-base", type=int, default=8)
    p.add_argument("--diff-bits", type=int, default=8)
    p.add_argument("--sort", action="store_true", help="sort addresses first")
    p.set_defaults(func=cmd_compress_bench)

    p = sub.add_parser("pkt-dump", help="decode and print a packet")
    p.add_argument("file", nargs="?", help="packet bytes (binary, or hex with --hex)")
    p.add_argument("--hex", action="store_true")
    p.add_argument("--example", choices=("read", "write", "return"), default="read")
    p.add_argument("--scheme", choices=("none",) + tuple(SCHEME_NAMES), default="none")
    p.add_argument("--n-base", type=int, default=8)
    p.add_argument("--diff-bits", type=int, default=8)
    p.set_defaults(func=cmd_pkt_dump)

    p = sub.add_parser("validate-cmdtrace", help="check a DRAM command trace against timing")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except (ConfigError, TraceError, TraceFormatError, CodecError, SweepError) as e:
        print(f"mims: error: {e}", file=sys.stderr)
        return 2
    except SimulationError as e:
        print(f"mims: simulation failed: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
