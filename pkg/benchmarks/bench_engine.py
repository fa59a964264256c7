#!/usr/bin/env python3
"""Compiled kernel vs. the same source interpreted.

Runs one configuration per mode through both builds, checks the results agree
bit for bit and prints wall time and the speed ratio.

    python3 benchmarks/bench_engine.py --cores 4 --records 3000
"""

import argparse
import sys
import time

from mims import SimConfig
from mims.config import MODES
from mims.engine import load_compiled, load_pure
from mims.experiments import build_traces, run


def timed(cfg, traces, kernel, repeat):
    best, rep = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        rep = run(cfg, traces, kernel=kernel)
        best = min(best, time.perf_counter() - t0)
    return best, rep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cores", type=int, default=4)
    ap.add_argument("--records", type=int, default=3000)
    ap.add_argument("--workload", default="gups")
    ap.add_argument("--modes", default=",".join(MODES))
    ap.add_argument("--repeat", type=int, default=1)
    a = ap.parse_args(argv)

    compiled = load_compiled()
    if compiled is None:
        print("compiled kernel not built; run `python3 setup.py build_ext --inplace`")
        return 1
    pure = load_pure()
    cfg = SimConfig(cores=a.cores, records=a.records, workload=a.workload)
    traces = build_traces(cfg)
    print(f"{a.workload}: {a.cores} cores x {a.records} records")
    print(f"{'mode':8s} {'compiled s':>11s} {'python s':>10s} {'ratio':>7s}  agree")
    ok = True
    for m in a.modes.split(","):
        c = cfg.replace(mode=m)
        tc, rc = timed(c, traces, compiled, a.repeat)
        tp, rp = timed(c, traces, pure, a.repeat)
        same = rc.extra["raw"] == rp.extra["raw"]
        ok &= same
        print(f"{m:8s} {tc:11.3f} {tp:10.3f} {tp / tc:7.1f}x  {'yes' if same else 'NO'}")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
