# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Simulation kernel.

This file is valid Python and valid Cython. ``setup.py`` compiles it to an extension
module; when the extension is missing the same source runs under the interpreter.
Everything here works on flat integer arrays so the compiled build never touches
Python objects in the hot paths.

Time is integer picoseconds. Cores tick on the CPU clock grid, the DRAM schedulers
on the command-clock grid. At any instant the phases run in a fixed order:

1. completions, credit returns, packet arrivals and return-buffer fills
2. DRAM scheduler ticks
3. core ticks
4. link dispatch (requests downstream, returns upstream)
"""

import cython
from array import array

INF = cython.declare(cython.longlong, 1 << 62)
FAR_PAST = cython.declare(cython.longlong, -(1 << 40))

DDR = cython.declare(cython.int, 0)
BOB = cython.declare(cython.int, 1)
MI_1 = cython.declare(cython.int, 2)
MI_MUL = cython.declare(cython.int, 3)

HIT_MEM = cython.declare(cython.int, 3)

C_ACT = cython.declare(cython.int, 0)
C_RD = cython.declare(cython.int, 1)
C_RDA = cython.declare(cython.int, 2)
C_WR = cython.declare(cython.int, 3)
C_WRA = cython.declare(cython.int, 4)
C_PRE = cython.declare(cython.int, 5)
C_REF = cython.declare(cython.int, 6)

# packet byte classes
OVH = cython.declare(cython.int, 16)       # LKOH + head
ADDR_B = cython.declare(cython.int, 6)
MSG_B = cython.declare(cython.int, 6)      # non-address part of a request message
RET_MSG_B = cython.declare(cython.int, 4)  # reqid + gran
BOB_LINE = cython.declare(cython.int, 64)

N_SEG = cython.declare(cython.int, 6)


def _arr(n, v=0):
    return array("q", [v]) * max(int(n), 1)


@cython.cfunc
@cython.inline
def _ceil_to(x: cython.longlong, g: cython.longlong) -> cython.longlong:
    return ((x + g - 1) // g) * g


@cython.cfunc
@cython.inline
def _max(a: cython.longlong, b: cython.longlong) -> cython.longlong:
    return a if a > b else b


@cython.cfunc
@cython.inline
def _min(a: cython.longlong, b: cython.longlong) -> cython.longlong:
    return a if a < b else b


class SimulationError(RuntimeError):
    """An internal invariant failed; the run cannot continue."""


@cython.cclass
class IntHeap:
    """Binary min-heap of (key, value) pairs ordered lexicographically."""

    k: cython.longlong[:]
    v: cython.longlong[:]
    n: cython.Py_ssize_t
    cap: cython.Py_ssize_t

    def __init__(self, cap=64):
        self.cap = cap
        self.k = _arr(cap)
        self.v = _arr(cap)
        self.n = 0

    def __len__(self):
        return self.n

    @cython.ccall
    def top(self) -> cython.longlong:
        if self.n == 0:
            return INF
        return self.k[0]

    @cython.cfunc
    def _grow(self):
        nk = _arr(self.cap * 2)
        nv = _arr(self.cap * 2)
        i: cython.Py_ssize_t
        for i in range(self.n):
            nk[i] = self.k[i]
            nv[i] = self.v[i]
        self.k = nk
        self.v = nv
        self.cap *= 2

    @cython.ccall
    def push(self, key: cython.longlong, val: cython.longlong):
        if self.n == self.cap:
            self._grow()
        i: cython.Py_ssize_t = self.n
        p: cython.Py_ssize_t
        self.n += 1
        while i > 0:
            p = (i - 1) >> 1
            if self.k[p] < key or (self.k[p] == key and self.v[p] <= val):
                break
            self.k[i] = self.k[p]
            self.v[i] = self.v[p]
            i = p
        self.k[i] = key
        self.v[i] = val

    @cython.ccall
    def pop(self) -> cython.longlong:
        """Remove the minimum and return its value."""
        out: cython.longlong = self.v[0]
        self.n -= 1
        n: cython.Py_ssize_t = self.n
        if n == 0:
            return out
        key: cython.longlong = self.k[n]
        val: cython.longlong = self.v[n]
        i: cython.Py_ssize_t = 0
        c: cython.Py_ssize_t
        while True:
            c = 2 * i + 1
            if c >= n:
                break
            if c + 1 < n and (self.k[c + 1] < self.k[c]
                              or (self.k[c + 1] == self.k[c] and self.v[c + 1] < self.v[c])):
                c += 1
            if key < self.k[c] or (key == self.k[c] and val <= self.v[c]):
                break
            self.k[i] = self.k[c]
            self.v[i] = self.v[c]
            i = c
        self.k[i] = key
        self.v[i] = val
        return out


@cython.cclass
class Core:
    cid: cython.int
    rob: cython.longlong[:]
    rob_size: cython.int
    head: cython.int
    count: cython.int
    idx: cython.longlong
    end: cython.longlong
    rem: cython.longlong
    wake: cython.longlong
    last_tick: cython.longlong
    wait_q: cython.int
    granted: cython.int
    done: cython.int
    committed: cython.longlong
    last_commit: cython.longlong
    stall_cycles: cython.longlong

    def __init__(self, cid, rob_size, start, end):
        self.cid = cid
        self.rob_size = rob_size
        self.rob = _arr(rob_size)
        self.head = 0
        self.count = 0
        self.idx = start
        self.end = end
        self.rem = -1
        self.wake = 0
        self.last_tick = FAR_PAST
        self.wait_q = -1
        self.granted = 0
        self.done = 0
        self.committed = 0
        self.last_commit = 0
        self.stall_cycles = 0

    @cython.ccall
    def notify(self, slot: cython.int, now: cython.longlong, tick_ps: cython.longlong):
        if slot < 0 or slot >= self.rob_size:
            raise SimulationError(f"core {self.cid}: completion for unknown ROB slot {slot}")
        if self.rob[slot] != INF:
            raise SimulationError(
                f"core {self.cid}: duplicate or unexpected completion for ROB slot {slot} at {now} ps")
        self.rob[slot] = now
        w: cython.longlong = _max(_ceil_to(now, tick_ps), self.last_tick + tick_ps)
        if w < self.wake:
            self.wake = w


@cython.cclass
class Channel:
    idx: cython.int
    # on-chip queues (request ids in arrival order)
    rq: cython.longlong[:]
    wq: cython.longlong[:]
    rs: cython.longlong[:]         # the same ids sorted by address (MI_MUL only)
    ws: cython.longlong[:]
    nr: cython.int
    nw: cython.int
    res: cython.longlong[:]        # reserved slots per direction
    drain: cython.int
    wait: cython.longlong[:]       # waiter rings, direction-major
    wait_h: cython.longlong[:]
    wait_n: cython.longlong[:]
    # links
    down_busy: cython.longlong
    up_busy: cython.longlong
    credits: cython.longlong
    cr_t: cython.longlong[:]
    cr_h: cython.int
    cr_n: cython.int
    # packets on their way into the scheduler queue
    in_t: cython.longlong[:]
    in_s: cython.longlong[:]
    in_c: cython.longlong[:]
    in_h: cython.int
    in_n: cython.int
    in_reqs: cython.longlong[:]
    in_w: cython.longlong
    dec_free: cython.longlong
    # reqid pool
    ids: cython.longlong[:]
    n_ids: cython.int
    # accesses
    a_req: cython.longlong[:]
    a_bank: cython.longlong[:]
    a_rank: cython.longlong[:]
    a_sr: cython.longlong[:]
    a_bk: cython.longlong[:]
    a_row: cython.longlong[:]
    a_col: cython.longlong[:]
    a_ncas: cython.longlong[:]
    a_isw: cython.longlong[:]
    a_free: cython.longlong[:]
    n_free: cython.int
    a_seq: cython.longlong[:]      # arrival order; lower is older
    a_next: cython.longlong[:]     # per-bank list, oldest first
    a_prev: cython.longlong[:]
    n_acc: cython.int
    seq: cython.longlong
    cur: cython.longlong[:]
    # banks (cycles)
    b_row: cython.longlong[:]
    b_act: cython.longlong[:]
    b_ready: cython.longlong[:]
    b_minpre: cython.longlong[:]
    b_mark: cython.longlong[:]
    bk_head: cython.longlong[:]
    bk_tail: cython.longlong[:]
    busy_list: cython.longlong[:]  # banks with at least one pending access
    busy_pos: cython.longlong[:]
    n_busy: cython.int
    open_list: cython.longlong[:]
    open_pos: cython.longlong[:]
    n_open: cython.int
    stamp: cython.longlong
    # activation groups
    g_hist: cython.longlong[:]
    g_pos: cython.longlong[:]
    g_cnt: cython.longlong[:]
    # data lanes
    l_cas: cython.longlong[:]
    l_end: cython.longlong[:]
    l_rank: cython.longlong[:]
    l_isw: cython.longlong[:]
    wr_end: cython.longlong[:]
    # refresh
    ref_due: cython.longlong[:]
    ref_end: cython.longlong[:]
    ref_pend: cython.longlong[:]
    sched_wake: cython.longlong
    # read returns
    ret_heap: IntHeap
    retq: cython.longlong[:]
    retq_cap: cython.longlong
    rq_h: cython.int
    rq_n: cython.int
    next_evt: cython.longlong
    # counters
    n_act: cython.longlong
    n_rd: cython.longlong
    n_wr: cython.longlong
    n_pre: cython.longlong
    n_ref: cython.longlong
    mc_busy: cython.longlong
    bs_busy: cython.longlong
    mc_flag: cython.int
    bs_flag: cython.int
    drain_entries: cython.longlong
    drain_clear_max: cython.longlong
    cmd_log: object

    def __init__(self, idx, p, nbanks, ngroups, nlanes, a_cap):
        self.idx = idx
        self.rq = _arr(p.rq_cap)
        self.wq = _arr(p.wq_cap)
        self.rs = _arr(p.rq_cap)
        self.ws = _arr(p.wq_cap)
        self.nr = 0
        self.nw = 0
        self.res = _arr(2)
        self.drain = 0
        self.wait = _arr(2 * p.cores)
        self.wait_h = _arr(2)
        self.wait_n = _arr(2)
        self.down_busy = 0
        self.up_busy = 0
        self.credits = p.sched_queue
        self.cr_t = _arr(p.sched_queue + 1)
        self.cr_h = 0
        self.cr_n = 0
        ring = p.sched_queue + 1
        self.in_t = _arr(ring)
        self.in_s = _arr(ring)
        self.in_c = _arr(ring)
        self.in_h = 0
        self.in_n = 0
        self.in_reqs = _arr(ring)
        self.in_w = 0
        self.dec_free = 0
        nids = 1 << p.reqid_bits
        self.ids = array("q", range(nids - 1, -1, -1))
        self.n_ids = nids
        self.a_req = _arr(a_cap)
        self.a_bank = _arr(a_cap)
        self.a_rank = _arr(a_cap)
        self.a_sr = _arr(a_cap)
        self.a_bk = _arr(a_cap)
        self.a_row = _arr(a_cap)
        self.a_col = _arr(a_cap)
        self.a_ncas = _arr(a_cap)
        self.a_isw = _arr(a_cap)
        self.a_free = array("q", range(a_cap - 1, -1, -1))
        self.n_free = a_cap
        self.a_seq = _arr(a_cap)
        self.a_next = _arr(a_cap, -1)
        self.a_prev = _arr(a_cap, -1)
        self.n_acc = 0
        self.seq = 0
        self.cur = _arr(nlanes, -1)
        self.b_row = _arr(nbanks, -1)
        self.b_act = _arr(nbanks, FAR_PAST)
        self.b_ready = _arr(nbanks, 0)
        self.b_minpre = _arr(nbanks, 0)
        self.b_mark = _arr(nbanks, -1)
        self.bk_head = _arr(nbanks, -1)
        self.bk_tail = _arr(nbanks, -1)
        self.busy_list = _arr(nbanks)
        self.busy_pos = _arr(nbanks, -1)
        self.n_busy = 0
        self.open_list = _arr(nbanks)
        self.open_pos = _arr(nbanks, -1)
        self.n_open = 0
        self.stamp = 0
        self.g_hist = _arr(4 * ngroups, FAR_PAST)
        self.g_pos = _arr(ngroups)
        self.g_cnt = _arr(ngroups)
        self.l_cas = _arr(nlanes, FAR_PAST)
        self.l_end = _arr(nlanes, FAR_PAST)
        self.l_rank = _arr(nlanes, -1)
        self.l_isw = _arr(nlanes, 0)
        self.wr_end = _arr(p.ranks * nlanes, FAR_PAST)
        t = p.timing
        self.ref_due = _arr(p.ranks)
        for r in range(p.ranks):
            # staggered so the ranks of a channel never refresh together
            self.ref_due[r] = t.tREFI * (r + 1) // p.ranks
        self.ref_end = _arr(p.ranks, 0)
        self.ref_pend = _arr(p.ranks, 0)
        self.sched_wake = INF
        self.ret_heap = IntHeap(256)
        self.retq_cap = 1 << p.reqid_bits
        self.retq = _arr(self.retq_cap)
        self.rq_h = 0
        self.rq_n = 0
        self.next_evt = INF
        self.n_act = self.n_rd = self.n_wr = self.n_pre = self.n_ref = 0
        self.mc_busy = 0
        self.bs_busy = 0
        self.mc_flag = 0
        self.bs_flag = 0
        self.drain_entries = 0
        self.drain_clear_max = -1
        self.cmd_log = [array("q") for _ in range(7)] if p.record_cmds else None


@cython.cclass
class Engine:
    # configuration
    mode: cython.int
    mims: cython.int
    ncores: cython.int
    nch: cython.int
    ranks: cython.int
    S: cython.int
    banks: cython.int
    C: cython.longlong
    tck: cython.longlong
    fetch_w: cython.int
    retire_w: cython.int
    rob_size: cython.int
    lat_nonmem: cython.longlong
    lat: cython.longlong[:]
    rq_cap: cython.int
    wq_cap: cython.int
    hi: cython.int
    lo: cython.int
    link_bits: cython.longlong
    s_ps: cython.longlong
    max_payload: cython.longlong
    sched_queue: cython.longlong
    age_cap: cython.longlong
    batch: cython.longlong
    refresh: cython.int
    ideal: cython.longlong
    scheme: cython.int
    # timing (cycles)
    CL: cython.longlong
    tRCD: cython.longlong
    tRP: cython.longlong
    tRAS: cython.longlong
    tRC: cython.longlong
    tCCD: cython.longlong
    tRRD: cython.longlong
    tFAW: cython.longlong
    tWR: cython.longlong
    tWTR: cython.longlong
    tRTP: cython.longlong
    tCWL: cython.longlong
    tBURST: cython.longlong
    tRFC: cython.longlong
    tREFI: cython.longlong
    tRTRS: cython.longlong
    # trace
    t_gap: cython.longlong[:]
    t_addr: cython.longlong[:]
    t_gran: cython.longlong[:]
    t_isw: cython.longlong[:]
    t_hit: cython.longlong[:]
    t_tid: cython.longlong[:]
    # request pool
    r_core: cython.longlong[:]
    r_slot: cython.longlong[:]
    r_addr: cython.longlong[:]
    r_gran: cython.longlong[:]
    r_isw: cython.longlong[:]
    r_tid: cython.longlong[:]
    r_ch: cython.longlong[:]
    r_id: cython.longlong[:]
    r_tc: cython.longlong[:]
    r_tp: cython.longlong[:]
    r_ts: cython.longlong[:]
    r_tf: cython.longlong[:]
    r_td: cython.longlong[:]
    r_pend: cython.longlong[:]
    r_live: cython.longlong[:]
    r_free: cython.longlong[:]
    n_rfree: cython.longlong
    r_cap: cython.longlong
    outstanding: cython.longlong
    sel: cython.longlong[:]
    tmp: cython.longlong[:]
    # objects
    cores: list
    chans: list
    notify: IntHeap
    comp: list
    wire: object
    # statistics
    seg: cython.longlong[:]        # [class * 6 + segment]
    seg_n: cython.longlong[:]
    max_qmc: cython.longlong
    useful: cython.longlong
    pk: cython.longlong[:]         # per kind: packets, requests, ovh, addr, msg, data
    comp_raw: cython.longlong
    comp_packed: cython.longlong
    comp_packets: cython.longlong
    n_reqs: cython.longlong
    n_reads: cython.longlong
    n_writes: cython.longlong
    end_time: cython.longlong
    now: cython.longlong
    iters: cython.longlong
    n_ticks: cython.longlong
    cwake: cython.longlong[:]      # mirror of each core's wake time
    ndone: cython.int

    def __init__(self, p, gap, addr, gran, isw, hit, tid, offsets):
        self.mode = p.mode
        self.mims = 1 if p.mode in (MI_1, MI_MUL) else 0
        self.ncores = p.cores
        self.nch = p.channels
        self.ranks = p.ranks
        self.S = p.subranks if self.mims else 1
        self.banks = p.banks
        self.C = p.cpu_ps
        t = p.timing
        self.tck = t.tCK_ps
        self.fetch_w = p.fetch_width
        self.retire_w = p.retire_width
        self.rob_size = p.rob_size
        self.lat_nonmem = p.nonmem_latency * p.cpu_ps
        self.lat = array("q", [p.l1_latency * p.cpu_ps, p.l2_latency * p.cpu_ps,
                               p.l3_latency * p.cpu_ps])
        self.rq_cap = p.rq_cap
        self.wq_cap = p.wq_cap
        self.hi = p.high_mark
        self.lo = p.low_mark
        self.link_bits = p.link_bits
        self.s_ps = p.sched_latency * p.cpu_ps
        self.max_payload = p.max_payload
        self.sched_queue = p.sched_queue
        self.age_cap = p.age_cap_ps
        self.batch = p.decode_batch
        self.refresh = 1 if p.refresh else 0
        self.ideal = p.ideal_mem_ps
        self.scheme = p.scheme
        self.CL = t.CL
        self.tRCD = t.tRCD
        self.tRP = t.tRP
        self.tRAS = t.tRAS
        self.tRC = t.tRC
        self.tCCD = t.tCCD
        self.tRRD = t.tRRD
        self.tFAW = t.tFAW
        self.tWR = t.tWR
        self.tWTR = t.tWTR
        self.tRTP = t.tRTP
        self.tCWL = t.tCWL
        self.tBURST = t.tBURST
        self.tRFC = t.tRFC
        self.tREFI = t.tREFI
        self.tRTRS = t.tRTRS
        self.t_gap, self.t_addr, self.t_gran = gap, addr, gran
        self.t_isw, self.t_hit, self.t_tid = isw, hit, tid
        self.cores = [Core(i, p.rob_size, offsets[i], offsets[i + 1]) for i in range(p.cores)]
        nbanks = p.ranks * self.S * p.banks
        ngroups = p.ranks * self.S
        a_cap = p.access_cap
        self.chans = [Channel(i, p, nbanks, ngroups, self.S, a_cap) for i in range(p.channels)]
        cap = p.cores * p.rob_size + p.channels * (p.rq_cap + p.wq_cap + p.sched_queue) + 16
        self.r_cap = cap
        self.r_core = _arr(cap)
        self.r_slot = _arr(cap)
        self.r_addr = _arr(cap)
        self.r_gran = _arr(cap)
        self.r_isw = _arr(cap)
        self.r_tid = _arr(cap)
        self.r_ch = _arr(cap)
        self.r_id = _arr(cap)
        self.r_tc = _arr(cap)
        self.r_tp = _arr(cap)
        self.r_ts = _arr(cap)
        self.r_tf = _arr(cap)
        self.r_td = _arr(cap)
        self.r_pend = _arr(cap)
        self.r_live = _arr(cap)
        self.r_free = array("q", range(cap - 1, -1, -1))
        self.n_rfree = cap
        self.outstanding = 0
        self.sel = _arr(max(p.rq_cap, p.wq_cap) + 1)
        self.tmp = _arr(max(p.rq_cap, p.wq_cap) + 1)
        self.notify = IntHeap(1024)
        self.comp = list(p.compressors) if p.compressors else []
        self.wire = p.wire
        self.seg = _arr(2 * N_SEG)
        self.seg_n = _arr(2)
        self.max_qmc = 0
        self.useful = 0
        self.pk = _arr(3 * 6)
        self.comp_raw = self.comp_packed = self.comp_packets = 0
        self.n_reqs = self.n_reads = self.n_writes = 0
        self.end_time = 0
        self.now = 0
        self.iters = 0
        self.n_ticks = 0
        self.cwake = _arr(p.cores, 0)
        self.ndone = 0

    # ------------------------------------------------------------------ requests

    @cython.cfunc
    def _alloc(self) -> cython.longlong:
        if self.n_rfree == 0:
            raise SimulationError("request pool exhausted")
        self.n_rfree -= 1
        r: cython.longlong = self.r_free[self.n_rfree]
        self.r_live[r] = 1
        self.outstanding += 1
        return r

    @cython.cfunc
    def _release(self, r: cython.longlong):
        if self.r_live[r] == 0:
            raise SimulationError(f"request {r} released twice")
        self.r_live[r] = 0
        self.r_free[self.n_rfree] = r
        self.n_rfree += 1
        self.outstanding -= 1

    @cython.cfunc
    def _finish(self, r: cython.longlong, t_done: cython.longlong):
        """Account a completed request. Segments telescope to t_done - t_created."""
        isw: cython.longlong = self.r_isw[r]
        tc: cython.longlong = self.r_tc[r]
        tf: cython.longlong = self.r_tf[r]
        td: cython.longlong = self.r_td[r]
        q_mc: cython.longlong
        ser: cython.longlong
        fixed: cython.longlong
        q_s: cython.longlong
        core_t: cython.longlong
        ret: cython.longlong
        if self.ideal >= 0:
            q_mc = 0
            ser = 0
            fixed = 0
            q_s = 0
            core_t = t_done - tc
            ret = 0
        elif self.mode == DDR:
            q_mc = tf - tc
            ser = 0
            fixed = 0
            q_s = 0
            core_t = td - tf
            ret = t_done - td
        else:
            q_mc = self.r_tp[r] - tc
            ser = self.r_ts[r] - self.r_tp[r]
            fixed = self.s_ps
            q_s = tf - (self.r_ts[r] + self.s_ps)
            core_t = td - tf
            ret = t_done - td
        if q_mc < 0 or ser < 0 or q_s < 0 or core_t < 0 or ret < 0:
            raise SimulationError(
                f"negative latency segment for request at {self.r_addr[r]:#x}: "
                f"{q_mc} {ser} {fixed} {q_s} {core_t} {ret}")
        if q_mc + ser + fixed + q_s + core_t + ret != t_done - tc:
            raise SimulationError("latency segments do not sum to the end-to-end latency")
        b: cython.int = N_SEG * isw
        self.seg[b] += q_mc
        self.seg[b + 1] += ser
        self.seg[b + 2] += fixed
        self.seg[b + 3] += q_s
        self.seg[b + 4] += core_t
        self.seg[b + 5] += ret
        self.seg_n[isw] += 1
        if self.mode != DDR and q_mc > self.max_qmc:
            self.max_qmc = q_mc
        self.useful += 8 * self.r_gran[r]
        if t_done > self.end_time:
            self.end_time = t_done

    # ------------------------------------------------------------------ cores

    @cython.cfunc
    def _wake_after(self, c: Core, t: cython.longlong) -> cython.longlong:
        return _max(_ceil_to(t, self.C), c.last_tick + self.C)

    @cython.cfunc
    def _grant(self, ch: Channel, d: cython.int, now: cython.longlong):
        """A queue slot was freed: hand it to the oldest stalled core, if any."""
        if ch.wait_n[d] == 0:
            return
        n: cython.longlong = self.ncores
        cid: cython.longlong = ch.wait[d * n + ch.wait_h[d]]
        ch.wait_h[d] = (ch.wait_h[d] + 1) % n
        ch.wait_n[d] -= 1
        ch.res[d] += 1
        c: Core = self.cores[cid]
        c.granted = 1
        w: cython.longlong = self._wake_after(c, now)
        if w < c.wake:
            c.wake = w
            self.cwake[cid] = w

    @cython.cfunc
    def _issue(self, c: Core, i: cython.longlong, now: cython.longlong) -> cython.longlong:
        """Hand trace record ``i`` to the memory system. Returns the ROB ready time,
        INF for a pending read, or -1 when the target queue is full."""
        addr: cython.longlong = self.t_addr[i]
        isw: cython.longlong = self.t_isw[i]
        r: cython.longlong
        slot: cython.longlong = (c.head + c.count) % c.rob_size
        if self.ideal >= 0:
            r = self._alloc()
            self._fill(r, c, slot, i, 0, now)
            self.n_reqs += 1
            if isw:
                self.n_writes += 1
                self.r_td[r] = now
                self._finish(r, now)
                self._release(r)
                return now
            self.n_reads += 1
            self.r_td[r] = now + self.ideal
            self.notify.push(now + self.ideal, r)
            return INF
        chi: cython.longlong
        if self.mims:
            chi = (addr >> 3) & (self.nch - 1)
        else:
            chi = (addr >> 6) & (self.nch - 1)
        ch: Channel = self.chans[chi]
        qid: cython.int = cython.cast(cython.int, chi * 2 + isw)
        cap: cython.int = self.wq_cap if isw else self.rq_cap
        n: cython.int = ch.nw if isw else ch.nr
        if c.granted:
            if c.wait_q != qid:
                raise SimulationError("core holds a reservation for a different queue")
            c.granted = 0
            c.wait_q = -1
            ch.res[isw] -= 1
        elif n + ch.res[isw] >= cap:
            if c.wait_q < 0:
                nc: cython.longlong = self.ncores
                ch.wait[isw * nc + (ch.wait_h[isw] + ch.wait_n[isw]) % nc] = c.cid
                ch.wait_n[isw] += 1
                c.wait_q = qid
            return -1
        r = self._alloc()
        self._fill(r, c, slot, i, chi, now)
        self.n_reqs += 1
        if self.mode == MI_MUL:
            self._sorted_add(ch.ws if isw else ch.rs, ch.nw if isw else ch.nr, r)
        if isw:
            self.n_writes += 1
            ch.wq[ch.nw] = r
            ch.nw += 1
            if ch.nw > self.hi and not ch.drain:
                ch.drain = 1
                ch.drain_entries += 1
        else:
            self.n_reads += 1
            ch.rq[ch.nr] = r
            ch.nr += 1
        if self.mode == DDR:
            self._make_accesses(ch, r)
            ch.sched_wake = _min(ch.sched_wake, _ceil_to(now + 1, self.tck))
        return now if isw else INF

    @cython.cfunc
    def _fill(self, r: cython.longlong, c: Core, slot: cython.longlong, i: cython.longlong,
              chi: cython.longlong, now: cython.longlong):
        self.r_core[r] = c.cid
        self.r_slot[r] = slot
        self.r_addr[r] = self.t_addr[i]
        self.r_gran[r] = self.t_gran[i]
        self.r_isw[r] = self.t_isw[i]
        self.r_tid[r] = self.t_tid[i]
        self.r_ch[r] = chi
        self.r_id[r] = -1
        self.r_tc[r] = now
        self.r_tp[r] = -1
        self.r_ts[r] = -1
        self.r_tf[r] = -1
        self.r_td[r] = -1
        self.r_pend[r] = 0

    @cython.cfunc
    def _core_tick(self, c: Core, now: cython.longlong):
        rs: cython.int = c.rob_size
        n: cython.int = 0
        c.last_tick = now
        while n < self.retire_w and c.count > 0:
            if c.rob[c.head] > now:
                break
            c.head = (c.head + 1) % rs
            c.count -= 1
            c.committed += 1
            c.last_commit = now
            n += 1
        f: cython.int = 0
        i: cython.longlong
        h: cython.longlong
        v: cython.longlong
        blocked: cython.int = 1 if (c.wait_q >= 0 and not c.granted) else 0
        if blocked and c.count < rs:
            c.stall_cycles += 1
        while not blocked and f < self.fetch_w and c.count < rs:
            if c.rem < 0:
                if c.idx >= c.end:
                    break
                c.rem = self.t_gap[c.idx]
            if c.rem > 0:
                c.rob[(c.head + c.count) % rs] = now + self.lat_nonmem
                c.count += 1
                c.rem -= 1
                f += 1
                continue
            i = c.idx
            h = self.t_hit[i]
            if h == HIT_MEM:
                v = self._issue(c, i, now)
                if v < 0:
                    c.stall_cycles += 1
                    break
            else:
                v = now + self.lat[h]
            c.rob[(c.head + c.count) % rs] = v
            c.count += 1
            c.idx += 1
            c.rem = -1
            f += 1
        # schedule the next tick
        if c.idx >= c.end and c.rem < 0 and c.count == 0:
            c.done = 1
            self.ndone += 1
            c.wake = INF
            return
        if c.count < rs and c.idx < c.end and not (c.wait_q >= 0 and not c.granted):
            c.wake = now + self.C
        elif c.count > 0 and c.rob[c.head] != INF:
            c.wake = _max(now + self.C, _ceil_to(c.rob[c.head], self.C))
        else:
            c.wake = INF

    # ------------------------------------------------------------------ accesses

    @cython.cfunc
    def _new_access(self, ch: Channel, r: cython.longlong, rank: cython.longlong,
                    sr: cython.longlong, bk: cython.longlong, row: cython.longlong,
                    col: cython.longlong, isw: cython.longlong) -> cython.longlong:
        if ch.n_free == 0:
            raise SimulationError("scheduler access table overflow; raise access_cap")
        ch.n_free -= 1
        a: cython.longlong = ch.a_free[ch.n_free]
        ch.a_req[a] = r
        ch.a_rank[a] = rank
        ch.a_sr[a] = sr
        ch.a_bk[a] = bk
        ch.a_bank[a] = (rank * self.S + sr) * self.banks + bk
        ch.a_row[a] = row
        ch.a_col[a] = col
        ch.a_ncas[a] = 1
        ch.a_isw[a] = isw
        ch.a_seq[a] = ch.seq
        ch.seq += 1
        b: cython.longlong = ch.a_bank[a]
        tail: cython.longlong = ch.bk_tail[b]
        ch.a_prev[a] = tail
        ch.a_next[a] = -1
        if tail >= 0:
            ch.a_next[tail] = a
        else:
            ch.bk_head[b] = a
            ch.busy_pos[b] = ch.n_busy
            ch.busy_list[ch.n_busy] = b
            ch.n_busy += 1
        ch.bk_tail[b] = a
        ch.n_acc += 1
        self.r_pend[r] += 1
        return a

    @cython.cfunc
    def _make_accesses(self, ch: Channel, r: cython.longlong):
        addr: cython.longlong = self.r_addr[r]
        isw: cython.longlong = self.r_isw[r]
        rk_m: cython.longlong = self.ranks - 1
        bk_m: cython.longlong = self.banks - 1
        if not self.mims:
            self._new_access(ch, r, (addr >> 17) & rk_m, 0, (addr >> 14) & bk_m,
                             (addr >> 18) & 0x7FFF, (addr >> 7) & 127, isw)
            return
        g: cython.longlong = self.r_gran[r]
        u0: cython.longlong = addr >> 4
        S: cython.int = self.S
        j: cython.int
        for j in range(S):
            ch.cur[j] = -1
        i: cython.longlong
        u: cython.longlong
        sr: cython.longlong
        rank: cython.longlong
        bk: cython.longlong
        row: cython.longlong
        col: cython.longlong
        a: cython.longlong
        for i in range(g):
            u = u0 + i
            sr = u & (S - 1)
            col = (u >> 3) & 127
            bk = (u >> 10) & bk_m
            rank = (u >> 13) & rk_m
            row = (u >> 14) & 0x7FFF
            a = ch.cur[sr]
            if (a >= 0 and ch.a_rank[a] == rank and ch.a_bk[a] == bk and ch.a_row[a] == row
                    and ch.a_col[a] + ch.a_ncas[a] == col):
                ch.a_ncas[a] += 1
            else:
                ch.cur[sr] = self._new_access(ch, r, rank, sr, bk, row, col, isw)

    @cython.cfunc
    def _drop_access(self, ch: Channel, a: cython.longlong):
        b: cython.longlong = ch.a_bank[a]
        pv: cython.longlong = ch.a_prev[a]
        nx: cython.longlong = ch.a_next[a]
        if pv >= 0:
            ch.a_next[pv] = nx
        else:
            ch.bk_head[b] = nx
        if nx >= 0:
            ch.a_prev[nx] = pv
        else:
            ch.bk_tail[b] = pv
        if ch.bk_head[b] < 0:
            i: cython.longlong = ch.busy_pos[b]
            last: cython.longlong = ch.busy_list[ch.n_busy - 1]
            ch.busy_list[i] = last
            ch.busy_pos[last] = i
            ch.busy_pos[b] = -1
            ch.n_busy -= 1
        ch.n_acc -= 1
        ch.a_free[ch.n_free] = a
        ch.n_free += 1

    @cython.cfunc
    def _log(self, ch: Channel, t: cython.longlong, rank: cython.longlong, sr: cython.longlong,
             bk: cython.longlong, row: cython.longlong, col: cython.longlong, cmd: cython.int):
        if ch.cmd_log is None:
            return
        lg: list = ch.cmd_log
        lg[0].append(t * self.tck)
        lg[1].append(rank)
        lg[2].append(sr)
        lg[3].append(bk)
        lg[4].append(row)
        lg[5].append(col)
        lg[6].append(cmd)

    # ------------------------------------------------------------------ DRAM scheduler

    @cython.cfunc
    def _cas_earliest(self, ch: Channel, a: cython.longlong) -> cython.longlong:
        b: cython.longlong = ch.a_bank[a]
        sr: cython.longlong = ch.a_sr[a]
        rank: cython.longlong = ch.a_rank[a]
        e: cython.longlong = _max(ch.b_act[b] + self.tRCD, ch.l_cas[sr] + self.tCCD)
        gap: cython.longlong = 0
        if ch.a_isw[a]:
            if ch.l_rank[sr] != rank or ch.l_isw[sr] == 0:
                gap = self.tRTRS
            e = _max(e, ch.l_end[sr] + gap - self.tCWL)
        else:
            if ch.l_rank[sr] != rank:
                gap = self.tRTRS
            e = _max(e, ch.l_end[sr] + gap - self.CL)
            e = _max(e, ch.wr_end[rank * self.S + sr] + self.tWTR)
        return e

    @cython.cfunc
    def _act_earliest(self, ch: Channel, a: cython.longlong) -> cython.longlong:
        b: cython.longlong = ch.a_bank[a]
        rank: cython.longlong = ch.a_rank[a]
        g: cython.longlong = rank * self.S + ch.a_sr[a]
        e: cython.longlong = _max(ch.b_ready[b], ch.ref_end[rank])
        p: cython.longlong = ch.g_pos[g]
        e = _max(e, ch.g_hist[4 * g + (p + 3) % 4] + self.tRRD)
        if ch.g_cnt[g] >= 4:
            e = _max(e, ch.g_hist[4 * g + p] + self.tFAW)
        return e

    @cython.cfunc
    def _open_add(self, ch: Channel, b: cython.longlong):
        ch.open_pos[b] = ch.n_open
        ch.open_list[ch.n_open] = b
        ch.n_open += 1

    @cython.cfunc
    def _open_del(self, ch: Channel, b: cython.longlong):
        i: cython.longlong = ch.open_pos[b]
        last: cython.longlong = ch.open_list[ch.n_open - 1]
        ch.open_list[i] = last
        ch.open_pos[last] = i
        ch.open_pos[b] = -1
        ch.n_open -= 1

    @cython.cfunc
    def _issue_act(self, ch: Channel, a: cython.longlong, t: cython.longlong):
        b: cython.longlong = ch.a_bank[a]
        rank: cython.longlong = ch.a_rank[a]
        g: cython.longlong = rank * self.S + ch.a_sr[a]
        ch.b_row[b] = ch.a_row[a]
        ch.b_act[b] = t
        ch.b_minpre[b] = t + self.tRAS
        ch.b_ready[b] = _max(ch.b_ready[b], t + self.tRC)
        self._open_add(ch, b)
        p: cython.longlong = ch.g_pos[g]
        ch.g_hist[4 * g + p] = t
        ch.g_pos[g] = (p + 1) % 4
        ch.g_cnt[g] += 1
        ch.n_act += 1
        r: cython.longlong = ch.a_req[a]
        if self.r_tf[r] < 0:
            self.r_tf[r] = t * self.tck
        self._log(ch, t, rank, ch.a_sr[a], ch.a_bk[a], ch.a_row[a], 0, C_ACT)

    @cython.cfunc
    def _issue_cas(self, ch: Channel, a: cython.longlong, t: cython.longlong):
        b: cython.longlong = ch.a_bank[a]
        sr: cython.longlong = ch.a_sr[a]
        rank: cython.longlong = ch.a_rank[a]
        isw: cython.longlong = ch.a_isw[a]
        row: cython.longlong = ch.a_row[a]
        col: cython.longlong = ch.a_col[a]
        ch.a_col[a] = col + 1
        ch.a_ncas[a] -= 1
        keep: cython.int = 1 if ch.a_ncas[a] > 0 else 0
        o: cython.longlong
        if not keep:
            o = ch.bk_head[b]
            while o >= 0:
                if o != a and ch.a_row[o] == row:
                    keep = 1
                    break
                o = ch.a_next[o]
        start: cython.longlong = t + (self.tCWL if isw else self.CL)
        end: cython.longlong = start + self.tBURST
        ch.l_cas[sr] = t
        ch.l_end[sr] = end
        ch.l_rank[sr] = rank
        ch.l_isw[sr] = isw
        if isw:
            ch.wr_end[rank * self.S + sr] = end
            ch.b_minpre[b] = _max(ch.b_minpre[b], end + self.tWR)
            ch.n_wr += 1
        else:
            ch.b_minpre[b] = _max(ch.b_minpre[b], t + self.tRTP)
            ch.n_rd += 1
        cmd: cython.int
        if keep:
            cmd = C_WR if isw else C_RD
        else:
            cmd = C_WRA if isw else C_RDA
            ch.b_ready[b] = _max(ch.b_ready[b], ch.b_minpre[b] + self.tRP)
            ch.b_row[b] = -1
            self._open_del(ch, b)
        self._log(ch, t, rank, sr, ch.a_bk[a], row, col, cmd)
        r: cython.longlong = ch.a_req[a]
        tps: cython.longlong = t * self.tck
        if self.r_tf[r] < 0:
            self.r_tf[r] = tps
        done_t: cython.longlong = tps if isw else end * self.tck
        if done_t > self.r_td[r]:
            self.r_td[r] = done_t
        if ch.a_ncas[a] == 0:
            self._drop_access(ch, a)
            self.r_pend[r] -= 1
            if self.r_pend[r] == 0:
                self._sched_done(ch, r, tps)

    @cython.cfunc
    def _remove_mc(self, ch: Channel, r: cython.longlong, isw: cython.longlong) -> cython.int:
        q: cython.longlong[:] = ch.wq if isw else ch.rq
        n: cython.int = ch.nw if isw else ch.nr
        j: cython.int
        k: cython.int = -1
        for j in range(n):
            if q[j] == r:
                k = j
                break
        if k < 0:
            raise SimulationError("request missing from its controller queue")
        for j in range(k, n - 1):
            q[j] = q[j + 1]
        if self.mode == MI_MUL:
            self._sorted_del(ch.ws if isw else ch.rs, n, r)
        if isw:
            ch.nw -= 1
            self._after_write_removed(ch)
        else:
            ch.nr -= 1
        return k

    @cython.cfunc
    def _after_write_removed(self, ch: Channel):
        if ch.drain and ch.nw < self.lo:
            ch.drain = 0
            if ch.nw > ch.drain_clear_max:
                ch.drain_clear_max = ch.nw

    @cython.cfunc
    def _sched_done(self, ch: Channel, r: cython.longlong, now: cython.longlong):
        """Final column command of request ``r`` has issued at ``now``."""
        isw: cython.longlong = self.r_isw[r]
        if self.mode == DDR:
            self._remove_mc(ch, r, isw)
            self._grant(ch, cython.cast(cython.int, isw), now)
            if isw:
                self._finish(r, self.r_td[r])
                self._release(r)
            else:
                self.notify.push(self.r_td[r], r)
            return
        ch.cr_t[(ch.cr_h + ch.cr_n) % (self.sched_queue + 1)] = now + self.s_ps
        ch.cr_n += 1
        if isw:
            self._finish(r, self.r_td[r])
            self._release(r)
        else:
            ch.ret_heap.push(self.r_td[r], r)

    @cython.cfunc
    def _sched_tick(self, ch: Channel, tps: cython.longlong):
        t: cython.longlong = tps // self.tck
        nxt: cython.longlong = INF
        rank: cython.longlong
        b: cython.longlong
        e: cython.longlong
        ok: cython.int
        nb: cython.longlong = self.S * self.banks
        if self.refresh:
            for rank in range(self.ranks):
                if not ch.ref_pend[rank] and t >= ch.ref_due[rank]:
                    ch.ref_pend[rank] = 1
                if ch.ref_pend[rank]:
                    ok = 1
                    e = ch.ref_end[rank]
                    for b in range(rank * nb, (rank + 1) * nb):
                        if ch.b_row[b] >= 0:
                            ok = 0
                            break
                        e = _max(e, ch.b_ready[b])
                    if ok:
                        if e <= t:
                            for b in range(rank * nb, (rank + 1) * nb):
                                ch.b_ready[b] = _max(ch.b_ready[b], t + self.tRFC)
                            ch.ref_end[rank] = t + self.tRFC
                            ch.ref_due[rank] += self.tREFI
                            ch.ref_pend[rank] = 0
                            ch.n_ref += 1
                            self._log(ch, t, rank, 0, 0, 0, 0, C_REF)
                            ch.sched_wake = (t + 1) * self.tck
                            return
                        nxt = _min(nxt, e)
                else:
                    nxt = _min(nxt, ch.ref_due[rank])
        dirsel: cython.int = -1
        if self.mode == DDR:
            dirsel = 1 if ch.drain else 0
            if (ch.nw if dirsel else ch.nr) == 0:
                dirsel = 1 - dirsel
        ch.stamp += 1
        self.n_ticks += 1
        stamp: cython.longlong = ch.stamp
        a: cython.longlong
        row: cython.longlong
        i: cython.int
        e_rd: cython.longlong
        e_wr: cython.longlong
        # oldest ready row hit; an open row is finished whatever the drain
        # direction, so the activation that opened it is never wasted
        best: cython.longlong = -1
        best_seq: cython.longlong = INF
        for i in range(ch.n_open):
            b = ch.open_list[i]
            row = ch.b_row[b]
            e_rd = -1
            e_wr = -1
            a = ch.bk_head[b]
            while a >= 0 and ch.a_seq[a] < best_seq:
                if ch.a_row[a] == row:
                    ch.b_mark[b] = stamp
                    if ch.a_isw[a]:
                        if e_wr < 0:
                            e_wr = self._cas_earliest(ch, a)
                        e = e_wr
                    else:
                        if e_rd < 0:
                            e_rd = self._cas_earliest(ch, a)
                        e = e_rd
                    if e <= t:
                        best = a
                        best_seq = ch.a_seq[a]
                        break
                    nxt = _min(nxt, e)
                a = ch.a_next[a]
        if best >= 0:
            self._issue_cas(ch, best, t)
            ch.sched_wake = (t + 1) * self.tck
            return
        # oldest activation a closed bank can take now
        best_act: cython.longlong = -1
        for i in range(ch.n_busy):
            b = ch.busy_list[i]
            if ch.b_row[b] >= 0:
                continue
            a = ch.bk_head[b]
            if ch.ref_pend[ch.a_rank[a]]:
                continue
            if dirsel >= 0:
                while a >= 0 and ch.a_isw[a] != dirsel:
                    a = ch.a_next[a]
                if a < 0:
                    continue
            if best_act >= 0 and ch.a_seq[a] >= best_seq:
                continue
            e = self._act_earliest(ch, a)
            if e <= t:
                best_act = a
                best_seq = ch.a_seq[a]
            else:
                nxt = _min(nxt, e)
        if best_act >= 0:
            self._issue_act(ch, best_act, t)
            ch.sched_wake = (t + 1) * self.tck
            return
        # close rows that nobody in the candidate set wants any more
        for i in range(ch.n_open):
            b = ch.open_list[i]
            if ch.b_mark[b] == stamp:
                continue
            e = ch.b_minpre[b]
            if e <= t:
                row = ch.b_row[b]
                ch.b_row[b] = -1
                ch.b_ready[b] = _max(ch.b_ready[b], t + self.tRP)
                self._open_del(ch, b)
                ch.n_pre += 1
                self._log(ch, t, b // nb, (b // self.banks) % self.S, b % self.banks, row, 0, C_PRE)
                ch.sched_wake = (t + 1) * self.tck
                return
            nxt = _min(nxt, e)
        ch.sched_wake = INF if nxt >= INF else nxt * self.tck

    # ------------------------------------------------------------------ links

    @cython.cfunc
    def _link_ps(self, nbytes: cython.longlong) -> cython.longlong:
        return ((nbytes * 8 + self.link_bits - 1) // self.link_bits) * self.C

    @cython.cfunc
    def _pk_add(self, kind: cython.int, nreq: cython.longlong, ovh: cython.longlong,
                adr: cython.longlong, msg: cython.longlong, data: cython.longlong):
        b: cython.int = kind * 6
        self.pk[b] += 1
        self.pk[b + 1] += nreq
        self.pk[b + 2] += ovh
        self.pk[b + 3] += adr
        self.pk[b + 4] += msg
        self.pk[b + 5] += data

    @cython.cfunc
    def _sorted_add(self, s: cython.longlong[:], n: cython.int, r: cython.longlong):
        # after any equal addresses, so ties keep arrival order
        k: cython.int = n
        while k > 0 and self.r_addr[s[k - 1]] > self.r_addr[r]:
            s[k] = s[k - 1]
            k -= 1
        s[k] = r

    @cython.cfunc
    def _sorted_del(self, s: cython.longlong[:], n: cython.int, r: cython.longlong):
        j: cython.int = 0
        while s[j] != r:
            j += 1
        while j < n - 1:
            s[j] = s[j + 1]
            j += 1

    @cython.cfunc
    def _select(self, ch: Channel, isw: cython.int, now: cython.longlong) -> cython.int:
        """Fill ``self.sel`` with the requests for the next packet; returns the count."""
        q: cython.longlong[:] = ch.wq if isw else ch.rq
        n: cython.int = ch.nw if isw else ch.nr
        limit: cython.longlong = ch.credits
        if not isw and ch.n_ids < limit:
            limit = ch.n_ids
        if self.mode != MI_MUL:
            self.sel[0] = q[0]
            return 1
        # aged requests first (oldest first), then the rest by address
        m: cython.int = 0
        j: cython.int
        r: cython.longlong
        for j in range(n):
            r = q[j]
            if now - self.r_tc[r] >= self.age_cap:
                self.tmp[m] = r
                m += 1
        s: cython.longlong[:] = ch.ws if isw else ch.rs
        for j in range(n):
            r = s[j]
            if now - self.r_tc[r] < self.age_cap:
                self.tmp[m] = r
                m += 1
        used: cython.longlong = 0
        cnt: cython.int = 0
        size: cython.longlong
        for j in range(m):
            if cnt >= limit:
                break
            r = self.tmp[j]
            size = ADDR_B + MSG_B + (8 * self.r_gran[r] if isw else 0)
            if cnt > 0 and used + size > self.max_payload:
                break
            used += size
            self.sel[cnt] = r
            cnt += 1
        return cnt

    @cython.cfunc
    def _dispatch(self, ch: Channel, now: cython.longlong):
        if ch.nr + ch.nw == 0 or ch.credits <= 0 or ch.down_busy > now:
            return
        isw: cython.int = 1 if ch.drain else 0
        if (ch.nw if isw else ch.nr) == 0:
            isw = 1 - isw
        if not isw and ch.n_ids == 0:
            if ch.nw == 0:
                return
            isw = 1
        cnt: cython.int = self._select(ch, isw, now)
        j: cython.int
        r: cython.longlong
        adr: cython.longlong = 0
        msg: cython.longlong = 0
        data: cython.longlong = 0
        for j in range(cnt):
            r = self.sel[j]
            self._remove_mc(ch, r, isw)
            self._grant(ch, isw, now)
            if not isw:
                ch.n_ids -= 1
                self.r_id[r] = ch.ids[ch.n_ids]
            if self.mode == BOB:
                adr += ADDR_B
                data += BOB_LINE if isw else 0
            else:
                adr += ADDR_B
                msg += MSG_B
                data += 8 * self.r_gran[r] if isw else 0
        ch.credits -= cnt
        if self.scheme >= 0 and not isw and self.mode == MI_MUL:
            addrs = [self.r_addr[self.sel[j]] for j in range(cnt)]
            blk: cython.longlong = self.comp[ch.idx].compressed_size(addrs, self.scheme)
            self.comp_raw += ADDR_B * cnt
            self.comp_packed += blk
            self.comp_packets += 1
            adr = blk
        nbytes: cython.longlong = OVH + adr + msg + data
        if self.wire is not None:
            got = self.wire.packet(ch.idx, 1 if isw else 0, self.mode, self.scheme,
                                   [self.r_addr[self.sel[j]] for j in range(cnt)],
                                   [self.r_gran[self.sel[j]] for j in range(cnt)],
                                   [self.r_tid[self.sel[j]] for j in range(cnt)],
                                   [self.r_id[self.sel[j]] for j in range(cnt)])
            if got != nbytes:
                raise SimulationError(f"wire encoding gave {got} bytes, model expected {nbytes}")
        self._pk_add(1 if isw else 0, cnt, OVH, adr, msg, data)
        ser: cython.longlong = self._link_ps(nbytes)
        ch.down_busy = now + ser
        deliver: cython.longlong = now + ser + self.s_ps
        cyc: cython.longlong
        if self.mode == BOB:
            cyc = 1
        elif isw:
            cyc = cnt
        else:
            cyc = (cnt + self.batch - 1) // self.batch
        start: cython.longlong = _max(_ceil_to(deliver, self.tck), ch.dec_free)
        ch.dec_free = start + cyc * self.tck
        ring: cython.longlong = self.sched_queue + 1
        slot: cython.longlong = (ch.in_h + ch.in_n) % ring
        ch.in_t[slot] = ch.dec_free
        ch.in_s[slot] = ch.in_w
        ch.in_c[slot] = cnt
        ch.in_n += 1
        for j in range(cnt):
            r = self.sel[j]
            self.r_tp[r] = now
            self.r_ts[r] = now + ser
            ch.in_reqs[ch.in_w % ring] = r
            ch.in_w += 1

    @cython.cfunc
    def _flush_returns(self, ch: Channel, now: cython.longlong):
        if ch.rq_n == 0 or ch.up_busy > now:
            return
        cap: cython.longlong = ch.retq_cap
        cnt: cython.int = 0
        used: cython.longlong = 0
        size: cython.longlong
        r: cython.longlong
        while cnt < ch.rq_n:
            r = ch.retq[(ch.rq_h + cnt) % cap]
            size = RET_MSG_B + 8 * self.r_gran[r]
            if cnt > 0 and (self.mode != MI_MUL or used + size > self.max_payload):
                break
            used += size
            cnt += 1
        nbytes: cython.longlong
        j: cython.int
        if self.mode == BOB:
            nbytes = OVH + ADDR_B + BOB_LINE
            self._pk_add(2, 1, OVH, ADDR_B, 0, BOB_LINE)
        else:
            nbytes = OVH + used
            self._pk_add(2, cnt, OVH, 0, RET_MSG_B * cnt, used - RET_MSG_B * cnt)
        if self.wire is not None:
            got = self.wire.packet(ch.idx, 2, self.mode, -1,
                                   [self.r_addr[ch.retq[(ch.rq_h + j) % cap]] for j in range(cnt)],
                                   [self.r_gran[ch.retq[(ch.rq_h + j) % cap]] for j in range(cnt)],
                                   [self.r_tid[ch.retq[(ch.rq_h + j) % cap]] for j in range(cnt)],
                                   [self.r_id[ch.retq[(ch.rq_h + j) % cap]] for j in range(cnt)])
            if got != nbytes:
                raise SimulationError(f"wire encoding gave {got} bytes, model expected {nbytes}")
        ser: cython.longlong = self._link_ps(nbytes)
        ch.up_busy = now + ser
        for j in range(cnt):
            r = ch.retq[ch.rq_h]
            ch.rq_h = (ch.rq_h + 1) % cap
            ch.rq_n -= 1
            self.notify.push(now + ser + self.s_ps, r)

    # ------------------------------------------------------------------ main loop

    @cython.cfunc
    def _phase1(self, ch: Channel, t: cython.longlong):
        ring: cython.longlong = self.sched_queue + 1
        j: cython.longlong
        r: cython.longlong
        while ch.cr_n > 0 and ch.cr_t[ch.cr_h] <= t:
            ch.cr_h = (ch.cr_h + 1) % ring
            ch.cr_n -= 1
            ch.credits += 1
        while ch.in_n > 0 and ch.in_t[ch.in_h] <= t:
            for j in range(ch.in_s[ch.in_h], ch.in_s[ch.in_h] + ch.in_c[ch.in_h]):
                self._make_accesses(ch, ch.in_reqs[j % ring])
            ch.in_h = (ch.in_h + 1) % ring
            ch.in_n -= 1
            ch.sched_wake = _min(ch.sched_wake, _ceil_to(t, self.tck))
        cap: cython.longlong = ch.retq_cap
        while ch.ret_heap.n > 0 and ch.ret_heap.k[0] <= t:
            r = ch.ret_heap.pop()
            if ch.rq_n >= cap:
                raise SimulationError("return buffer overflow")
            ch.retq[(ch.rq_h + ch.rq_n) % cap] = r
            ch.rq_n += 1

    @cython.cfunc
    def _ch_next(self, ch: Channel, t: cython.longlong) -> cython.longlong:
        m: cython.longlong = ch.sched_wake
        if ch.cr_n > 0:
            m = _min(m, ch.cr_t[ch.cr_h])
        if ch.in_n > 0:
            m = _min(m, ch.in_t[ch.in_h])
        if ch.ret_heap.n > 0:
            m = _min(m, ch.ret_heap.k[0])
        if self.mode != DDR:
            if ch.nr + ch.nw > 0 and ch.credits > 0 and (ch.nw > 0 or ch.n_ids > 0):
                m = _min(m, _max(ch.down_busy, t + 1))
            if ch.rq_n > 0:
                m = _min(m, _max(ch.up_busy, t + 1))
        return m

    @cython.ccall
    def run(self):
        nc: cython.int = self.ncores
        nch: cython.int = self.nch
        i: cython.int
        t: cython.longlong
        t_prev: cython.longlong = 0
        c: Core
        ch: Channel
        r: cython.longlong
        cw: cython.longlong[:] = self.cwake
        while True:
            t = self.notify.top()
            for i in range(nc):
                if cw[i] < t:
                    t = cw[i]
            for i in range(nch):
                ch = self.chans[i]
                if ch.next_evt < t:
                    t = ch.next_evt
                if t_prev < t < INF:
                    if ch.mc_flag:
                        ch.mc_busy += t - t_prev
                    if ch.bs_flag:
                        ch.bs_busy += t - t_prev
            if self.ndone == nc and self.outstanding == 0:
                break
            if t >= INF:
                raise SimulationError(self._deadlock_report())
            t_prev = t
            self.now = t
            self.iters += 1
            # phase 1
            while self.notify.n > 0 and self.notify.k[0] <= t:
                r = self.notify.pop()
                self._complete_read(r, t)
            for i in range(nch):
                self._phase1(self.chans[i], t)
            # phase 2
            for i in range(nch):
                ch = self.chans[i]
                if ch.sched_wake <= t:
                    self._sched_tick(ch, t)
            # phase 3
            for i in range(nc):
                if cw[i] <= t:
                    c = self.cores[i]
                    self._core_tick(c, t)
                    cw[i] = c.wake
            # phase 4
            for i in range(nch):
                ch = self.chans[i]
                if self.mode != DDR:
                    self._dispatch(ch, t)
                    self._flush_returns(ch, t)
                ch.next_evt = self._ch_next(ch, t)
                ch.mc_flag = 1 if (ch.nr + ch.nw > 0 or ch.down_busy > t) else 0
                ch.bs_flag = 1 if (ch.n_acc > 0 or ch.in_n > 0 or ch.rq_n > 0
                                   or ch.ret_heap.n > 0 or ch.up_busy > t) else 0
        for i in range(nc):
            c = self.cores[i]
            if c.last_commit > self.end_time:
                self.end_time = c.last_commit
        return self.results()

    @cython.cfunc
    def _complete_read(self, r: cython.longlong, t: cython.longlong):
        if self.r_live[r] == 0:
            raise SimulationError(f"completion for unknown request {r}")
        c: Core = self.cores[self.r_core[r]]
        c.notify(cython.cast(cython.int, self.r_slot[r]), t, self.C)
        self.cwake[c.cid] = c.wake
        if self.ideal < 0 and self.mode != DDR:
            ch: Channel = self.chans[self.r_ch[r]]
            ch.ids[ch.n_ids] = self.r_id[r]
            ch.n_ids += 1
        self._finish(r, t)
        self._release(r)

    def _deadlock_report(self):
        lines = ["simulation stalled with work outstanding"]
        c: Core
        ch: Channel
        for c in self.cores:
            lines.append(f"core {c.cid}: idx={c.idx}/{c.end} rob={c.count} wait_q={c.wait_q} "
                         f"granted={c.granted} head_ready={c.rob[c.head] if c.count else None}")
        for ch in self.chans:
            lines.append(f"channel {ch.idx}: rq={ch.nr} wq={ch.nw} res=[{ch.res[0]}, {ch.res[1]}] "
                         f"credits={ch.credits} accesses={ch.n_acc} open={ch.n_open} "
                         f"ids={ch.n_ids} returns={ch.rq_n}")
        return "\n".join(lines)

    # ------------------------------------------------------------------ results

    def results(self):
        c: Core
        ch: Channel
        k: cython.int
        i: cython.int
        commit, committed, stalls = [], [], []
        for c in self.cores:
            commit.append(c.last_commit)
            committed.append(c.committed)
            stalls.append(c.stall_cycles)
        per_ch = {name: [] for name in ("n_act", "n_rd", "n_wr", "n_pre", "n_ref", "mc_busy_ps",
                                        "bs_busy_ps", "drain_entries", "drain_clear_max")}
        logs = []
        for ch in self.chans:
            per_ch["n_act"].append(ch.n_act)
            per_ch["n_rd"].append(ch.n_rd)
            per_ch["n_wr"].append(ch.n_wr)
            per_ch["n_pre"].append(ch.n_pre)
            per_ch["n_ref"].append(ch.n_ref)
            per_ch["mc_busy_ps"].append(ch.mc_busy)
            per_ch["bs_busy_ps"].append(ch.bs_busy)
            per_ch["drain_entries"].append(ch.drain_entries)
            per_ch["drain_clear_max"].append(ch.drain_clear_max)
            if ch.cmd_log is not None:
                logs.append([a.tolist() for a in ch.cmd_log])
        seg = [[self.seg[k * N_SEG + i] for i in range(N_SEG)] for k in range(2)]
        pk = [[self.pk[6 * k + i] for i in range(6)] for k in range(3)]
        out = {
            "end_time_ps": self.end_time,
            "events": self.iters,
            "sched_ticks": self.n_ticks,
            "commit_ps": commit,
            "committed": committed,
            "stall_cycles": stalls,
            "requests": self.n_reqs,
            "reads": self.n_reads,
            "writes": self.n_writes,
            "useful_bytes": self.useful,
            "seg_sum": seg,
            "seg_count": [self.seg_n[0], self.seg_n[1]],
            "max_queue_mc_ps": self.max_qmc,
            "packets": pk,
            "comp_raw": self.comp_raw,
            "comp_packed": self.comp_packed,
            "comp_packets": self.comp_packets,
        }
        out.update(per_ch)
        if logs:
            out["cmd_log"] = logs
        return out
