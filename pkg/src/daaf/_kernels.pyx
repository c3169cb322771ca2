# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled replication kernels for the hot per-step simulation loops.

Each kernel mirrors its pure-Python counterpart draw for draw and operation
for operation against the same PCG64 bit stream, so both backends produce
bit-identical trajectories.  The uniform-draw protocol is documented in
``delays.py``; change it there and here in lockstep or the cross-backend
equality tests will fail.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport ceil, cos, floor, log, log1p, sqrt
from libc.stdint cimport int32_t, int64_t, int8_t
from numpy.random cimport bitgen_t

cnp.import_array()

cdef double _TWO_PI = 6.283185307179586
cdef const char* _CAPSULE_NAME = "BitGenerator"
cdef double _NEG_INF = -np.inf

# placeholder buffer bound to the arms view when recording is off; never written
_UNUSED_I32 = np.zeros(1, dtype=np.int32)


cdef bitgen_t* _get_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, _CAPSULE_NAME):
        raise ValueError("expected a numpy BitGenerator")
    return <bitgen_t*> PyCapsule_GetPointer(capsule, _CAPSULE_NAME)


cdef inline int64_t _draw_delay(bitgen_t* bg, int kind, double a, double b) noexcept nogil:
    cdef double u, u2, x
    if kind == 0:  # constant
        return <int64_t> a
    u = bg.next_double(bg.state)
    if kind == 1:  # uniform integer on {0..d}
        x = floor(u * (a + 1.0))
        if x > a:
            x = a
        return <int64_t> x
    if kind == 2:  # geometric on {0,1,...}
        if a >= 1.0:
            return 0
        return <int64_t> floor(log1p(-u) / log1p(-a))
    if kind == 3:  # exponential with rate a, ceiled
        return <int64_t> ceil(-log1p(-u) / a)
    # kind 4: normal(a, b^2), rejected below zero, ceiled
    while True:
        u2 = bg.next_double(bg.state)
        x = a + b * (sqrt(-2.0 * log1p(-u)) * cos(_TWO_PI * u2))
        if x >= 0.0:
            return <int64_t> ceil(x)
        u = bg.next_double(bg.state)


def uniform_probe(Py_ssize_t n, object bit_generator):
    """Raw next_double draws; test hook for stream-identity checks."""
    cdef bitgen_t* bg = _get_bitgen(bit_generator)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = bg.next_double(bg.state)
    return out


def delay_samples(int kind, double a, double b, Py_ssize_t n, object bit_generator):
    """Batch delay draws via the shared protocol."""
    cdef bitgen_t* bg = _get_bitgen(bit_generator)
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            o[i] = _draw_delay(bg, kind, a, b)
    return out


cdef inline int _ucb1_argmax(int64_t t, int64_t* counts, double* sums, int n_arms) noexcept nogil:
    cdef int j, best_j
    cdef double best, index
    for j in range(n_arms):
        if counts[j] == 0:
            return j
    best = _NEG_INF
    best_j = 0
    for j in range(n_arms):
        index = sums[j] / counts[j] + sqrt(2.0 * log(<double> t) / <double> counts[j])
        if index > best:
            best = index
            best_j = j
    return best_j


def odaaf_replication(
    double[::1] means,
    double[::1] gaps,
    int delay_kind,
    double delay_a,
    double delay_b,
    int64_t horizon,
    object bit_generator,
    int64_t[::1] schedule,
    bint bridge_enabled,
    bint bridge_leader_rule,
    int64_t[::1] checkpoints,
    bint record_arms,
):
    """Full seeded run of the elimination policy against the aggregated env.

    After commitment every remaining round plays the committed arm, so the
    simulation stops and the regret tail is extrapolated exactly.
    """
    cdef bitgen_t* bg = _get_bitgen(bit_generator)
    cdef int n_arms = means.shape[0]
    cdef int64_t T = horizon
    cdef Py_ssize_t sched_len = schedule.shape[0]
    cdef Py_ssize_t n_ckpt = checkpoints.shape[0]

    pending_np = np.zeros(T + 2, dtype=np.float64)
    out_np = np.empty(n_ckpt, dtype=np.float64)
    arms_np = np.zeros(T + 1, dtype=np.int32) if record_arms else None

    # per-(phase, arm) rows and per-phase records for the trace
    cdef Py_ssize_t max_rows = max(sched_len * n_arms, 1)
    cdef Py_ssize_t max_ph = max(sched_len, 1)
    row_m_np = np.zeros(max_rows, dtype=np.int64)
    row_arm_np = np.zeros(max_rows, dtype=np.int64)
    row_xbar_np = np.zeros(max_rows, dtype=np.float64)
    row_elim_np = np.zeros(max_rows, dtype=np.int8)
    row_bs_np = np.zeros(max_rows, dtype=np.int64)
    row_be_np = np.zeros(max_rows, dtype=np.int64)
    ph_m_np = np.zeros(max_ph, dtype=np.int64)
    ph_nm_np = np.zeros(max_ph, dtype=np.int64)
    ph_start_np = np.zeros(max_ph, dtype=np.int64)
    ph_end_np = np.zeros(max_ph, dtype=np.int64)
    ph_bridge_arm_np = np.full(max_ph, -1, dtype=np.int64)
    ph_bridge_start_np = np.zeros(max_ph, dtype=np.int64)
    ph_bridge_end_np = np.zeros(max_ph, dtype=np.int64)

    cdef double[::1] pending = pending_np
    cdef double[::1] out = out_np
    cdef int32_t[::1] arms = arms_np if record_arms else _UNUSED_I32
    cdef int64_t[::1] row_m = row_m_np
    cdef int64_t[::1] row_arm = row_arm_np
    cdef double[::1] row_xbar = row_xbar_np
    cdef int8_t[::1] row_elim = row_elim_np
    cdef int64_t[::1] row_bs = row_bs_np
    cdef int64_t[::1] row_be = row_be_np
    cdef int64_t[::1] ph_m = ph_m_np
    cdef int64_t[::1] ph_nm = ph_nm_np
    cdef int64_t[::1] ph_start = ph_start_np
    cdef int64_t[::1] ph_end = ph_end_np
    cdef int64_t[::1] ph_bridge_arm = ph_bridge_arm_np
    cdef int64_t[::1] ph_bridge_start = ph_bridge_start_np
    cdef int64_t[::1] ph_bridge_end = ph_bridge_end_np

    active_np = np.arange(n_arms, dtype=np.int64)
    scratch_np = np.zeros(n_arms, dtype=np.int64)
    sums_np = np.zeros(n_arms, dtype=np.float64)
    xbar_np = np.zeros(n_arms, dtype=np.float64)
    block_s_np = np.zeros(n_arms, dtype=np.int64)
    block_e_np = np.zeros(n_arms, dtype=np.int64)
    cdef int64_t[::1] active = active_np
    cdef int64_t[::1] scratch = scratch_np
    cdef double[::1] sums = sums_np
    cdef double[::1] xbar = xbar_np
    cdef int64_t[::1] block_s = block_s_np
    cdef int64_t[::1] block_e = block_e_np

    cdef int n_active = n_arms
    cdef int mode  # 0 play, 1 bridge, 2 commit
    cdef int64_t m = 1
    cdef double tolerance = 0.5
    cdef int64_t nu = schedule[0] if sched_len > 0 else 0
    cdef int64_t left = nu
    cdef int pos = 0
    cdef int64_t bridge_left = 0
    cdef int64_t bridge_arm = -1
    cdef int64_t committed_arm = -1
    cdef int64_t commit_round = -1
    cdef int64_t phase_start_t = 0
    cdef int64_t block_start_t = 0
    cdef Py_ssize_t n_rows = 0, n_ph = 0, ci = 0
    cdef int64_t t = 0, tau, arrive, n_m, n_next, old_nu
    cdef int64_t arm, j, leader
    cdef int i, new_cnt
    cdef double u, r, x, regret = 0.0, generated = 0.0, observed = 0.0, beyond = 0.0
    cdef double best, xb, g
    cdef double final_regret

    if sched_len == 0:
        mode = 2
        committed_arm = 0
        commit_round = 0
    else:
        mode = 0

    while t < T:
        if mode == 2:
            break
        t += 1
        # select
        arm = bridge_arm if mode == 1 else active[pos]
        # environment step (aggregated)
        u = bg.next_double(bg.state)
        r = 1.0 if u < means[arm] else 0.0
        tau = _draw_delay(bg, delay_kind, delay_a, delay_b)
        arrive = t + tau
        if arrive <= T:
            pending[arrive] += r
        else:
            beyond += r
        x = pending[t]
        pending[t] = 0.0
        generated += r
        observed += x
        regret += gaps[arm]
        if record_arms:
            arms[t] = <int32_t> arm
        while ci < n_ckpt and checkpoints[ci] == t:
            out[ci] = regret
            ci += 1
        # observe
        if mode == 1:
            if ph_bridge_start[n_ph - 1] == 0:
                ph_bridge_start[n_ph - 1] = t
            ph_bridge_end[n_ph - 1] = t
            ph_end[n_ph - 1] = t
            bridge_left -= 1
            if bridge_left == 0:
                mode = 0
            continue
        if phase_start_t == 0:
            phase_start_t = t
        if block_start_t == 0:
            block_start_t = t
        sums[arm] += x
        left -= 1
        if left != 0:
            continue
        block_s[arm] = block_start_t
        block_e[arm] = t
        block_start_t = 0
        pos += 1
        if pos < n_active:
            left = nu
            continue
        # phase end: eliminate, halve tolerance, plan the next phase
        n_m = schedule[m - 1]
        best = _NEG_INF
        leader = -1
        for i in range(n_active):
            j = active[i]
            xb = sums[j] / n_m
            xbar[j] = xb
            if xb > best:
                best = xb
                leader = j
        new_cnt = 0
        for i in range(n_active):
            j = active[i]
            xb = xbar[j]
            row_m[n_rows] = m
            row_arm[n_rows] = j
            row_xbar[n_rows] = xb
            row_bs[n_rows] = block_s[j]
            row_be[n_rows] = block_e[j]
            if xb + tolerance < best:
                row_elim[n_rows] = 1
            else:
                row_elim[n_rows] = 0
                scratch[new_cnt] = j
                new_cnt += 1
            n_rows += 1
        ph_m[n_ph] = m
        ph_nm[n_ph] = n_m
        ph_start[n_ph] = phase_start_t
        ph_end[n_ph] = t
        n_ph += 1
        phase_start_t = 0
        old_nu = nu
        tolerance *= 0.5
        m += 1
        for i in range(new_cnt):
            active[i] = scratch[i]
        n_active = new_cnt
        if n_active == 1 or m > sched_len:
            committed_arm = leader
            commit_round = t
            mode = 2
            continue
        n_next = schedule[m - 1]
        nu = n_next - n_m
        pos = 0
        left = nu
        if bridge_enabled and old_nu > 0:
            bridge_arm = leader if bridge_leader_rule else active[0]
            ph_bridge_arm[n_ph - 1] = bridge_arm
            bridge_left = old_nu
            mode = 1

    if mode == 2:
        # exact tail: every remaining round plays the committed arm
        g = gaps[committed_arm]
        while ci < n_ckpt:
            out[ci] = regret + g * <double> (checkpoints[ci] - t)
            ci += 1
        final_regret = regret + g * <double> (T - t)
        if record_arms:
            for tau in range(t + 1, T + 1):
                arms[tau] = <int32_t> committed_arm
    else:
        final_regret = regret

    cdef double pending_mass = beyond
    for tau in range(1, T + 2):
        pending_mass += pending[tau]

    return {
        "checkpoint_regret": out_np,
        "final_regret": final_regret,
        "arms": arms_np,
        "generated": generated,
        "observed": observed,
        "pending": pending_mass,
        "sim_rounds": t,
        "trace": {
            "row_m": row_m_np[:n_rows],
            "row_arm": row_arm_np[:n_rows],
            "row_xbar": row_xbar_np[:n_rows],
            "row_elim": row_elim_np[:n_rows],
            "row_block_start": row_bs_np[:n_rows],
            "row_block_end": row_be_np[:n_rows],
            "ph_m": ph_m_np[:n_ph],
            "ph_nm": ph_nm_np[:n_ph],
            "ph_start": ph_start_np[:n_ph],
            "ph_end": ph_end_np[:n_ph],
            "ph_bridge_arm": ph_bridge_arm_np[:n_ph],
            "ph_bridge_start": ph_bridge_start_np[:n_ph],
            "ph_bridge_end": ph_bridge_end_np[:n_ph],
            "committed_arm": committed_arm,
            "commit_round": commit_round,
        },
    }


def ucb1_replication(
    double[::1] means,
    double[::1] gaps,
    int delay_kind,
    double delay_a,
    double delay_b,
    int64_t horizon,
    object bit_generator,
    int64_t[::1] checkpoints,
    bint record_arms,
):
    """UCB1 crediting each round's aggregated observation to the played arm."""
    cdef bitgen_t* bg = _get_bitgen(bit_generator)
    cdef int n_arms = means.shape[0]
    cdef int64_t T = horizon
    cdef Py_ssize_t n_ckpt = checkpoints.shape[0]

    pending_np = np.zeros(T + 2, dtype=np.float64)
    out_np = np.empty(n_ckpt, dtype=np.float64)
    arms_np = np.zeros(T + 1, dtype=np.int32) if record_arms else None
    counts_np = np.zeros(n_arms, dtype=np.int64)
    sums_np = np.zeros(n_arms, dtype=np.float64)

    cdef double[::1] pending = pending_np
    cdef double[::1] out = out_np
    cdef int32_t[::1] arms = arms_np if record_arms else _UNUSED_I32
    cdef int64_t[::1] counts = counts_np
    cdef double[::1] sums = sums_np

    cdef Py_ssize_t ci = 0
    cdef int64_t t = 0, tau, arrive
    cdef int arm
    cdef double u, r, x, regret = 0.0, generated = 0.0, observed = 0.0, beyond = 0.0

    while t < T:
        t += 1
        arm = _ucb1_argmax(t, &counts[0], &sums[0], n_arms)
        u = bg.next_double(bg.state)
        r = 1.0 if u < means[arm] else 0.0
        tau = _draw_delay(bg, delay_kind, delay_a, delay_b)
        arrive = t + tau
        if arrive <= T:
            pending[arrive] += r
        else:
            beyond += r
        x = pending[t]
        pending[t] = 0.0
        generated += r
        observed += x
        regret += gaps[arm]
        if record_arms:
            arms[t] = <int32_t> arm
        while ci < n_ckpt and checkpoints[ci] == t:
            out[ci] = regret
            ci += 1
        counts[arm] += 1
        sums[arm] += x

    cdef double pending_mass = beyond
    for tau in range(1, T + 2):
        pending_mass += pending[tau]

    return {
        "checkpoint_regret": out_np,
        "final_regret": regret,
        "arms": arms_np,
        "generated": generated,
        "observed": observed,
        "pending": pending_mass,
        "sim_rounds": t,
        "trace": None,
    }


def qpmd_replication(
    double[::1] means,
    double[::1] gaps,
    int delay_kind,
    double delay_a,
    double delay_b,
    int64_t horizon,
    object bit_generator,
    int64_t[::1] checkpoints,
    bint record_arms,
):
    """Queue-based baseline against the labeled environment."""
    cdef bitgen_t* bg = _get_bitgen(bit_generator)
    cdef int n_arms = means.shape[0]
    cdef int64_t T = horizon
    cdef Py_ssize_t n_ckpt = checkpoints.shape[0]

    out_np = np.empty(n_ckpt, dtype=np.float64)
    arms_np = np.zeros(T + 1, dtype=np.int32) if record_arms else None
    # labeled pending calendar: LIFO chains by arrival round over play indexes
    head_np = np.full(T + 2, -1, dtype=np.int64)
    nxt_np = np.zeros(T + 1, dtype=np.int64)
    rarm_np = np.zeros(T + 1, dtype=np.int32)
    rval_np = np.zeros(T + 1, dtype=np.float64)
    buf_np = np.zeros(T + 1, dtype=np.int64)
    # per-arm FIFO reward queues
    qbuf_np = np.zeros((n_arms, T + 1), dtype=np.float64)
    qhead_np = np.zeros(n_arms, dtype=np.int64)
    qtail_np = np.zeros(n_arms, dtype=np.int64)
    counts_np = np.zeros(n_arms, dtype=np.int64)
    sums_np = np.zeros(n_arms, dtype=np.float64)

    cdef double[::1] out = out_np
    cdef int32_t[::1] arms = arms_np if record_arms else _UNUSED_I32
    cdef int64_t[::1] head = head_np
    cdef int64_t[::1] nxt = nxt_np
    cdef int32_t[::1] rarm = rarm_np
    cdef double[::1] rval = rval_np
    cdef int64_t[::1] buf = buf_np
    cdef double[:, ::1] qbuf = qbuf_np
    cdef int64_t[::1] qhead = qhead_np
    cdef int64_t[::1] qtail = qtail_np
    cdef int64_t[::1] counts = counts_np
    cdef double[::1] sums = sums_np

    cdef Py_ssize_t ci = 0
    cdef int64_t t = 0, tau, arrive, idx, base_steps = 0, nb, bi
    cdef int arm, a, desired = 0
    cdef double u, r, v, regret = 0.0, generated = 0.0, observed = 0.0, beyond = 0.0

    while t < T:
        t += 1
        arm = desired
        u = bg.next_double(bg.state)
        r = 1.0 if u < means[arm] else 0.0
        tau = _draw_delay(bg, delay_kind, delay_a, delay_b)
        arrive = t + tau
        if arrive <= T:
            nxt[t] = head[arrive]
            head[arrive] = t
            rarm[t] = <int32_t> arm
            rval[t] = r
        else:
            beyond += r
        generated += r
        regret += gaps[arm]
        if record_arms:
            arms[t] = <int32_t> arm
        while ci < n_ckpt and checkpoints[ci] == t:
            out[ci] = regret
            ci += 1
        # enqueue this round's arrivals in play order (chain is reversed)
        nb = 0
        idx = head[t]
        while idx != -1:
            buf[nb] = idx
            nb += 1
            idx = nxt[idx]
        for bi in range(nb - 1, -1, -1):
            idx = buf[bi]
            a = rarm[idx]
            v = rval[idx]
            qbuf[a, qtail[a]] = v
            qtail[a] += 1
            observed += v
        # feed the base one queued reward at a time
        while qtail[desired] > qhead[desired]:
            a = desired
            v = qbuf[a, qhead[a]]
            qhead[a] += 1
            counts[a] += 1
            sums[a] += v
            base_steps += 1
            desired = _ucb1_argmax(base_steps + 1, &counts[0], &sums[0], n_arms)

    cdef double pending_mass = beyond
    for arrive in range(t + 1, T + 2):
        idx = head[arrive]
        while idx != -1:
            pending_mass += rval[idx]
            idx = nxt[idx]

    return {
        "checkpoint_regret": out_np,
        "final_regret": regret,
        "arms": arms_np,
        "generated": generated,
        "observed": observed,
        "pending": pending_mass,
        "sim_rounds": t,
        "trace": None,
    }
