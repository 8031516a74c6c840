# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled engine backend.

A line-for-line C++ translation of ``restartq.engine._pure``: identical
random-stream discipline (splitmix64 + inverse-CCDF, one uniform per
variate) and identical floating-point expression order, so results match
the pure backend bit for bit.  Built with -ffp-contract=off to keep FMA
contraction from perturbing that equivalence.
"""

from libc.math cimport log1p, nextafter, pow, INFINITY, NAN
from libcpp.vector cimport vector

import numpy as np

from .types import EngineError

BACKEND_NAME = "kernel"

ctypedef unsigned long long u64

cdef double U53 = 1.0 / 9007199254740992.0
cdef double REL_TOL = 1e-12
# event times round to ulp(t); the departure threshold absorbs that residue
cdef double T_EPS = 1.0 / 1125899906842624.0
cdef u64 GOLDEN = <u64> 0x9E3779B97F4A7C15
cdef u64 STREAM_TWEAK = <u64> 0x9E3779B97F4A7C15
cdef u64 DERIVE_TWEAK = <u64> 0xD1B54A32D192ED03

cdef long STREAM_SIZES = 3
cdef long STREAM_FAILURES = 4

cdef int KIND_FCFS = 0
cdef int KIND_PS = 1
cdef int KIND_DPS = 2
cdef int KIND_FCFS_IDLE = 3
cdef int KIND_PS_IDLE = 4


cdef inline u64 mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * (<u64> 0xBF58476D1CE4E5B9)
    z = (z ^ (z >> 27)) * (<u64> 0x94D049BB133111EB)
    return z ^ (z >> 31)


cdef inline u64 stream_state(u64 seed, u64 stream_id) nogil:
    return mix64(mix64(seed) ^ mix64(stream_id + STREAM_TWEAK))


cdef inline u64 derive_seed(u64 seed, u64 index) nogil:
    return mix64(mix64(seed) ^ mix64(index + DERIVE_TWEAK))


cdef struct Stream:
    u64 state


cdef inline double next_float(Stream* s) nogil:
    cdef u64 z
    s.state = s.state + GOLDEN
    z = mix64(s.state)
    return (<double> (z >> 11) + 0.5) * U53


cdef inline double inv_ccdf(int fam, double a, double b, double u) nogil:
    if fam == 0:
        return a
    elif fam == 1:
        return -log1p(-u) / a
    elif fam == 2:
        return a * pow(-log1p(-u), 1.0 / b)
    elif fam == 3:
        return a * pow(1.0 - u, -1.0 / b)
    return a + (b - a) * u


cdef inline long class_from_u(double* cum, long ncls, double u) nogil:
    cdef long k
    for k in range(ncls):
        if u <= cum[k]:
            return k
    return ncls - 1


cdef struct GapSrc:
    int fam
    double a
    double b
    Stream stream
    bint use_tape
    vector[double]* tape
    size_t idx


cdef inline double gap_next(GapSrc* g) nogil:
    cdef double v
    if not g.use_tape:
        return inv_ccdf(g.fam, g.a, g.b, next_float(&g.stream))
    if g.idx == g.tape.size():
        g.tape.push_back(inv_ccdf(g.fam, g.a, g.b, next_float(&g.stream)))
    v = g.tape[0][g.idx]
    g.idx += 1
    return v


cdef struct LoopOut:
    long n_arrivals
    long n_departures
    long n_drops
    long n_failures
    long final_queue
    long departures_at_last
    long queue_after_last
    long events
    double served_time
    double last_departure_time
    double end_time
    double next_failure
    bint truncated


cdef int _loop(
    int policy_kind,
    double* weights,
    bint steady,
    int arr_fam, double arr_a, double arr_b, Stream* arr_s,
    int size_fam, double size_a, double size_b, Stream* size_s,
    double* class_cum, long ncls, Stream* class_s,
    double first_gap, GapSrc* gaps,
    double horizon, long queue_cap, long trace_stride, long max_events,
    double* init_sizes, long* init_classes, long n_init,
    vector[double]* traj_t, vector[long]* traj_q,
    vector[long]* traj_d, vector[long]* traj_drops,
    vector[long]* rec_id, vector[long]* rec_cls, vector[double]* rec_size,
    vector[double]* rec_arr, vector[double]* rec_dep, vector[long]* rec_restarts,
    LoopOut* out,
) except -1:
    cdef bint fcfs_like = policy_kind == KIND_FCFS or policy_kind == KIND_FCFS_IDLE
    cdef bint ps_like = policy_kind == KIND_PS or policy_kind == KIND_PS_IDLE
    cdef bint idle_variant = policy_kind == KIND_FCFS_IDLE or policy_kind == KIND_PS_IDLE
    cdef bint ps_idle = policy_kind == KIND_PS_IDLE

    cdef vector[double] size, r, arr_t
    cdef vector[long] cls, restarts, jid, active, new_active

    cdef long k
    for k in range(n_init):
        size.push_back(init_sizes[k])
        cls.push_back(init_classes[k])
        r.push_back(init_sizes[k])
        arr_t.push_back(0.0)
        restarts.push_back(0)
        jid.push_back(k)
        active.push_back(k)

    cdef double t = 0.0
    cdef double next_failure = first_gap
    cdef double next_arrival
    if steady:
        next_arrival = t + inv_ccdf(arr_fam, arr_a, arr_b, next_float(arr_s))
    else:
        next_arrival = INFINITY

    cdef long n_arrivals = n_init
    cdef long n_departures = 0
    cdef long n_drops = 0
    cdef long n_failures = 0
    cdef double served_time = 0.0
    cdef double last_departure_time = 0.0
    cdef long departures_at_last = 0
    cdef long queue_after_last = 0
    cdef bint idle = False
    cdef long event_count = 0
    cdef bint truncated = False

    traj_t.push_back(0.0)
    traj_q.push_back(<long> active.size())
    traj_d.push_back(0)
    traj_drops.push_back(0)

    cdef long q, i, j, c, ev
    cdef double t_complete, tn, dt, rmin, wsum, dt_min, cand, share, factor, u, b
    cdef bint departed

    while True:
        if (not steady) and active.size() == 0:
            break
        q = <long> active.size()

        # earliest completion under constant rates
        if idle or q == 0:
            t_complete = INFINITY
        elif fcfs_like:
            t_complete = t + r[active[0]]
        elif ps_like:
            rmin = r[active[0]]
            for j in range(q):
                i = active[j]
                if r[i] < rmin:
                    rmin = r[i]
            t_complete = t + rmin * q
        else:
            wsum = 0.0
            for j in range(q):
                wsum += weights[cls[active[j]]]
            dt_min = r[active[0]] * wsum / weights[cls[active[0]]]
            for j in range(q):
                i = active[j]
                cand = r[i] * wsum / weights[cls[i]]
                if cand < dt_min:
                    dt_min = cand
            t_complete = t + dt_min
        # a residual below half an ulp of the clock must still advance time,
        # or the due job would never accrue its last sliver of work
        if t_complete == t:
            t_complete = nextafter(t, INFINITY)

        if next_failure <= t_complete and next_failure <= next_arrival:
            ev = 0
            tn = next_failure
        elif t_complete <= next_arrival:
            ev = 1
            tn = t_complete
        else:
            ev = 2
            tn = next_arrival

        if steady and tn > horizon:
            if q > 0 and not idle:
                served_time += horizon - t
            t = horizon
            break

        # accrue service over (t, tn)
        dt = tn - t
        if dt > 0.0 and q > 0 and not idle:
            served_time += dt
            if fcfs_like:
                r[active[0]] -= dt
            elif ps_like:
                share = dt / q
                for j in range(q):
                    r[active[j]] -= share
            else:
                wsum = 0.0
                for j in range(q):
                    wsum += weights[cls[active[j]]]
                factor = dt / wsum
                for j in range(q):
                    i = active[j]
                    r[i] -= factor * weights[cls[i]]
        t = tn

        if ev == 0:
            n_failures += 1
            for j in range(q):
                i = active[j]
                if r[i] != size[i]:
                    restarts[i] += 1
                    r[i] = size[i]
            next_failure = t + gap_next(gaps)
            idle = False
        elif ev == 1:
            departed = False
            new_active.clear()
            for j in range(q):
                i = active[j]
                if (not (ps_idle and departed)) and r[i] <= REL_TOL * size[i] + T_EPS * t:
                    rec_id.push_back(jid[i])
                    rec_cls.push_back(cls[i])
                    rec_size.push_back(size[i])
                    rec_arr.push_back(arr_t[i])
                    rec_dep.push_back(t)
                    rec_restarts.push_back(restarts[i] + 1)
                    n_departures += 1
                    departed = True
                else:
                    new_active.push_back(i)
            if not departed:
                raise EngineError("completion event produced no departure")
            active.swap(new_active)
            last_departure_time = t
            departures_at_last = n_departures
            queue_after_last = <long> active.size()
            if idle_variant:
                idle = True
        else:
            n_arrivals += 1
            u = next_float(class_s)
            c = class_from_u(class_cum, ncls, u)
            b = inv_ccdf(size_fam, size_a, size_b, next_float(size_s))
            if queue_cap > 0 and q >= queue_cap:
                n_drops += 1
            else:
                size.push_back(b)
                cls.push_back(c)
                r.push_back(b)
                arr_t.push_back(t)
                restarts.push_back(0)
                jid.push_back(n_arrivals - 1)
                active.push_back(<long> size.size() - 1)
            next_arrival = t + inv_ccdf(arr_fam, arr_a, arr_b, next_float(arr_s))

        event_count += 1
        if event_count % trace_stride == 0:
            traj_t.push_back(t)
            traj_q.push_back(<long> active.size())
            traj_d.push_back(n_departures)
            traj_drops.push_back(n_drops)
        if max_events > 0 and event_count >= max_events:
            truncated = True
            break

    traj_t.push_back(t)
    traj_q.push_back(<long> active.size())
    traj_d.push_back(n_departures)
    traj_drops.push_back(n_drops)

    out.n_arrivals = n_arrivals
    out.n_departures = n_departures
    out.n_drops = n_drops
    out.n_failures = n_failures
    out.final_queue = <long> active.size()
    out.departures_at_last = departures_at_last
    out.queue_after_last = queue_after_last
    out.events = event_count
    out.served_time = served_time
    out.last_departure_time = last_departure_time
    out.end_time = t
    out.next_failure = next_failure
    out.truncated = truncated
    return 0


cdef object _vec_d(vector[double]* v):
    cdef object arr = np.empty(v.size(), dtype=np.float64)
    cdef double[::1] mv = arr
    cdef size_t i
    for i in range(v.size()):
        mv[i] = v[0][i]
    return arr


cdef object _vec_l(vector[long]* v):
    cdef object arr = np.empty(v.size(), dtype=np.int64)
    cdef long[::1] mv = arr
    cdef size_t i
    for i in range(v.size()):
        mv[i] = v[0][i]
    return arr


cdef dict _raw_dict(
    LoopOut* out,
    vector[double]* traj_t, vector[long]* traj_q,
    vector[long]* traj_d, vector[long]* traj_drops,
    vector[long]* rec_id, vector[long]* rec_cls, vector[double]* rec_size,
    vector[double]* rec_arr, vector[double]* rec_dep, vector[long]* rec_restarts,
):
    return {
        "traj_t": _vec_d(traj_t),
        "traj_q": _vec_l(traj_q),
        "traj_d": _vec_l(traj_d),
        "traj_drops": _vec_l(traj_drops),
        "arrivals": out.n_arrivals,
        "departures": out.n_departures,
        "drops": out.n_drops,
        "failures": out.n_failures,
        "final_queue": out.final_queue,
        "served_time": out.served_time,
        "last_departure_time": out.last_departure_time,
        "departures_at_last": out.departures_at_last,
        "queue_after_last": out.queue_after_last,
        "truncated": bool(out.truncated),
        "events": out.events,
        "end_time": out.end_time,
        "next_failure": out.next_failure,
        "job_id": _vec_l(rec_id),
        "job_class": _vec_l(rec_cls),
        "job_size": _vec_d(rec_size),
        "job_arrival": _vec_d(rec_arr),
        "job_departure": _vec_d(rec_dep),
        "job_restarts": _vec_l(rec_restarts),
    }


def sim_run(
    int policy_kind,
    double[::1] weights,
    int arr_family, double arr_a, double arr_b,
    int size_family, double size_a, double size_b,
    double[::1] class_cum,
    int fail_family, double fail_a, double fail_b,
    double first_gap,
    u64 arr_state, u64 class_state, u64 size_state, u64 fail_state,
    double horizon, long queue_cap, long trace_stride, long max_events,
):
    """Steady-state run from packed specs and raw stream states."""
    cdef Stream arr_s, class_s, size_s
    arr_s.state = arr_state
    class_s.state = class_state
    size_s.state = size_state
    cdef GapSrc gaps
    gaps.fam = fail_family
    gaps.a = fail_a
    gaps.b = fail_b
    gaps.stream.state = fail_state
    gaps.use_tape = False
    gaps.tape = NULL
    gaps.idx = 0

    cdef vector[double] traj_t, rec_size, rec_arr, rec_dep
    cdef vector[long] traj_q, traj_d, traj_drops, rec_id, rec_cls, rec_restarts
    cdef LoopOut out
    _loop(
        policy_kind, &weights[0], True,
        arr_family, arr_a, arr_b, &arr_s,
        size_family, size_a, size_b, &size_s,
        &class_cum[0], <long> class_cum.shape[0], &class_s,
        first_gap, &gaps,
        horizon, queue_cap, trace_stride, max_events,
        NULL, NULL, 0,
        &traj_t, &traj_q, &traj_d, &traj_drops,
        &rec_id, &rec_cls, &rec_size, &rec_arr, &rec_dep, &rec_restarts,
        &out,
    )
    return _raw_dict(&out, &traj_t, &traj_q, &traj_d, &traj_drops,
                     &rec_id, &rec_cls, &rec_size, &rec_arr, &rec_dep, &rec_restarts)


def transient_run(
    int policy_kind,
    double[::1] weights,
    double[::1] sizes,
    long[::1] classes,
    int fail_family, double fail_a, double fail_b,
    double first_gap,
    u64 fail_state,
    long trace_stride, long max_events,
):
    """Run an initial batch to empty (no arrivals) from packed specs."""
    cdef GapSrc gaps
    gaps.fam = fail_family
    gaps.a = fail_a
    gaps.b = fail_b
    gaps.stream.state = fail_state
    gaps.use_tape = False
    gaps.tape = NULL
    gaps.idx = 0
    cdef double dummy_cum = 1.0

    cdef vector[double] traj_t, rec_size, rec_arr, rec_dep
    cdef vector[long] traj_q, traj_d, traj_drops, rec_id, rec_cls, rec_restarts
    cdef LoopOut out
    _loop(
        policy_kind, &weights[0], False,
        0, 0.0, 0.0, NULL,
        0, 0.0, 0.0, NULL,
        &dummy_cum, 1, NULL,
        first_gap, &gaps,
        0.0, 0, trace_stride, max_events,
        &sizes[0], &classes[0], <long> sizes.shape[0],
        &traj_t, &traj_q, &traj_d, &traj_drops,
        &rec_id, &rec_cls, &rec_size, &rec_arr, &rec_dep, &rec_restarts,
        &out,
    )
    return _raw_dict(&out, &traj_t, &traj_q, &traj_d, &traj_drops,
                     &rec_id, &rec_cls, &rec_size, &rec_arr, &rec_dep, &rec_restarts)


def single_job_batch(
    int size_family, double size_a, double size_b,
    int fail_family, double fail_a, double fail_b,
    long n, u64 seed, long max_attempts,
):
    """n independent single-job runs; returns (restarts, S, S_bar) arrays."""
    out_n = np.empty(n, dtype=np.int64)
    out_s = np.empty(n, dtype=np.float64)
    out_sbar = np.empty(n, dtype=np.float64)
    cdef long[::1] mv_n = out_n
    cdef double[::1] mv_s = out_s
    cdef double[::1] mv_sbar = out_sbar

    cdef Stream size_s, fail_s
    cdef u64 sd
    cdef long i, attempts
    cdef double b, waited, gap
    for i in range(n):
        sd = derive_seed(seed, <u64> i)
        size_s.state = stream_state(sd, <u64> STREAM_SIZES)
        b = inv_ccdf(size_family, size_a, size_b, next_float(&size_s))
        fail_s.state = stream_state(sd, <u64> STREAM_FAILURES)
        waited = 0.0
        attempts = 0
        while True:
            gap = inv_ccdf(fail_family, fail_a, fail_b, next_float(&fail_s))
            attempts += 1
            if gap > b:
                mv_n[i] = attempts
                mv_s[i] = waited + b
                mv_sbar[i] = waited + gap
                break
            waited += gap
            if attempts >= max_attempts:
                raise EngineError(
                    f"job of size {b} not completed after {max_attempts} attempts; "
                    f"is ccdf(failure, size) zero?"
                )
    return out_n, out_s, out_sbar


def transient_theta_batch(
    int policy_kind,
    double[::1] weights,
    long m,
    int size_family, double size_a, double size_b,
    int fail_family, double fail_a, double fail_b,
    long n, u64 seed, long max_events,
):
    """n transient completions of batches of m i.i.d. jobs; single class."""
    theta = np.empty(n, dtype=np.float64)
    trunc = np.zeros(n, dtype=np.uint8)
    cdef double[::1] mv_theta = theta
    cdef unsigned char[::1] mv_trunc = trunc

    cdef vector[double] sizes
    cdef vector[long] classes
    cdef long k
    sizes.resize(m)
    classes.resize(m)
    for k in range(m):
        classes[k] = 0

    cdef Stream size_s
    cdef GapSrc gaps
    gaps.fam = fail_family
    gaps.a = fail_a
    gaps.b = fail_b
    gaps.use_tape = False
    gaps.tape = NULL
    gaps.idx = 0
    cdef double dummy_cum = 1.0
    cdef double first_gap
    cdef u64 sd
    cdef long i
    cdef LoopOut out
    cdef vector[double] traj_t, rec_size, rec_arr, rec_dep
    cdef vector[long] traj_q, traj_d, traj_drops, rec_id, rec_cls, rec_restarts

    for i in range(n):
        sd = derive_seed(seed, <u64> i)
        size_s.state = stream_state(sd, <u64> STREAM_SIZES)
        for k in range(m):
            sizes[k] = inv_ccdf(size_family, size_a, size_b, next_float(&size_s))
        gaps.stream.state = stream_state(sd, <u64> STREAM_FAILURES)
        first_gap = inv_ccdf(fail_family, fail_a, fail_b, next_float(&gaps.stream))
        traj_t.clear(); traj_q.clear(); traj_d.clear(); traj_drops.clear()
        rec_id.clear(); rec_cls.clear(); rec_size.clear()
        rec_arr.clear(); rec_dep.clear(); rec_restarts.clear()
        _loop(
            policy_kind, &weights[0], False,
            0, 0.0, 0.0, NULL,
            0, 0.0, 0.0, NULL,
            &dummy_cum, 1, NULL,
            first_gap, &gaps,
            0.0, 0, <long> 1 << 62, max_events,
            &sizes[0], &classes[0], m,
            &traj_t, &traj_q, &traj_d, &traj_drops,
            &rec_id, &rec_cls, &rec_size, &rec_arr, &rec_dep, &rec_restarts,
            &out,
        )
        if out.truncated:
            mv_theta[i] = NAN
            mv_trunc[i] = 1
        else:
            mv_theta[i] = out.last_departure_time
    return theta, trunc


def coupled_bound_batch(
    int base_kind,
    long m,
    int size_family, double size_a, double size_b,
    int fail_family, double fail_a, double fail_b,
    long n, u64 seed, long max_events,
):
    """n coupled (plain, idle-variant) pairs on identical failure paths."""
    theta = np.empty(n, dtype=np.float64)
    bound = np.empty(n, dtype=np.float64)
    trunc = np.zeros(n, dtype=np.uint8)
    cdef double[::1] mv_theta = theta
    cdef double[::1] mv_bound = bound
    cdef unsigned char[::1] mv_trunc = trunc

    cdef int plain_kind = KIND_FCFS if base_kind == 0 else KIND_PS
    cdef int idle_kind = KIND_FCFS_IDLE if base_kind == 0 else KIND_PS_IDLE

    cdef vector[double] sizes, tape
    cdef vector[long] classes
    cdef long k
    sizes.resize(m)
    classes.resize(m)
    for k in range(m):
        classes[k] = 0
    cdef double weights0 = 1.0

    cdef Stream size_s
    cdef GapSrc gaps
    gaps.fam = fail_family
    gaps.a = fail_a
    gaps.b = fail_b
    gaps.use_tape = True
    gaps.tape = &tape
    cdef double dummy_cum = 1.0
    cdef double first_gap
    cdef u64 sd
    cdef long i
    cdef LoopOut out_plain, out_idle
    cdef vector[double] traj_t, rec_size, rec_arr, rec_dep
    cdef vector[long] traj_q, traj_d, traj_drops, rec_id, rec_cls, rec_restarts

    for i in range(n):
        sd = derive_seed(seed, <u64> i)
        size_s.state = stream_state(sd, <u64> STREAM_SIZES)
        for k in range(m):
            sizes[k] = inv_ccdf(size_family, size_a, size_b, next_float(&size_s))
        tape.clear()
        gaps.stream.state = stream_state(sd, <u64> STREAM_FAILURES)
        gaps.idx = 0
        first_gap = gap_next(&gaps)
        traj_t.clear(); traj_q.clear(); traj_d.clear(); traj_drops.clear()
        rec_id.clear(); rec_cls.clear(); rec_size.clear()
        rec_arr.clear(); rec_dep.clear(); rec_restarts.clear()
        _loop(
            plain_kind, &weights0, False,
            0, 0.0, 0.0, NULL, 0, 0.0, 0.0, NULL, &dummy_cum, 1, NULL,
            first_gap, &gaps, 0.0, 0, <long> 1 << 62, max_events,
            &sizes[0], &classes[0], m,
            &traj_t, &traj_q, &traj_d, &traj_drops,
            &rec_id, &rec_cls, &rec_size, &rec_arr, &rec_dep, &rec_restarts,
            &out_plain,
        )
        gaps.idx = 0
        first_gap = gap_next(&gaps)
        traj_t.clear(); traj_q.clear(); traj_d.clear(); traj_drops.clear()
        rec_id.clear(); rec_cls.clear(); rec_size.clear()
        rec_arr.clear(); rec_dep.clear(); rec_restarts.clear()
        _loop(
            idle_kind, &weights0, False,
            0, 0.0, 0.0, NULL, 0, 0.0, 0.0, NULL, &dummy_cum, 1, NULL,
            first_gap, &gaps, 0.0, 0, <long> 1 << 62, max_events,
            &sizes[0], &classes[0], m,
            &traj_t, &traj_q, &traj_d, &traj_drops,
            &rec_id, &rec_cls, &rec_size, &rec_arr, &rec_dep, &rec_restarts,
            &out_idle,
        )
        if out_plain.truncated or out_idle.truncated:
            mv_theta[i] = NAN
            mv_bound[i] = NAN
            mv_trunc[i] = 1
        else:
            mv_theta[i] = out_plain.last_departure_time
            if base_kind == 0:
                mv_bound[i] = out_idle.last_departure_time
            else:
                mv_bound[i] = out_idle.next_failure
    return theta, bound, trunc
