"""Pure-Python engine backend.

Reference implementation of the restart-from-scratch event loop.  The
compiled backend (``_kernel.pyx``) mirrors this file expression for
expression so that both produce bit-identical results from the same
configuration; any change here must be replicated there.

Event loop semantics
--------------------
Between events all service rates are constant, so the next completion is
known in closed form.  Three candidate events compete: the next failure,
the earliest completion, and the next arrival (steady-state mode only).
Ties are broken failure > completion > arrival; simultaneous completions
are processed in ascending job id.  A failure resets every job with
accrued service to its full size (the strict-inequality rule: reaching
zero remaining work exactly at a failure instant does not complete).  A
job departs when its remaining work falls to ``1e-12`` of its size,
absorbing float residue from repeated rate changes.

Randomness discipline (shared with the kernel): one uniform per variate;
arrivals, classes, sizes and failure gaps each consume their own stream.
"""

from __future__ import annotations

import math

import numpy as np

from .. import distributions as dist
from ..rng import (
    RngStream,
    STREAM_CLASSES,
    STREAM_FAILURES,
    STREAM_SIZES,
    derive_seed,
)
from ..workload import class_from_uniform
from .types import (
    EngineError,
    KIND_DPS,
    KIND_FCFS,
    KIND_FCFS_IDLE,
    KIND_PS,
    KIND_PS_IDLE,
)

BACKEND_NAME = "pure"

REL_TOL = 1e-12
# event times round to ulp(t), leaving residues of that order in remaining
# work; the departure threshold must absorb them or a due job could stall
T_EPS = 2.0 ** -50
_INF = math.inf

_EV_FAILURE = 0
_EV_COMPLETION = 1
_EV_ARRIVAL = 2


class GapFeed:
    """Failure-gap source: draws from a stream, optionally recording on a
    shared tape so a second run can replay the identical failure path."""

    __slots__ = ("spec", "stream", "tape", "idx")

    def __init__(self, spec, stream, tape=None):
        self.spec = spec
        self.stream = stream
        self.tape = tape
        self.idx = 0

    def next(self) -> float:
        if self.tape is None:
            return dist.sample(self.spec, self.stream)
        if self.idx == len(self.tape):
            self.tape.append(dist.sample(self.spec, self.stream))
        v = self.tape[self.idx]
        self.idx += 1
        return v

    def rewind(self):
        self.idx = 0


class FixedGaps:
    """Finite, explicit failure-gap sequence; exhausting it is an error."""

    __slots__ = ("gaps", "idx")

    def __init__(self, gaps):
        self.gaps = gaps
        self.idx = 0

    def next(self) -> float:
        if self.idx >= len(self.gaps):
            raise EngineError(
                "failure gap sequence exhausted; supply more gaps or a stream"
            )
        v = self.gaps[self.idx]
        self.idx += 1
        return v


def _run_loop(
    policy_kind,
    weights,
    steady,
    arr_spec,
    size_spec,
    class_cum,
    arr_stream,
    class_stream,
    size_stream,
    first_gap,
    gap_feed,
    horizon,
    queue_cap,
    trace_stride,
    max_events,
    init_sizes,
    init_classes,
):
    fcfs_like = policy_kind == KIND_FCFS or policy_kind == KIND_FCFS_IDLE
    ps_like = policy_kind == KIND_PS or policy_kind == KIND_PS_IDLE
    idle_variant = policy_kind == KIND_FCFS_IDLE or policy_kind == KIND_PS_IDLE
    ps_idle = policy_kind == KIND_PS_IDLE

    # storage index (list position) != external job id once drops occur
    size = list(init_sizes)
    cls = list(init_classes)
    r = list(init_sizes)
    arr_t = [0.0] * len(size)
    restarts = [0] * len(size)
    jid = list(range(len(size)))
    active = list(range(len(size)))

    t = 0.0
    next_failure = first_gap
    next_arrival = (t + dist.sample(arr_spec.interarrival, arr_stream)) if steady else _INF

    n_arrivals = len(size)
    n_departures = 0
    n_drops = 0
    n_failures = 0
    served_time = 0.0
    last_departure_time = 0.0
    departures_at_last = 0
    queue_after_last = 0
    idle = False
    event_count = 0
    truncated = False

    traj_t = [0.0]
    traj_q = [len(active)]
    traj_d = [0]
    traj_drops = [0]

    rec_id, rec_cls, rec_size, rec_arr, rec_dep, rec_restarts = [], [], [], [], [], []

    while True:
        if not steady and not active:
            break
        q = len(active)

        # earliest completion under constant rates
        if idle or q == 0:
            t_complete = _INF
        elif fcfs_like:
            t_complete = t + r[active[0]]
        elif ps_like:
            rmin = r[active[0]]
            for i in active:
                if r[i] < rmin:
                    rmin = r[i]
            t_complete = t + rmin * q
        else:
            wsum = 0.0
            for i in active:
                wsum += weights[cls[i]]
            dt_min = r[active[0]] * wsum / weights[cls[active[0]]]
            for i in active:
                cand = r[i] * wsum / weights[cls[i]]
                if cand < dt_min:
                    dt_min = cand
            t_complete = t + dt_min
        # a residual below half an ulp of the clock must still advance time,
        # or the due job would never accrue its last sliver of work
        if t_complete == t:
            t_complete = math.nextafter(t, _INF)

        if next_failure <= t_complete and next_failure <= next_arrival:
            ev = _EV_FAILURE
            tn = next_failure
        elif t_complete <= next_arrival:
            ev = _EV_COMPLETION
            tn = t_complete
        else:
            ev = _EV_ARRIVAL
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
                for i in active:
                    r[i] -= share
            else:
                wsum = 0.0
                for i in active:
                    wsum += weights[cls[i]]
                factor = dt / wsum
                for i in active:
                    r[i] -= factor * weights[cls[i]]
        t = tn

        if ev == _EV_FAILURE:
            n_failures += 1
            for i in active:
                if r[i] != size[i]:
                    restarts[i] += 1
                    r[i] = size[i]
            next_failure = t + gap_feed.next()
            idle = False
        elif ev == _EV_COMPLETION:
            departed = False
            new_active = []
            for i in active:
                if (not (ps_idle and departed)) and r[i] <= REL_TOL * size[i] + T_EPS * t:
                    rec_id.append(jid[i])
                    rec_cls.append(cls[i])
                    rec_size.append(size[i])
                    rec_arr.append(arr_t[i])
                    rec_dep.append(t)
                    rec_restarts.append(restarts[i] + 1)
                    n_departures += 1
                    departed = True
                else:
                    new_active.append(i)
            if not departed:
                raise EngineError("completion event produced no departure")
            active = new_active
            last_departure_time = t
            departures_at_last = n_departures
            queue_after_last = len(active)
            if idle_variant:
                idle = True
        else:
            n_arrivals += 1
            u = class_stream.next_float()
            c = class_from_uniform(class_cum, u)
            b = dist.sample(size_spec, size_stream)
            if queue_cap > 0 and q >= queue_cap:
                n_drops += 1
            else:
                size.append(b)
                cls.append(c)
                r.append(b)
                arr_t.append(t)
                restarts.append(0)
                jid.append(n_arrivals - 1)
                active.append(len(size) - 1)
            next_arrival = t + dist.sample(arr_spec.interarrival, arr_stream)

        event_count += 1
        if event_count % trace_stride == 0:
            traj_t.append(t)
            traj_q.append(len(active))
            traj_d.append(n_departures)
            traj_drops.append(n_drops)
        if max_events > 0 and event_count >= max_events:
            truncated = True
            break

    traj_t.append(t)
    traj_q.append(len(active))
    traj_d.append(n_departures)
    traj_drops.append(n_drops)

    return {
        "traj_t": np.asarray(traj_t, dtype=np.float64),
        "traj_q": np.asarray(traj_q, dtype=np.int64),
        "traj_d": np.asarray(traj_d, dtype=np.int64),
        "traj_drops": np.asarray(traj_drops, dtype=np.int64),
        "arrivals": n_arrivals,
        "departures": n_departures,
        "drops": n_drops,
        "failures": n_failures,
        "final_queue": len(active),
        "served_time": served_time,
        "last_departure_time": last_departure_time,
        "departures_at_last": departures_at_last,
        "queue_after_last": queue_after_last,
        "truncated": truncated,
        "events": event_count,
        "end_time": t,
        "next_failure": next_failure,
        "job_id": np.asarray(rec_id, dtype=np.int64),
        "job_class": np.asarray(rec_cls, dtype=np.int64),
        "job_size": np.asarray(rec_size, dtype=np.float64),
        "job_arrival": np.asarray(rec_arr, dtype=np.float64),
        "job_departure": np.asarray(rec_dep, dtype=np.float64),
        "job_restarts": np.asarray(rec_restarts, dtype=np.int64),
    }


def sim_run(
    policy_kind,
    weights,
    arr_family,
    arr_a,
    arr_b,
    size_family,
    size_a,
    size_b,
    class_cum,
    fail_family,
    fail_a,
    fail_b,
    first_gap,
    arr_state,
    class_state,
    size_state,
    fail_state,
    horizon,
    queue_cap,
    trace_stride,
    max_events,
):
    """Steady-state run from packed specs and raw stream states."""
    from ..workload import ArrivalSpec

    arr_spec = ArrivalSpec("renewal", dist.DistSpec(arr_family, arr_a, arr_b))
    size_spec = dist.DistSpec(size_family, size_a, size_b)
    fail_spec = dist.DistSpec(fail_family, fail_a, fail_b)
    feed = GapFeed(fail_spec, RngStream.from_state(fail_state))
    return _run_loop(
        policy_kind,
        tuple(weights),
        True,
        arr_spec,
        size_spec,
        tuple(class_cum),
        RngStream.from_state(arr_state),
        RngStream.from_state(class_state),
        RngStream.from_state(size_state),
        first_gap,
        feed,
        horizon,
        queue_cap,
        trace_stride,
        max_events,
        (),
        (),
    )


def transient_run(
    policy_kind,
    weights,
    sizes,
    classes,
    fail_family,
    fail_a,
    fail_b,
    first_gap,
    fail_state,
    trace_stride,
    max_events,
):
    """Run an initial batch to empty (no arrivals) from packed specs."""
    fail_spec = dist.DistSpec(fail_family, fail_a, fail_b)
    feed = GapFeed(fail_spec, RngStream.from_state(fail_state))
    return _run_loop(
        policy_kind,
        tuple(weights),
        False,
        None,
        None,
        (1.0,),
        None,
        None,
        None,
        first_gap,
        feed,
        0.0,
        0,
        trace_stride,
        max_events,
        tuple(sizes),
        tuple(classes),
    )


def transient_run_fixed_gaps(
    policy_kind, weights, sizes, classes, gaps, trace_stride, max_events
):
    """Transient run driven by an explicit gap list (hand-trace oracle path)."""
    feed = FixedGaps(gaps)
    first_gap = feed.next()
    return _run_loop(
        policy_kind,
        tuple(weights),
        False,
        None,
        None,
        (1.0,),
        None,
        None,
        None,
        first_gap,
        feed,
        0.0,
        0,
        trace_stride,
        max_events,
        tuple(sizes),
        tuple(classes),
    )


def _single_job(size_spec, fail_spec, sample_seed, max_attempts):
    size_stream = RngStream(sample_seed, STREAM_SIZES)
    b = dist.sample(size_spec, size_stream)
    fail_stream = RngStream(sample_seed, STREAM_FAILURES)
    waited = 0.0
    n = 0
    while True:
        gap = dist.sample(fail_spec, fail_stream)
        n += 1
        if gap > b:
            return n, waited + b, waited + gap
        waited += gap
        if n >= max_attempts:
            raise EngineError(
                f"job of size {b} not completed after {max_attempts} attempts; "
                f"is ccdf(failure, size) zero?"
            )


def single_job_batch(
    size_family, size_a, size_b, fail_family, fail_a, fail_b, n, seed, max_attempts
):
    """n independent single-job runs; returns (restarts, S, S_bar) arrays."""
    size_spec = dist.DistSpec(size_family, size_a, size_b)
    fail_spec = dist.DistSpec(fail_family, fail_a, fail_b)
    out_n = np.empty(n, dtype=np.int64)
    out_s = np.empty(n, dtype=np.float64)
    out_sbar = np.empty(n, dtype=np.float64)
    for i in range(n):
        sd = derive_seed(seed, i)
        out_n[i], out_s[i], out_sbar[i] = _single_job(size_spec, fail_spec, sd, max_attempts)
    return out_n, out_s, out_sbar


def _draw_sizes(size_spec, sample_seed, m):
    stream = RngStream(sample_seed, STREAM_SIZES)
    return [dist.sample(size_spec, stream) for _ in range(m)]


def transient_theta_batch(
    policy_kind,
    weights,
    m,
    size_family,
    size_a,
    size_b,
    fail_family,
    fail_a,
    fail_b,
    n,
    seed,
    max_events,
):
    """n transient completions of batches of m i.i.d. jobs; single class."""
    size_spec = dist.DistSpec(size_family, size_a, size_b)
    fail_spec = dist.DistSpec(fail_family, fail_a, fail_b)
    theta = np.empty(n, dtype=np.float64)
    trunc = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        sd = derive_seed(seed, i)
        sizes = _draw_sizes(size_spec, sd, m)
        fail_stream = RngStream(sd, STREAM_FAILURES)
        first_gap = dist.sample(fail_spec, fail_stream)
        feed = GapFeed(fail_spec, fail_stream)
        raw = _run_loop(
            policy_kind, tuple(weights), False, None, None, (1.0,),
            None, None, None, first_gap, feed,
            0.0, 0, 2 ** 62, max_events,
            tuple(sizes), (0,) * m,
        )
        if raw["truncated"]:
            theta[i] = math.nan
            trunc[i] = 1
        else:
            theta[i] = raw["last_departure_time"]
    return theta, trunc


def coupled_bound_batch(
    base_kind,
    m,
    size_family,
    size_a,
    size_b,
    fail_family,
    fail_a,
    fail_b,
    n,
    seed,
    max_events,
):
    """n coupled (plain, idle-variant) pairs on identical failure paths.

    base_kind 0 = serve-one-at-a-time, 1 = equal sharing.  Returns
    (theta, bound, truncated): for base 0 the bound is the idle system's
    completion time; for base 1 it is the failure instant right after the
    idle system's last departure (the sum of the per-round window spans).
    """
    size_spec = dist.DistSpec(size_family, size_a, size_b)
    fail_spec = dist.DistSpec(fail_family, fail_a, fail_b)
    plain_kind = KIND_FCFS if base_kind == 0 else KIND_PS
    idle_kind = KIND_FCFS_IDLE if base_kind == 0 else KIND_PS_IDLE
    theta = np.empty(n, dtype=np.float64)
    bound = np.empty(n, dtype=np.float64)
    trunc = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        sd = derive_seed(seed, i)
        sizes = tuple(_draw_sizes(size_spec, sd, m))
        tape = []
        feed = GapFeed(fail_spec, RngStream(sd, STREAM_FAILURES), tape)
        first_gap = feed.next()
        raw_plain = _run_loop(
            plain_kind, (), False, None, None, (1.0,), None, None, None,
            first_gap, feed, 0.0, 0, 2 ** 62, max_events,
            sizes, (0,) * m,
        )
        feed.rewind()
        first_gap2 = feed.next()
        raw_idle = _run_loop(
            idle_kind, (), False, None, None, (1.0,), None, None, None,
            first_gap2, feed, 0.0, 0, 2 ** 62, max_events,
            sizes, (0,) * m,
        )
        if raw_plain["truncated"] or raw_idle["truncated"]:
            theta[i] = math.nan
            bound[i] = math.nan
            trunc[i] = 1
        else:
            theta[i] = raw_plain["last_departure_time"]
            if base_kind == 0:
                bound[i] = raw_idle["last_departure_time"]
            else:
                bound[i] = raw_idle["next_failure"]
    return theta, bound, trunc
