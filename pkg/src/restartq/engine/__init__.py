"""Simulation engine with a compiled core and a pure-Python fallback.

At import time the package prefers the Cython kernel
(``restartq.engine._kernel``) and silently falls back to the reference
implementation (``restartq.engine._pure``) when the extension is not
built.  ``RESTARTQ_BACKEND=pure`` or ``RESTARTQ_BACKEND=kernel`` forces a
choice (forcing the kernel raises if it is unavailable).  Both backends
consume the same random streams in the same order and use the same
floating-point expressions, so results are bit-identical; the test suite
asserts this.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .. import distributions as dist
from ..channel import FRESH, FailureTimeline, first_gap_from_uniform
from ..distributions import DistSpec
from ..rng import (
    RngStream,
    STREAM_ARRIVALS,
    STREAM_CLASSES,
    STREAM_FAILURES,
    STREAM_SIZES,
)
from . import _pure
from .types import (
    DPS,
    FCFS,
    FCFS_IDLE,
    PS,
    PS_IDLE,
    EngineError,
    Policy,
    SimConfig,
    SimOutput,
    TransientResult,
)

__all__ = [
    "BACKEND",
    "DPS",
    "FCFS",
    "FCFS_IDLE",
    "PS",
    "PS_IDLE",
    "EngineError",
    "Policy",
    "SimConfig",
    "SimOutput",
    "TransientResult",
    "simulate",
    "transient_completion",
    "single_job_service",
    "coupled_idle_bound",
    "single_job_stats",
    "transient_theta_samples",
    "coupled_bound_samples",
]

DEFAULT_TRANSIENT_MAX_EVENTS = 50_000_000
DEFAULT_MAX_ATTEMPTS = 100_000_000


def _load_backend():
    choice = os.environ.get("RESTARTQ_BACKEND", "auto").lower()
    if choice not in ("auto", "pure", "kernel"):
        raise ValueError(f"RESTARTQ_BACKEND must be auto|pure|kernel, got {choice!r}")
    if choice in ("auto", "kernel"):
        try:
            from . import _kernel

            return _kernel, "kernel"
        except ImportError:
            if choice == "kernel":
                raise
    return _pure, "pure"


_impl, BACKEND = _load_backend()


def _pack(spec: DistSpec):
    return spec.family, spec.a, spec.b


def simulate(config: SimConfig) -> SimOutput:
    """Run the steady-state scenario to its horizon.  Deterministic given
    ``config.master_seed``; replications should vary the seed via
    :func:`restartq.rng.derive_seed`."""
    seed = config.master_seed
    arr_stream = RngStream(seed, STREAM_ARRIVALS)
    class_stream = RngStream(seed, STREAM_CLASSES)
    size_stream = RngStream(seed, STREAM_SIZES)
    fail_stream = RngStream(seed, STREAM_FAILURES)
    first_gap = first_gap_from_uniform(
        config.failure, config.failure_start, fail_stream.next_float()
    )
    weights = np.asarray(config.policy.weights or (1.0,), dtype=np.float64)
    class_cum = np.asarray(config.job.cumulative_probs(), dtype=np.float64)
    raw = _impl.sim_run(
        config.policy.code,
        weights,
        *_pack(config.arrival.interarrival),
        *_pack(config.job.size),
        class_cum,
        *_pack(config.failure),
        first_gap,
        arr_stream.state,
        class_stream.state,
        size_stream.state,
        fail_stream.state,
        float(config.horizon),
        int(config.queue_cap or 0),
        int(config.trace_stride),
        int(config.max_events or 0),
    )
    return SimOutput(
        seed=seed,
        horizon=float(config.horizon),
        traj_t=raw["traj_t"],
        traj_q=raw["traj_q"],
        traj_d=raw["traj_d"],
        traj_drops=raw["traj_drops"],
        arrivals=raw["arrivals"],
        departures=raw["departures"],
        drops=raw["drops"],
        failures=raw["failures"],
        final_queue=raw["final_queue"],
        served_time=raw["served_time"],
        last_departure_time=raw["last_departure_time"],
        departures_at_last=raw["departures_at_last"],
        queue_after_last_departure=raw["queue_after_last"],
        truncated=raw["truncated"],
        job_id=raw["job_id"],
        job_class=raw["job_class"],
        job_size=raw["job_size"],
        job_arrival=raw["job_arrival"],
        job_departure=raw["job_departure"],
        job_restarts=raw["job_restarts"],
    )


def _resolve_failure(failure, seed, start_mode):
    """(spec, first_gap, stream_state) from a spec or a live timeline.

    Passing a timeline replays its future deterministically without
    mutating it: the run consumes a value-copy of the stream.
    """
    if isinstance(failure, FailureTimeline):
        return (
            failure.spec,
            failure.next_failure_time - failure.clock,
            failure.stream.state,
        )
    stream = RngStream(seed, STREAM_FAILURES)
    first_gap = first_gap_from_uniform(failure, start_mode, stream.next_float())
    return failure, first_gap, stream.state


def _build_transient(raw) -> TransientResult:
    truncated = raw["truncated"]
    return TransientResult(
        theta=math.nan if truncated else raw["last_departure_time"],
        next_failure_after_end=math.nan if truncated else raw["next_failure"],
        failures=raw["failures"],
        events=raw["events"],
        truncated=truncated,
        traj_t=raw["traj_t"],
        traj_q=raw["traj_q"],
        traj_d=raw["traj_d"],
        job_id=raw["job_id"],
        job_class=raw["job_class"],
        job_size=raw["job_size"],
        job_departure=raw["job_departure"],
        job_restarts=raw["job_restarts"],
    )


def transient_completion(
    initial_sizes,
    policy: Policy,
    failure,
    *,
    classes=None,
    seed: int = 0,
    start_mode: str = FRESH,
    gaps=None,
    trace_stride: int = 1,
    max_events: int = DEFAULT_TRANSIENT_MAX_EVENTS,
) -> TransientResult:
    """Serve an initial batch to empty, with no future arrivals.

    ``failure`` is a :class:`DistSpec` (gaps drawn from ``seed``) or a
    :class:`FailureTimeline`.  An explicit ``gaps`` sequence overrides
    both and is consumed in order (running past its end raises).
    Sharing policies with heavy restart inflation may run extremely long;
    the event cap turns that into an explicit ``truncated`` result.
    """
    sizes = [float(b) for b in initial_sizes]
    if not sizes:
        raise ValueError("at least one initial job is required")
    if any(b <= 0 for b in sizes):
        raise ValueError("job sizes must be > 0")
    if classes is None:
        classes = [0] * len(sizes)
    classes = [int(c) for c in classes]
    if len(classes) != len(sizes):
        raise ValueError("classes must match sizes")
    if policy.kind == "dps":
        if max(classes) >= len(policy.weights):
            raise ValueError("class label outside weight vector")
        weights = np.asarray(policy.weights, dtype=np.float64)
    else:
        weights = np.asarray((1.0,), dtype=np.float64)

    if gaps is not None:
        gaps = [float(g) for g in gaps]
        if not gaps:
            raise ValueError("explicit gap sequence must be non-empty")
        raw = _pure.transient_run_fixed_gaps(
            policy.code, weights, sizes, classes, gaps, trace_stride, max_events
        )
        return _build_transient(raw)

    spec, first_gap, state = _resolve_failure(failure, seed, start_mode)
    raw = _impl.transient_run(
        policy.code,
        weights,
        np.asarray(sizes, dtype=np.float64),
        np.asarray(classes, dtype=np.int64),
        *_pack(spec),
        first_gap,
        state,
        int(trace_stride),
        int(max_events),
    )
    return _build_transient(raw)


def single_job_service(size: float, timeline: FailureTimeline,
                       max_attempts: int = DEFAULT_MAX_ATTEMPTS):
    """Serve one job alone on the given channel.

    Returns ``(n, s, s_bar)``: the index of the first window longer than
    the job (strictly), the elapsed time through completion, and the
    elapsed time through the end of the final window.  Advances the
    timeline by the windows it consumes.
    """
    if not size > 0:
        raise ValueError(f"job size must be > 0, got {size}")
    from ..channel import advance_to_next_failure

    waited = 0.0
    n = 0
    while True:
        gap = timeline.next_failure_time - timeline.clock
        n += 1
        if gap > size:
            return n, waited + size, waited + gap
        waited += gap
        advance_to_next_failure(timeline)
        if n >= max_attempts:
            raise EngineError(
                f"job of size {size} not completed after {max_attempts} attempts; "
                f"is ccdf(failure, size) zero?"
            )


def coupled_idle_bound(
    initial_sizes,
    base: Policy = FCFS,
    *,
    failure: DistSpec | None = None,
    seed: int = 0,
    gaps=None,
    max_events: int = DEFAULT_TRANSIENT_MAX_EVENTS,
):
    """Run a policy and its idle-until-next-failure variant on the same
    failure path.

    Returns ``(theta, bound)``.  For serve-one-at-a-time the bound is the
    idle system's completion time; for equal sharing it additionally
    includes the residual to the failure after the idle system's last
    departure (one full window span per job).  The pathwise guarantee
    ``theta <= bound`` holds on every path.
    """
    if base.kind not in ("fcfs", "ps"):
        raise ValueError("coupling is defined for the fcfs and ps policies")
    sizes = [float(b) for b in initial_sizes]
    m = len(sizes)
    classes = [0] * m
    weights = np.asarray((1.0,), dtype=np.float64)
    idle = FCFS_IDLE if base.kind == "fcfs" else PS_IDLE

    if gaps is not None:
        tape = [float(g) for g in gaps]
        raw_plain = _pure.transient_run_fixed_gaps(
            base.code, weights, sizes, classes, tape, 2 ** 62, max_events
        )
        raw_idle = _pure.transient_run_fixed_gaps(
            idle.code, weights, sizes, classes, tape, 2 ** 62, max_events
        )
    else:
        if failure is None:
            raise ValueError("either a failure spec or an explicit gap list is required")
        tape = []
        stream = RngStream(seed, STREAM_FAILURES)
        feed = _pure.GapFeed(failure, stream, tape)
        first_gap = feed.next()
        raw_plain = _pure._run_loop(
            base.code, (), False, None, None, (1.0,), None, None, None,
            first_gap, feed, 0.0, 0, 2 ** 62, max_events, sizes, classes,
        )
        feed.rewind()
        feed.next()
        raw_idle = _pure._run_loop(
            idle.code, (), False, None, None, (1.0,), None, None, None,
            first_gap, feed, 0.0, 0, 2 ** 62, max_events, sizes, classes,
        )
    if raw_plain["truncated"] or raw_idle["truncated"]:
        raise EngineError("coupled run hit the event cap; raise max_events")
    theta = raw_plain["last_departure_time"]
    if base.kind == "fcfs":
        bound = raw_idle["last_departure_time"]
    else:
        bound = raw_idle["next_failure"]
    return theta, bound


def single_job_stats(job, failure: DistSpec, n: int, seed: int = 0,
                     max_attempts: int = DEFAULT_MAX_ATTEMPTS):
    """Monte Carlo over ``n`` independent single-job runs.

    ``job`` may be a fixed size or a :class:`DistSpec`.  Returns arrays
    ``(restart_counts, service_times, padded_service_times)``.
    """
    if not isinstance(job, DistSpec):
        job = dist.Deterministic(float(job))
    return _impl.single_job_batch(
        *_pack(job), *_pack(failure), int(n), int(seed), int(max_attempts)
    )


def transient_theta_samples(
    policy: Policy,
    m: int,
    job: DistSpec,
    failure: DistSpec,
    n: int,
    seed: int = 0,
    max_events: int = DEFAULT_TRANSIENT_MAX_EVENTS,
):
    """``n`` i.i.d. total completion times of batches of ``m`` jobs.

    Returns ``(theta, truncated)``; truncated samples carry NaN.
    """
    weights = np.asarray(policy.weights or (1.0,), dtype=np.float64)
    return _impl.transient_theta_batch(
        policy.code, weights, int(m), *_pack(job), *_pack(failure),
        int(n), int(seed), int(max_events),
    )


def coupled_bound_samples(
    base: Policy,
    m: int,
    job: DistSpec,
    failure: DistSpec,
    n: int,
    seed: int = 0,
    max_events: int = DEFAULT_TRANSIENT_MAX_EVENTS,
):
    """``n`` coupled (theta, bound) pairs with i.i.d. drawn job sizes."""
    if base.kind not in ("fcfs", "ps"):
        raise ValueError("coupling is defined for the fcfs and ps policies")
    code = 0 if base.kind == "fcfs" else 1
    return _impl.coupled_bound_batch(
        code, int(m), *_pack(job), *_pack(failure), int(n), int(seed), int(max_events)
    )
