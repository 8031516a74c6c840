"""Engine-facing types: scheduling policies, run configuration, outputs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channel import FRESH, STATIONARY_EXCESS
from ..distributions import DistSpec
from ..workload import ArrivalSpec, JobSpec

# policy kind codes (shared with the compiled kernel)
KIND_FCFS = 0
KIND_PS = 1
KIND_DPS = 2
KIND_FCFS_IDLE = 3
KIND_PS_IDLE = 4

_KIND_NAMES = {
    KIND_FCFS: "fcfs",
    KIND_PS: "ps",
    KIND_DPS: "dps",
    KIND_FCFS_IDLE: "fcfs_idle",
    KIND_PS_IDLE: "ps_idle",
}
_KIND_CODES = {v: k for k, v in _KIND_NAMES.items()}


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class Policy:
    """Scheduling discipline.  Weighted sharing carries per-class weights;
    the idle variants (server rests until the next failure after every
    departure) exist only for transient runs, as coupling constructions."""

    kind: str
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "dps":
            if not self.weights:
                raise ValueError("weighted sharing requires at least one weight")
            if any(w <= 0 for w in self.weights):
                raise ValueError("weights must be strictly positive")
        elif self.weights:
            raise ValueError(f"policy {self.kind!r} takes no weights")

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def is_idle_variant(self) -> bool:
        return self.kind in ("fcfs_idle", "ps_idle")


FCFS = Policy("fcfs")
PS = Policy("ps")
FCFS_IDLE = Policy("fcfs_idle")
PS_IDLE = Policy("ps_idle")


def DPS(*weights: float) -> Policy:
    return Policy("dps", tuple(float(w) for w in weights))


@dataclass(frozen=True)
class SimConfig:
    """Steady-state scenario: arrivals, jobs, failures, policy, horizon.

    ``queue_cap`` bounds the number of jobs in system (arrivals beyond it
    are dropped); ``trace_stride`` thins the recorded trajectory without
    affecting any counter; ``max_events`` is a safety cap (None = off).
    """

    arrival: ArrivalSpec
    job: JobSpec
    failure: DistSpec
    policy: Policy
    horizon: float
    failure_start: str = FRESH
    queue_cap: int | None = None
    master_seed: int = 0
    trace_stride: int = 1
    max_events: int | None = None

    def __post_init__(self):
        if self.arrival is None:
            raise ValueError("steady-state runs require an arrival spec; "
                             "use transient_completion for batch-only runs")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if self.queue_cap is not None and self.queue_cap < 1:
            raise ValueError(f"queue cap must be >= 1, got {self.queue_cap}")
        if self.trace_stride < 1:
            raise ValueError("trace stride must be >= 1")
        if self.policy.is_idle_variant:
            raise ValueError("idle policy variants are transient-mode only")
        if self.failure_start not in (FRESH, STATIONARY_EXCESS):
            raise ValueError(f"unknown failure start mode {self.failure_start!r}")
        if self.policy.kind == "dps" and len(self.policy.weights) != self.job.num_classes:
            raise ValueError(
                f"weight count {len(self.policy.weights)} does not match "
                f"class count {self.job.num_classes}"
            )


@dataclass
class SimOutput:
    """Trajectory, counters and per-completed-job records of one run.

    Invariants: traj_d is non-decreasing; traj_q = arrivals-so-far -
    departures-so-far - drops-so-far at every recorded instant.
    """

    seed: int
    horizon: float
    # trajectory sampled at (strided) event instants, plus first/last row
    traj_t: np.ndarray
    traj_q: np.ndarray
    traj_d: np.ndarray
    traj_drops: np.ndarray
    # exact counters
    arrivals: int
    departures: int
    drops: int
    failures: int
    final_queue: int
    served_time: float
    last_departure_time: float
    departures_at_last: int
    queue_after_last_departure: int
    truncated: bool
    # completed jobs, in departure order
    job_id: np.ndarray
    job_class: np.ndarray
    job_size: np.ndarray
    job_arrival: np.ndarray
    job_departure: np.ndarray
    job_restarts: np.ndarray

    @property
    def sojourns(self) -> np.ndarray:
        return self.job_departure - self.job_arrival


@dataclass
class TransientResult:
    """Completion record of a finite batch with no future arrivals."""

    theta: float
    next_failure_after_end: float
    failures: int
    events: int
    truncated: bool
    traj_t: np.ndarray
    traj_q: np.ndarray
    traj_d: np.ndarray
    # completed jobs, in departure order
    job_id: np.ndarray
    job_class: np.ndarray
    job_size: np.ndarray
    job_departure: np.ndarray
    job_restarts: np.ndarray

    @property
    def sojourns(self) -> np.ndarray:
        # every job is present from time zero
        return self.job_departure.copy()
