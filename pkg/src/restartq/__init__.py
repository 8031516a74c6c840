"""restartq: queues whose jobs restart from scratch after channel failures.

Discrete-event simulation (FCFS, processor sharing, weighted sharing, and
their idle coupling variants), closed-form stability and restart-count
calculators, transient completion-time tail estimation, and a scenario
catalog with reproducible replication.
"""

from . import analytics, channel, distributions, engine, workload
from .channel import FRESH, STATIONARY_EXCESS, FailureTimeline, make_failure_timeline
from .distributions import (
    Deterministic,
    DistSpec,
    Exponential,
    Pareto,
    Uniform,
    Weibull,
    hazard_proportional_job_dist,
)
from .engine import (
    BACKEND,
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
    coupled_bound_samples,
    coupled_idle_bound,
    simulate,
    single_job_service,
    single_job_stats,
    transient_completion,
    transient_theta_samples,
)
from .rng import RngStream, derive_seed
from .workload import ArrivalSpec, JobSpec, PoissonArrivals, RenewalArrivals, fragment_job

__version__ = "0.1.0"
