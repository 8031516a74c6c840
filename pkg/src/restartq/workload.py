"""Arrival streams, job-size generation and fragmentation.

Jobs carry a class label (for weighted sharing) and an optional fixed
header: when a payload is fragmented, every fragment pays the header on
top of its share of the useful mass.

Draw discipline, shared with the engine backends: one interarrival = one
uniform; one job = one class uniform followed by one size uniform (the
class draw happens even for a single class, so a configuration change
never shifts later draws).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import distributions as dist
from .distributions import DistSpec
from .rng import RngStream

POISSON = "poisson"
RENEWAL = "renewal"


@dataclass(frozen=True)
class ArrivalSpec:
    """Poisson(rate) or renewal with an arbitrary interarrival law."""

    kind: str
    interarrival: DistSpec

    @property
    def rate(self) -> float:
        return 1.0 / dist.mean(self.interarrival)


def PoissonArrivals(rate: float) -> ArrivalSpec:
    if not rate > 0:
        raise ValueError(f"arrival rate must be > 0, got {rate}")
    return ArrivalSpec(POISSON, dist.Exponential(rate))


def RenewalArrivals(interarrival: DistSpec) -> ArrivalSpec:
    if not dist.mean(interarrival) < float("inf"):
        raise ValueError("renewal interarrival law must have a finite mean")
    return ArrivalSpec(RENEWAL, interarrival)


@dataclass(frozen=True)
class JobSpec:
    size: DistSpec
    class_probs: tuple[float, ...] = (1.0,)
    header: float = 0.0

    def __post_init__(self):
        if not self.class_probs:
            raise ValueError("at least one class is required")
        if any(p < 0 for p in self.class_probs):
            raise ValueError("class probabilities must be non-negative")
        if abs(sum(self.class_probs) - 1.0) > 1e-9:
            raise ValueError(f"class probabilities must sum to 1, got {sum(self.class_probs)}")
        if self.header < 0:
            raise ValueError("header must be >= 0")

    @property
    def num_classes(self) -> int:
        return len(self.class_probs)

    def cumulative_probs(self) -> tuple[float, ...]:
        out, acc = [], 0.0
        for p in self.class_probs:
            acc += p
            out.append(acc)
        out[-1] = 1.0
        return tuple(out)


def next_interarrival(spec: ArrivalSpec, stream: RngStream) -> float:
    return dist.sample(spec.interarrival, stream)


def class_from_uniform(cumulative: tuple[float, ...], u: float) -> int:
    for k, c in enumerate(cumulative):
        if u <= c:
            return k
    return len(cumulative) - 1


def draw_job(spec: JobSpec, stream: RngStream) -> tuple[float, int]:
    """Independent (size, class) pair; class drawn first."""
    cls = class_from_uniform(spec.cumulative_probs(), stream.next_float())
    size = dist.sample(spec.size, stream)
    return size, cls


def fragment_job(useful_size: float, payload: float, header: float = 0.0) -> list[float]:
    """Split ``useful_size`` into payload-sized pieces, each carrying the
    header.  The last fragment takes the remainder.  Total useful mass is
    conserved: sum(fragments) == useful_size + len(fragments) * header."""
    if not payload > 0:
        raise ValueError(f"payload must be > 0, got {payload}")
    if not useful_size > 0:
        raise ValueError(f"useful size must be > 0, got {useful_size}")
    if header < 0:
        raise ValueError("header must be >= 0")
    fragments = []
    remaining = useful_size
    while remaining > payload:
        fragments.append(payload + header)
        remaining -= payload
    fragments.append(remaining + header)
    return fragments
