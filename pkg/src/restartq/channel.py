"""The failure-prone channel: a renewal process of availability periods.

The channel alternates between availability windows; at the end of each
window the system fails and every in-service job loses its accrued work.
A timeline either starts "fresh" (the first failure arrives after a full
window drawn from the gap law) or in "stationary_excess" mode (the first
window is drawn from the integrated-tail law of the gaps, which makes the
failure point process stationary).

Every gap consumes exactly one uniform from the timeline's stream, so a
timeline is fully reproducible from ``(seed, stream_id)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import special

from . import distributions as dist
from .distributions import DistSpec
from .rng import RngStream

FRESH = "fresh"
STATIONARY_EXCESS = "stationary_excess"


def integrated_tail_ccdf(spec: DistSpec, x: float) -> float:
    """CCDF of the excess (integrated-tail) law:
    ``(1/E[A]) * integral_x^inf ccdf(u) du``."""
    if x < 0:
        raise ValueError(f"argument must be >= 0, got {x}")
    m = dist.mean(spec)
    fam = spec.family
    if fam == dist.EXPONENTIAL:
        return math.exp(-spec.a * x)
    if fam == dist.DETERMINISTIC:
        return max(0.0, (spec.a - x) / spec.a)
    if fam == dist.PARETO:
        xm, a = spec.a, spec.b
        if x < xm:
            return 1.0 - x / m
        return math.pow(xm, a) * math.pow(x, 1.0 - a) / ((a - 1.0) * m)
    if fam == dist.UNIFORM:
        lo, hi = spec.a, spec.b
        if x <= lo:
            return 1.0 - x / m
        if x >= hi:
            return 0.0
        return (hi - x) ** 2 / (2.0 * (hi - lo) * m)
    # Weibull: integral_x^inf exp(-(u/scale)^shape) du via the upper
    # incomplete gamma function.
    lam, gam = spec.a, spec.b
    return float(special.gammaincc(1.0 / gam, math.pow(x / lam, gam)))


def excess_from_uniform(spec: DistSpec, u: float) -> float:
    """Inverse CDF of the integrated-tail law at ``u`` in (0, 1)."""
    fam = spec.family
    m = dist.mean(spec)
    if fam == dist.EXPONENTIAL:
        return -math.log1p(-u) / spec.a
    if fam == dist.DETERMINISTIC:
        return spec.a * u
    if fam == dist.PARETO:
        xm, a = spec.a, spec.b
        if u <= 1.0 - 1.0 / a:
            return m * u
        return xm * math.pow(a * (1.0 - u), -1.0 / (a - 1.0))
    if fam == dist.UNIFORM:
        lo, hi = spec.a, spec.b
        if u <= lo / m:
            return m * u
        return hi - math.sqrt(2.0 * (hi - lo) * m * (1.0 - u))
    lam, gam = spec.a, spec.b
    z = float(special.gammainccinv(1.0 / gam, 1.0 - u))
    return lam * math.pow(z, 1.0 / gam)


def first_gap_from_uniform(spec: DistSpec, start_mode: str, u: float) -> float:
    """First availability window from one uniform draw, honoring the mode."""
    if start_mode == FRESH:
        return dist.inverse_ccdf_from_uniform(spec, u)
    if start_mode == STATIONARY_EXCESS:
        return excess_from_uniform(spec, u)
    raise ValueError(f"unknown start mode {start_mode!r}")


@dataclass
class FailureTimeline:
    """Mutable renewal timeline of failures.  Single-owner: one timeline
    per simulation run; independent runs use independent streams."""

    spec: DistSpec
    start_mode: str
    stream: RngStream
    clock: float = 0.0
    next_failure_time: float = field(init=False)
    failures_so_far: int = 0

    def __post_init__(self):
        self.next_failure_time = self.clock + first_gap_from_uniform(
            self.spec, self.start_mode, self.stream.next_float()
        )


def make_failure_timeline(
    spec: DistSpec, start_mode: str = FRESH, stream: RngStream | None = None,
    seed: int = 0,
) -> FailureTimeline:
    if stream is None:
        from .rng import STREAM_FAILURES

        stream = RngStream(seed, STREAM_FAILURES)
    return FailureTimeline(spec=spec, start_mode=start_mode, stream=stream)


def advance_to_next_failure(timeline: FailureTimeline) -> float:
    """Consume the current window: returns the gap just elapsed, counts the
    failure, and schedules the next one."""
    gap = timeline.next_failure_time - timeline.clock
    timeline.clock = timeline.next_failure_time
    timeline.failures_so_far += 1
    timeline.next_failure_time = timeline.clock + dist.sample(timeline.spec, timeline.stream)
    return gap


def forward_recurrence(timeline: FailureTimeline, t: float) -> float:
    """Time from ``t`` until the next failure.  ``t`` must lie in the
    current window."""
    if t < timeline.clock or t > timeline.next_failure_time:
        raise ValueError(
            f"query time {t} outside current window "
            f"[{timeline.clock}, {timeline.next_failure_time}]"
        )
    return timeline.next_failure_time - t
