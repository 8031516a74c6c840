"""Closed-form calculators and empirical estimators.

The analytic side: expected restart counts and service times under
restart-from-scratch, the serve-one-at-a-time stability region, the
bounded-queue throughput bound, and exact order-statistic tails.  The
empirical side: log-log CCDF tail-index regression and saturation
detection on simulated trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import distributions as dist
from .distributions import DistSpec


class EstimationError(RuntimeError):
    pass


class InfiniteRestartsError(ValueError):
    pass


@dataclass(frozen=True)
class StabilityReport:
    """Serve-one-at-a-time stability: stable iff rho = lam * E[S] < 1."""

    lam: float
    mean_service: float
    rho: float
    threshold: float  # critical arrival rate 1 / E[S]
    stable: bool


@dataclass(frozen=True)
class ThroughputBound:
    """Full-queue throughput lower bound; ``value`` is clamped to [0, 1]."""

    value: float
    raw: float


@dataclass(frozen=True)
class TailEstimate:
    slope: float
    stderr: float
    window: tuple[float, float]
    sample_count: int
    points_used: int


@dataclass(frozen=True)
class SaturationVerdict:
    saturated: bool
    last_departure_time: float
    critical_time_estimate: float
    departure_rate_before: float


def expected_restarts(failure: DistSpec, beta: float) -> float:
    """Expected number of attempts for a fixed job of size beta: 1/ccdf(beta)."""
    if not beta > 0:
        raise ValueError(f"job size must be > 0, got {beta}")
    g = dist.ccdf(failure, beta)
    if g <= 0.0:
        raise InfiniteRestartsError(
            f"ccdf(failure, {beta}) = 0: the job can never complete"
        )
    return 1.0 / g


def _as_weibull_like(spec: DistSpec):
    """(scale, shape) of the log-tail for exponential/Weibull, else None."""
    if spec.family == dist.EXPONENTIAL:
        return 1.0 / spec.a, 1.0
    if spec.family == dist.WEIBULL:
        return spec.a, spec.b
    return None


def _tail_log_ratio(job: DistSpec, failure: DistSpec) -> float:
    """Limit of log ccdf_job(x) / log ccdf_failure(x) as x grows.

    Both laws unbounded.  Infinity means the job tail is negligibly light
    relative to the failure tail (the restart expectation converges).
    """
    jw = _as_weibull_like(job)
    fw = _as_weibull_like(failure)
    if jw is not None and fw is not None:
        if jw[1] > fw[1]:
            return math.inf
        if jw[1] < fw[1]:
            return 0.0
        return math.pow(fw[0] / jw[0], jw[1])
    if job.family == dist.PARETO and failure.family == dist.PARETO:
        return job.b / failure.b
    if job.family == dist.PARETO:
        return 0.0
    # light-tailed job against a Pareto failure law
    return math.inf


def expected_restarts_random_job(failure: DistSpec, job: DistSpec) -> float:
    """E[1/ccdf_failure(B)] over the job law, by adaptive quadrature.

    A divergent expectation (log-tail ratio <= 1, or job mass at or beyond
    the failure law's upper support) is reported as ``inf``.
    """
    if job.family == dist.DETERMINISTIC:
        return expected_restarts(failure, job.a)
    fail_sup = dist.upper_support(failure)
    job_sup = dist.upper_support(job)
    if fail_sup < math.inf:
        if job_sup >= fail_sup:
            return math.inf
    elif _tail_log_ratio(job, failure) <= 1.0:
        return math.inf

    qs = [1e-9, 1e-6, 1e-3, 0.01, 0.1, 0.5, 0.9, 0.99, 1.0 - 1e-3,
          1.0 - 1e-6, 1.0 - 1e-9, 1.0 - 1e-12]
    knots = [0.0] + [dist.quantile(job, q) for q in qs]
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(
            lambda x: dist.pdf(job, x) / dist.ccdf(failure, x),
            lo, hi, epsrel=1e-8, epsabs=0.0, limit=200,
        )
        total += val
    return total


def expected_service_fixed(failure: DistSpec, beta: float) -> float:
    """Mean total service time of a fixed job of size beta:
    E[A 1{A < beta}] * E[N] + beta."""
    return dist.truncated_mean_below(failure, beta) * expected_restarts(failure, beta) + beta


def fcfs_stability(lam: float, failure: DistSpec, beta: float) -> StabilityReport:
    """Stability report for serve-one-at-a-time with fixed jobs of size beta."""
    if not lam > 0:
        raise ValueError(f"arrival rate must be > 0, got {lam}")
    es = expected_service_fixed(failure, beta)
    rho = lam * es
    return StabilityReport(
        lam=lam, mean_service=es, rho=rho, threshold=1.0 / es, stable=rho < 1.0
    )


def throughput_lower_bound(lam: float, mu: float, size: float, queue_cap: int) -> ThroughputBound:
    """Full-queue throughput floor for a bounded sharing queue with
    exponential failures: cap / (lam * E[S at full queue])."""
    if min(lam, mu, size) <= 0 or queue_cap < 1:
        raise ValueError("rates, job size and queue cap must be positive")
    raw = queue_cap * mu / (lam * math.expm1(mu * queue_cap * size))
    return ThroughputBound(value=min(1.0, max(0.0, raw)), raw=raw)


def critical_job_size(lam: float, mu: float, queue_cap: int) -> float:
    """Job size at which the full-queue throughput bound crosses 1."""
    if min(lam, mu) <= 0 or queue_cap < 1:
        raise ValueError("rates and queue cap must be positive")
    return math.log1p(mu * queue_cap / lam) / (mu * queue_cap)


def order_statistic_ccdf(job: DistSpec, m: int, i: int, x: float) -> float:
    """Exact P(B_(i) > x) for the i-th smallest of m i.i.d. jobs."""
    if m < 1 or not 1 <= i <= m:
        raise ValueError(f"need 1 <= i <= m, got i={i}, m={m}")
    p = dist.cdf(job, x)
    q = dist.ccdf(job, x)
    total = 0.0
    for k in range(i):
        total += math.comb(m, k) * math.pow(p, k) * math.pow(q, m - k)
    return total


def theoretical_tail_index(alpha: float, gamma: float, m: int, policy) -> float:
    """Predicted log-asymptotic power-law index of the total completion
    time of m jobs whose log-tail is ``alpha`` times the failure law's.

    Serve-one-at-a-time keeps index alpha for any m.  Equal sharing keeps
    alpha when the job hazard grows sublinearly (gamma <= 1) and degrades
    to alpha / m**(gamma-1) when it grows superlinearly.
    """
    if not alpha > 1:
        raise ValueError(f"log-tail ratio must be > 1, got {alpha}")
    if gamma < 0:
        raise ValueError(f"hazard growth index must be >= 0, got {gamma}")
    if m < 1:
        raise ValueError(f"job count must be >= 1, got {m}")
    kind = getattr(policy, "kind", policy)
    if kind in ("fcfs", "fcfs_idle"):
        return alpha
    if kind in ("ps", "ps_idle"):
        if gamma <= 1.0:
            return alpha
        return alpha / math.pow(m, gamma - 1.0)
    raise ValueError(f"no tail-index prediction for policy {kind!r}")


def estimate_tail_index(samples, window: tuple[float, float] = (0.90, 0.999)) -> TailEstimate:
    """OLS slope of log10(empirical CCDF) against log10(t) over the sample
    points whose quantile rank falls in ``window``.

    The slope estimates the negated power-law index; stderr is the usual
    OLS standard error of the slope.
    """
    lo, hi = window
    if not (0.0 < lo < hi < 1.0):
        raise ValueError(f"window quantiles must satisfy 0 < lo < hi < 1, got {window}")
    arr = np.sort(np.asarray(samples, dtype=np.float64))
    n = arr.size
    if n < 1000:
        raise EstimationError(f"need at least 1000 samples, got {n}")
    if not np.all(np.isfinite(arr)) or arr[0] <= 0.0:
        raise EstimationError("samples must be positive and finite")
    j = np.arange(1, n + 1)
    mask = (j >= math.ceil(n * lo)) & (j <= math.floor(n * hi))
    xs = arr[mask]
    cc = (n - j[mask]) / n
    k = xs.size
    if k < 30:
        raise EstimationError(f"only {k} points in the fit window; need >= 30")
    lx = np.log10(xs)
    ly = np.log10(cc)
    sxx = np.sum((lx - lx.mean()) ** 2)
    if sxx <= 0.0:
        raise EstimationError("degenerate sample: no spread inside the fit window")
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    resid = ly - (ly.mean() + slope * (lx - lx.mean()))
    stderr = float(math.sqrt(float(np.sum(resid ** 2)) / (k - 2) / sxx))
    return TailEstimate(slope=slope, stderr=stderr, window=(lo, hi),
                        sample_count=n, points_used=k)


def detect_saturation(output, guard: float = 0.25) -> SaturationVerdict:
    """Classify a steady-state run as saturated: no departures in the final
    ``guard`` fraction of the horizon AND the final queue at least doubled
    since the last departure.

    The critical-time estimate is the last trajectory instant at which the
    queue sat at its global minimum (after it, the queue never came back
    down).
    """
    if not 0.0 < guard < 1.0:
        raise ValueError(f"guard fraction must be in (0, 1), got {guard}")
    if output.traj_t.size == 0:
        raise ValueError("empty trajectory")
    horizon = output.horizon
    no_late_departure = output.last_departure_time < horizon * (1.0 - guard)
    queue_doubled = output.final_queue >= 2 * output.queue_after_last_departure
    saturated = bool(no_late_departure and queue_doubled)
    qmin = int(output.traj_q.min())
    idx = int(np.flatnonzero(output.traj_q == qmin)[-1])
    critical_time = float(output.traj_t[idx])
    if output.last_departure_time > 0.0:
        rate = output.departures_at_last / output.last_departure_time
    else:
        rate = 0.0
    return SaturationVerdict(
        saturated=saturated,
        last_departure_time=output.last_departure_time,
        critical_time_estimate=critical_time,
        departure_rate_before=rate,
    )
