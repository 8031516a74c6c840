"""Positive continuous laws used for job sizes, failure gaps and interarrivals.

Five families are supported: point mass ("deterministic"), exponential,
Weibull, Pareto and uniform.  The Weibull tail is parameterized as
``ccdf(x) = exp(-(x/scale)**shape)`` and the Pareto tail as
``ccdf(x) = (scale/x)**index`` for ``x >= scale``; the Pareto index must
exceed 1 so the mean exists.

Sampling is inverse-CCDF throughout: exactly one uniform per variate (even
for the point mass), which keeps replications reproducible and lets the
compiled engine reproduce the pure-Python draw sequence bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .rng import RngStream

# family tags (shared with the compiled kernel)
DETERMINISTIC = 0
EXPONENTIAL = 1
WEIBULL = 2
PARETO = 3
UNIFORM = 4

_FAMILY_NAMES = {
    DETERMINISTIC: "deterministic",
    EXPONENTIAL: "exponential",
    WEIBULL: "weibull",
    PARETO: "pareto",
    UNIFORM: "uniform",
}


@dataclass(frozen=True)
class DistSpec:
    """Immutable description of a positive law: a family tag plus two
    family-specific parameters ``a`` and ``b`` (``b`` unused where noted).

    deterministic: a = value           exponential: a = rate
    weibull:       a = scale, b = shape
    pareto:        a = scale, b = index
    uniform:       a = lo,    b = hi
    """

    family: int
    a: float
    b: float = 0.0

    @property
    def family_name(self) -> str:
        return _FAMILY_NAMES[self.family]

    def __repr__(self) -> str:
        if self.family == DETERMINISTIC:
            return f"Deterministic({self.a!r})"
        if self.family == EXPONENTIAL:
            return f"Exponential(rate={self.a!r})"
        if self.family == WEIBULL:
            return f"Weibull(scale={self.a!r}, shape={self.b!r})"
        if self.family == PARETO:
            return f"Pareto(scale={self.a!r}, index={self.b!r})"
        return f"Uniform({self.a!r}, {self.b!r})"


def Deterministic(value: float) -> DistSpec:
    if not value > 0:
        raise ValueError(f"deterministic value must be > 0, got {value}")
    return DistSpec(DETERMINISTIC, float(value))


def Exponential(rate: float) -> DistSpec:
    if not rate > 0:
        raise ValueError(f"exponential rate must be > 0, got {rate}")
    return DistSpec(EXPONENTIAL, float(rate))


def Weibull(scale: float, shape: float) -> DistSpec:
    if not (scale > 0 and shape > 0):
        raise ValueError(f"weibull scale and shape must be > 0, got {scale}, {shape}")
    return DistSpec(WEIBULL, float(scale), float(shape))


def Pareto(scale: float, index: float) -> DistSpec:
    if not scale > 0:
        raise ValueError(f"pareto scale must be > 0, got {scale}")
    if not index > 1:
        raise ValueError(f"pareto index must be > 1 so the mean is finite, got {index}")
    return DistSpec(PARETO, float(scale), float(index))


def Uniform(lo: float, hi: float) -> DistSpec:
    if not (lo >= 0 and hi > lo):
        raise ValueError(f"uniform bounds must satisfy 0 <= lo < hi, got {lo}, {hi}")
    return DistSpec(UNIFORM, float(lo), float(hi))


def inverse_ccdf_from_uniform(spec: DistSpec, u: float) -> float:
    """Map one uniform draw ``u`` in (0, 1) to a variate of ``spec``.

    This scalar path uses libm (via :mod:`math`) and is the canonical draw
    shared with the compiled kernel.
    """
    fam = spec.family
    if fam == DETERMINISTIC:
        return spec.a
    if fam == EXPONENTIAL:
        return -math.log1p(-u) / spec.a
    if fam == WEIBULL:
        return spec.a * math.pow(-math.log1p(-u), 1.0 / spec.b)
    if fam == PARETO:
        return spec.a * math.pow(1.0 - u, -1.0 / spec.b)
    return spec.a + (spec.b - spec.a) * u


def sample(spec: DistSpec, stream: RngStream) -> float:
    """One draw from ``spec``, consuming exactly one uniform."""
    return inverse_ccdf_from_uniform(spec, stream.next_float())


def sample_batch(spec: DistSpec, stream: RngStream, n: int) -> np.ndarray:
    """``n`` draws, identical to ``n`` successive :func:`sample` calls."""
    us = stream.uniforms(n)
    out = np.empty(n, dtype=np.float64)
    f = inverse_ccdf_from_uniform
    for i in range(n):
        out[i] = f(spec, us[i])
    return out


def ccdf(spec: DistSpec, x: float) -> float:
    """Tail probability P(X > x) for x >= 0."""
    if x < 0:
        raise ValueError(f"ccdf argument must be >= 0, got {x}")
    fam = spec.family
    if fam == DETERMINISTIC:
        return 1.0 if x < spec.a else 0.0
    if fam == EXPONENTIAL:
        return math.exp(-spec.a * x)
    if fam == WEIBULL:
        return math.exp(-math.pow(x / spec.a, spec.b)) if x > 0 else 1.0
    if fam == PARETO:
        return 1.0 if x < spec.a else math.pow(spec.a / x, spec.b)
    if x <= spec.a:
        return 1.0
    if x >= spec.b:
        return 0.0
    return (spec.b - x) / (spec.b - spec.a)


def cdf(spec: DistSpec, x: float) -> float:
    return 1.0 - ccdf(spec, x)


def pdf(spec: DistSpec, x: float) -> float:
    """Density at x (zero outside the support; undefined for the point mass)."""
    fam = spec.family
    if fam == DETERMINISTIC:
        raise ValueError("point mass has no density")
    if x < 0:
        return 0.0
    if fam == EXPONENTIAL:
        return spec.a * math.exp(-spec.a * x)
    if fam == WEIBULL:
        if x <= 0:
            return 0.0
        z = x / spec.a
        return (spec.b / spec.a) * math.pow(z, spec.b - 1.0) * math.exp(-math.pow(z, spec.b))
    if fam == PARETO:
        if x < spec.a:
            return 0.0
        return spec.b * math.pow(spec.a, spec.b) * math.pow(x, -spec.b - 1.0)
    if spec.a <= x <= spec.b:
        return 1.0 / (spec.b - spec.a)
    return 0.0


def quantile(spec: DistSpec, q: float) -> float:
    """Inverse CDF; q in [0, 1)."""
    if not 0.0 <= q < 1.0:
        raise ValueError(f"quantile level must be in [0, 1), got {q}")
    return inverse_ccdf_from_uniform(spec, q)


def mean(spec: DistSpec) -> float:
    fam = spec.family
    if fam == DETERMINISTIC:
        return spec.a
    if fam == EXPONENTIAL:
        return 1.0 / spec.a
    if fam == WEIBULL:
        return spec.a * math.gamma(1.0 + 1.0 / spec.b)
    if fam == PARETO:
        return spec.a * spec.b / (spec.b - 1.0)
    return 0.5 * (spec.a + spec.b)


def second_moment(spec: DistSpec) -> float:
    """E[X^2]; infinite for Pareto index <= 2."""
    fam = spec.family
    if fam == DETERMINISTIC:
        return spec.a * spec.a
    if fam == EXPONENTIAL:
        return 2.0 / (spec.a * spec.a)
    if fam == WEIBULL:
        return spec.a * spec.a * math.gamma(1.0 + 2.0 / spec.b)
    if fam == PARETO:
        if spec.b <= 2.0:
            return math.inf
        return spec.a * spec.a * spec.b / (spec.b - 2.0)
    return (spec.b ** 3 - spec.a ** 3) / (3.0 * (spec.b - spec.a))


def truncated_mean_below(spec: DistSpec, beta: float) -> float:
    """E[X * 1{X < beta}].

    Closed forms everywhere except Weibull, which uses adaptive quadrature
    with absolute tolerance 1e-10.
    """
    if not beta > 0:
        raise ValueError(f"cutoff must be > 0, got {beta}")
    fam = spec.family
    if fam == DETERMINISTIC:
        return spec.a if spec.a < beta else 0.0
    if fam == EXPONENTIAL:
        mu = spec.a
        if mu * beta > 700.0:
            return 1.0 / mu
        return (1.0 - math.exp(-mu * beta) * (1.0 + mu * beta)) / mu
    if fam == PARETO:
        xm, a = spec.a, spec.b
        if beta <= xm:
            return 0.0
        return (a / (a - 1.0)) * (xm - math.pow(xm, a) * math.pow(beta, 1.0 - a))
    if fam == UNIFORM:
        lo, hi = spec.a, spec.b
        if beta <= lo:
            return 0.0
        if beta >= hi:
            return 0.5 * (lo + hi)
        return (beta * beta - lo * lo) / (2.0 * (hi - lo))
    # Weibull
    upper = min(beta, quantile(spec, 1.0 - 1e-16))
    if upper <= 0:
        return 0.0
    val, _ = integrate.quad(lambda x: x * pdf(spec, x), 0.0, upper,
                            epsabs=1e-10, epsrel=1e-12, limit=200)
    return val


def hazard_proportional_job_dist(failure_spec: DistSpec, alpha: float) -> DistSpec:
    """Job-size law whose log-tail is exactly ``alpha`` times the failure
    law's log-tail: ``log ccdf_job(x) = alpha * log ccdf_failure(x)``.

    Representable in-family only for exponential (rate scaled by alpha) and
    Weibull (scale multiplied by alpha**(-1/shape)).
    """
    if not alpha > 1:
        raise ValueError(f"proportionality constant must be > 1, got {alpha}")
    if failure_spec.family == EXPONENTIAL:
        return Exponential(failure_spec.a * alpha)
    if failure_spec.family == WEIBULL:
        scale = failure_spec.a * math.pow(alpha, -1.0 / failure_spec.b)
        return Weibull(scale, failure_spec.b)
    raise ValueError(
        f"exact hazard proportionality is not representable for "
        f"{failure_spec.family_name} failure laws"
    )


def upper_support(spec: DistSpec) -> float:
    """Least x with P(X > x) = 0 (inf for unbounded laws)."""
    if spec.family == DETERMINISTIC:
        return spec.a
    if spec.family == UNIFORM:
        return spec.b
    return math.inf
