"""Descriptive statistics and the two-sample Student's t-test.

The t-distribution tail is evaluated through the regularized incomplete
beta function, computed with a Lentz-style continued fraction to absolute
tolerance 1e-10. Pooled variance is the default (the classical Student
test); Welch's variant is available behind a flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_BETACF_TOL = 1e-12
_BETACF_MAX_ITER = 500
_TINY = 1e-300


@dataclass(frozen=True)
class SampleSummary:
    n: int  # total runs in the experiment cell
    successes: int  # runs that reached the goal
    mean: float | None  # over successful runs only
    std: float | None  # n-1 denominator; None when no successes

    @property
    def has_successes(self) -> bool:
        return self.successes > 0


def summarize(values, n_total: int | None = None) -> SampleSummary:
    """Mean and sample standard deviation of successful-run outcomes.

    `values` holds one entry per successful run; an empty list yields the
    no-successes marker (mean/std of None).
    """
    values = [float(v) for v in values]
    count = len(values)
    n = count if n_total is None else int(n_total)
    if count == 0:
        return SampleSummary(n=n, successes=0, mean=None, std=None)
    mean = sum(values) / count
    if count == 1:
        std = 0.0
    else:
        std = math.sqrt(sum((v - mean) ** 2 for v in values) / (count - 1))
    return SampleSummary(n=n, successes=count, mean=mean, std=std)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_TOL:
            return h
    raise ArithmeticError(f"incomplete beta CF failed to converge for a={a} b={b} x={x}")


def incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"a and b must be > 0, got a={a} b={b}")
    if x < 0.0 or x > 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided p-value for a t statistic with df degrees of freedom."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be > 0, got {df}")
    if math.isinf(t):
        return 0.0
    return incomplete_beta(0.5 * df, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float


def t_test(a, b, welch: bool = False) -> TTestResult:
    """Two-sample t-test on independent samples (pooled variance by default).

    Degenerate case: zero variance in both samples gives t=0, p=1 when the
    means agree and a p=0 marker (infinite t) when they differ.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError("both samples need at least 2 observations")
    mean_a = sum(a) / na
    mean_b = sum(b) / nb
    var_a = sum((v - mean_a) ** 2 for v in a) / (na - 1)
    var_b = sum((v - mean_b) ** 2 for v in b) / (nb - 1)
    diff = mean_a - mean_b
    if welch:
        se2 = var_a / na + var_b / nb
        if se2 == 0.0:
            df = float(na + nb - 2)
            if diff == 0.0:
                return TTestResult(0.0, df, 1.0)
            return TTestResult(math.copysign(math.inf, diff), df, 0.0)
        df = se2 * se2 / (
            (var_a / na) ** 2 / (na - 1) + (var_b / nb) ** 2 / (nb - 1)
        )
        t = diff / math.sqrt(se2)
        return TTestResult(t, df, t_sf_two_sided(t, df))
    df = float(na + nb - 2)
    pooled = ((na - 1) * var_a + (nb - 1) * var_b) / df
    if pooled == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, df, 1.0)
        return TTestResult(math.copysign(math.inf, diff), df, 0.0)
    t = diff / math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    return TTestResult(t, df, t_sf_two_sided(t, df))
