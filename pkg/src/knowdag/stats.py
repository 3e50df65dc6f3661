"""Summary statistics and t-tests for the reporting layer.

Two-sided p-values come from the Student-t distribution evaluated through
the regularized incomplete beta function (continued-fraction expansion), so
the package does not depend on a stats library for its reported numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSampleError, ParameterError

ONE_SAMPLE = "one_sample_vs_zero"
TWO_SAMPLE = "two_sample_unpaired"


@dataclass(frozen=True)
class TestReport:
    mean: float
    stderr: float
    t_stat: float
    p_value: float
    significant: bool
    n: int
    kind: str
    df: float
    alpha: float

    def summary(self) -> str:
        return f"{self.mean:.5f} ± {self.stderr:.5f}"


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (Lentz's method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ParameterError("beta parameters must be positive")
    if x < 0 or x > 1:
        raise ParameterError("x must be in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """CDF of Student's t with `df` degrees of freedom."""
    if df <= 0:
        raise ParameterError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * betainc_reg(0.5 * df, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def two_sided_p(t: float, df: float) -> float:
    return 2.0 * student_t_cdf(-abs(t), df)


def one_sample_t(samples: Sequence[float], alpha: float = 0.05) -> TestReport:
    """Two-sided test of mean == 0 against Student-t with n-1 dof."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ParameterError(f"need a 1-d sample of size >= 2, got shape {x.shape}")
    n = x.size
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSampleError("one-sample t undefined for zero-variance sample")
    stderr = sd / math.sqrt(n)
    t = mean / stderr
    p = two_sided_p(t, n - 1)
    return TestReport(mean, stderr, t, p, p < alpha, n, ONE_SAMPLE, float(n - 1), alpha)


def two_sample_t(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> TestReport:
    """Welch's unequal-variance t-test with Welch-Satterthwaite dof."""
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    if xa.size < 2 or xb.size < 2:
        raise ParameterError("each group needs n >= 2")
    va = float(xa.var(ddof=1))
    vb = float(xb.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        raise DegenerateSampleError("Welch t undefined when both groups have zero variance")
    sa, sb = va / xa.size, vb / xb.size
    se = math.sqrt(sa + sb)
    diff = float(xa.mean() - xb.mean())
    t = diff / se
    df = (sa + sb) ** 2 / (
        (sa**2 / (xa.size - 1)) + (sb**2 / (xb.size - 1))
    )
    p = two_sided_p(t, df)
    return TestReport(
        diff, se, t, p, p < alpha, int(xa.size + xb.size), TWO_SAMPLE, df, alpha
    )


def summarize(samples: Sequence[float]) -> tuple[float, float]:
    """Mean and standard error of a sample (for table cells)."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ParameterError("cannot summarize an empty sample")
    if x.size == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))
