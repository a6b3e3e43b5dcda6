"""Univariate test statistics: one-sample t against chance, pooled
two-sample t, and the Student-t upper tail probability.

The one-sample test is the accuracy-vector test of the hierarchical
pipeline: t* = (mean(ACC) - mu) / (std(ACC) / sqrt(k)) with the sample
standard deviation (k - 1 divisor) and a one-sided upper-tail p-value on
k - 1 degrees of freedom.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, stdtrit

__all__ = [
    "TTestResult",
    "one_sample_t",
    "t_tail",
    "t_tail_many",
    "two_sample_t",
    "two_sample_t_many",
    "t_critical",
]


@dataclass(frozen=True)
class TTestResult:
    """t statistic, degrees of freedom, and one-sided upper-tail p-value."""

    t: float
    dof: int
    p: float
    degenerate: bool = False


def t_tail(t: float, dof: int) -> float:
    """Upper tail P(T >= t) of Student's t with ``dof`` degrees of freedom.

    Evaluated through the regularized incomplete beta function:
    for t >= 0, P = I_x(dof/2, 1/2) / 2 with x = dof / (dof + t^2),
    and by symmetry P(T >= t) = 1 - P(T >= -t) for t < 0.
    """
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    t = float(t)
    if np.isnan(t):
        raise ValueError("t is NaN")
    if np.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = dof / (dof + t * t)
    half_tail = 0.5 * float(betainc(dof / 2.0, 0.5, x))
    return half_tail if t >= 0 else 1.0 - half_tail


def t_tail_many(t: np.ndarray, dof: int) -> np.ndarray:
    """Vectorized :func:`t_tail` over an array of statistics."""
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    t = np.asarray(t, dtype=np.float64)
    x = dof / (dof + t * t)
    half_tail = 0.5 * betainc(dof / 2.0, 0.5, x)
    return np.where(t >= 0, half_tail, 1.0 - half_tail)


def t_critical(alpha_two_tailed: float, dof: int) -> float:
    """Two-tailed critical value: |t| with P(|T| > t) = alpha."""
    if not 0 < alpha_two_tailed < 1:
        raise ValueError(f"alpha must be in (0,1), got {alpha_two_tailed}")
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    return float(stdtrit(dof, 1.0 - alpha_two_tailed / 2.0))


def one_sample_t(acc, mu: float) -> TTestResult:
    """One-sided t-test of a metric vector against the chance level ``mu``.

    A zero-variance vector cannot produce a finite statistic; the result is
    the degenerate limit (p = 0 above chance, 1 below, 0.5 at chance) and is
    flagged as such.
    """
    values = np.asarray(getattr(acc, "values", acc), dtype=np.float64)
    k = values.size
    if k < 2:
        raise ValueError(f"need at least 2 values, got {k}")
    mean = float(np.mean(values))
    s = float(np.std(values, ddof=1))
    dof = k - 1
    if s == 0.0:
        if mean > mu:
            return TTestResult(t=np.inf, dof=dof, p=0.0, degenerate=True)
        if mean < mu:
            return TTestResult(t=-np.inf, dof=dof, p=1.0, degenerate=True)
        return TTestResult(t=0.0, dof=dof, p=0.5, degenerate=True)
    t = (mean - mu) / (s / np.sqrt(k))
    return TTestResult(t=t, dof=dof, p=t_tail(t, dof))


def two_sample_t(a, b) -> float:
    """Pooled-variance independent two-sample t statistic.

    t = (mean(a) - mean(b)) / (s_p * sqrt(1/n_a + 1/n_b)). When the pooled
    variance is zero the statistic degenerates: 0 for equal means, otherwise
    the largest finite float with the sign of the mean difference.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError(f"each sample needs >= 2 values, got {a.size} and {b.size}")
    na, nb = a.size, b.size
    diff = float(np.mean(a) - np.mean(b))
    pooled = ((na - 1) * np.var(a, ddof=1) + (nb - 1) * np.var(b, ddof=1)) / (na + nb - 2)
    if pooled == 0.0:
        if diff == 0.0:
            return 0.0
        return np.copysign(sys.float_info.max, diff)
    return diff / np.sqrt(pooled * (1.0 / na + 1.0 / nb))


def two_sample_t_many(data: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """Pooled two-sample t per variable, vectorized over a family.

    ``data`` is (trials, n_variables); ``codes`` holds the 0/1 group of each
    trial. Variables with zero pooled variance get t = 0 (degenerate; no
    spread to test against), which keeps permutation loops total.
    """
    data = np.asarray(data, dtype=np.float64)
    codes = np.asarray(codes)
    in_b = codes == 1
    na = int(np.sum(~in_b))
    nb = int(np.sum(in_b))
    if na < 2 or nb < 2:
        raise ValueError(f"each condition needs >= 2 trials, got {na} and {nb}")
    a = data[~in_b]
    b = data[in_b]
    diff = a.mean(axis=0) - b.mean(axis=0)
    ssq = (na - 1) * a.var(axis=0, ddof=1) + (nb - 1) * b.var(axis=0, ddof=1)
    pooled = ssq / (na + nb - 2)
    denom = np.sqrt(pooled * (1.0 / na + 1.0 / nb))
    t = np.zeros_like(diff)
    ok = denom > 0
    t[ok] = diff[ok] / denom[ok]
    return t
