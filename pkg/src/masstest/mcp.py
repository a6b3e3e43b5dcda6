"""Multiple-comparison procedures over a family of hypotheses.

Threshold procedures on p-value vectors: Bonferroni, Holm step-down, and
the BH / BY / BKY step-up false-discovery-rate family. Resampling
procedures on the data itself: the max-statistic permutation test (strong
FWER control) and the KTMS generalized-FWER procedure that tolerates up
to ``u`` false discoveries.

Monte-Carlo p-values include the observed partition in the reference set
(the +1 convention), so they are valid and never smaller than
1/(n_perm + 1). With ``exhaustive=True`` every distinct assignment of
trials to groups is enumerated instead and the p-values are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Iterable

import numpy as np

from .rng import parallel_map, resolve_seed, spawn_rng
from .stats import t_tail, two_sample_t_many

__all__ = [
    "RejectionResult",
    "PermutationScheme",
    "bonferroni",
    "holm",
    "bh",
    "by",
    "bky",
    "tmax_test",
    "ktms",
]


@dataclass(frozen=True)
class RejectionResult:
    """Boolean rejection mask plus per-procedure diagnostics."""

    rejected: np.ndarray
    info: dict

    def __post_init__(self):
        object.__setattr__(self, "rejected", np.asarray(self.rejected, dtype=bool))

    @property
    def n_rejected(self) -> int:
        return int(np.sum(self.rejected))


@dataclass(frozen=True)
class PermutationScheme:
    """How to draw the random partitions of a permutation test."""

    n_perm: int = 1000
    seed: int | None = 0
    two_tailed: bool = True
    exhaustive: bool = False

    def __post_init__(self):
        if self.n_perm < 1:
            raise ValueError(f"n_perm must be >= 1, got {self.n_perm}")


def _checked_pvalues(p) -> np.ndarray:
    p = np.asarray(getattr(p, "values", p), dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError("empty p-value vector")
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise ValueError("p-values must lie in [0, 1]")
    return p


def _check_alpha(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    return float(alpha)


def _stepup_count(p_sorted: np.ndarray, thresholds: np.ndarray) -> int:
    """Largest i (1-based) with p_(i) <= threshold_i, or 0 if none."""
    ok = np.flatnonzero(p_sorted <= thresholds)
    return int(ok[-1]) + 1 if ok.size else 0


def _mask_from_sorted_prefix(order: np.ndarray, count: int, m: int) -> np.ndarray:
    mask = np.zeros(m, dtype=bool)
    mask[order[:count]] = True
    return mask


def bonferroni(p, alpha: float) -> RejectionResult:
    """Reject every hypothesis with p <= alpha / m."""
    p = _checked_pvalues(p)
    alpha = _check_alpha(alpha)
    threshold = alpha / p.size
    return RejectionResult(rejected=p <= threshold, info={"threshold": threshold})


def holm(p, alpha: float) -> RejectionResult:
    """Holm step-down: reject in ascending p order while p_(i) <= alpha/(m-i+1)."""
    p = _checked_pvalues(p)
    alpha = _check_alpha(alpha)
    m = p.size
    order = np.argsort(p, kind="stable")
    thresholds = alpha / (m - np.arange(m))
    failures = np.flatnonzero(p[order] > thresholds)
    count = int(failures[0]) if failures.size else m
    return RejectionResult(
        rejected=_mask_from_sorted_prefix(order, count, m),
        info={"cutoff_index": count, "thresholds": thresholds},
    )


def bh(p, alpha: float) -> RejectionResult:
    """Benjamini-Hochberg step-up FDR procedure.

    Rejects the hypotheses with the k smallest p-values, where k is the
    largest i with p_(i) <= (i/m) * alpha; none when no i satisfies it.
    """
    p = _checked_pvalues(p)
    alpha = _check_alpha(alpha)
    m = p.size
    order = np.argsort(p, kind="stable")
    thresholds = (np.arange(1, m + 1) / m) * alpha
    count = _stepup_count(p[order], thresholds)
    return RejectionResult(
        rejected=_mask_from_sorted_prefix(order, count, m),
        info={"cutoff_index": count, "thresholds": thresholds},
    )


def by(p, alpha: float) -> RejectionResult:
    """Benjamini-Yekutieli: BH thresholds shrunk by the harmonic number H_m."""
    p = _checked_pvalues(p)
    alpha = _check_alpha(alpha)
    m = p.size
    harmonic = float(np.sum(1.0 / np.arange(1, m + 1)))
    order = np.argsort(p, kind="stable")
    thresholds = (np.arange(1, m + 1) / (m * harmonic)) * alpha
    count = _stepup_count(p[order], thresholds)
    return RejectionResult(
        rejected=_mask_from_sorted_prefix(order, count, m),
        info={"cutoff_index": count, "thresholds": thresholds, "harmonic_number": harmonic},
    )


def bky(p, alpha: float) -> RejectionResult:
    """Two-stage adaptive step-up procedure.

    Stage 1 runs BH at alpha' = alpha/(1 + alpha) and counts r1 rejections.
    r1 = 0 rejects nothing, r1 = m rejects everything; otherwise stage 2
    reruns BH at alpha'' = (m / (m + r1)) * alpha'. The second-stage scale
    factor is recorded verbatim in the diagnostics.
    """
    p = _checked_pvalues(p)
    alpha = _check_alpha(alpha)
    m = p.size
    alpha_prime = alpha / (1.0 + alpha)
    stage1 = bh(p, alpha_prime)
    r1 = stage1.n_rejected
    info = {"alpha_prime": alpha_prime, "r1": r1, "stage2_scale": "m/(m+r1)"}
    if r1 == 0:
        return RejectionResult(rejected=np.zeros(m, dtype=bool), info=info)
    if r1 == m:
        return RejectionResult(rejected=np.ones(m, dtype=bool), info=info)
    alpha_second = (m / (m + r1)) * alpha_prime
    stage2 = bh(p, alpha_second)
    info["alpha_second"] = alpha_second
    info["cutoff_index"] = stage2.info["cutoff_index"]
    return RejectionResult(rejected=stage2.rejected, info=info)


def _family_matrix(data) -> tuple[np.ndarray, tuple[int, ...]]:
    """Flatten a TFRTensor or (trials, ...) array into (trials, n_variables)."""
    arr = np.asarray(getattr(data, "power", data), dtype=np.float64)
    if arr.ndim < 2:
        raise ValueError("data must have a trial axis plus at least one variable axis")
    var_shape = arr.shape[1:]
    return arr.reshape(arr.shape[0], -1), var_shape


def _group_codes(labels, n_trials: int) -> np.ndarray:
    codes = np.asarray(getattr(labels, "codes", labels))
    if codes.size != n_trials:
        raise ValueError(f"{codes.size} labels for {n_trials} trials")
    if not set(np.unique(codes)) <= {0, 1}:
        raise ValueError("label codes must be 0/1")
    if np.sum(codes == 0) < 2 or np.sum(codes == 1) < 2:
        raise ValueError("each condition needs at least 2 trials")
    return codes


def _iter_partitions(codes: np.ndarray, scheme: PermutationScheme) -> Iterable[np.ndarray]:
    """Yield permuted 0/1 code vectors with the original group sizes."""
    n = codes.size
    n_a = int(np.sum(codes == 0))
    if scheme.exhaustive:
        for group_a in combinations(range(n), n_a):
            perm = np.ones(n, dtype=codes.dtype)
            perm[list(group_a)] = 0
            yield perm
    else:
        seed = resolve_seed(scheme.seed)
        for i in range(scheme.n_perm):
            rng = spawn_rng(seed, i)
            perm = np.ones(n, dtype=codes.dtype)
            perm[rng.permutation(n)[:n_a]] = 0
            yield perm


def _max_stats(
    data: np.ndarray,
    codes: np.ndarray,
    scheme: PermutationScheme,
    rank: int = 1,
    threads: int = 1,
) -> np.ndarray:
    """Per-partition reference statistic: the rank-th largest |t| (or signed t)."""

    def one(perm_codes: np.ndarray) -> float:
        t = two_sample_t_many(data, perm_codes)
        mags = np.abs(t) if scheme.two_tailed else t
        if rank == 1:
            return float(np.max(mags))
        return float(np.sort(mags)[-rank])

    return np.asarray(parallel_map(one, list(_iter_partitions(codes, scheme)), threads))


def _mc_pvalues(observed: np.ndarray, reference: np.ndarray, exhaustive: bool) -> np.ndarray:
    exceed = (reference[:, None] >= observed[None, :]).sum(axis=0)
    if exhaustive:
        return exceed / reference.size
    return (exceed + 1.0) / (reference.size + 1.0)


def tmax_test(data, labels, scheme: PermutationScheme, threads: int = 1) -> np.ndarray:
    """Max-statistic permutation test over a variable family.

    Parameters
    ----------
    data : TFRTensor or array, shape (trials, ...)
        Trailing axes are flattened into the variable family.
    labels : LabelVector or 0/1 code array
        Condition of each trial.
    scheme : PermutationScheme
        Number of draws, seed, tail handling, and exhaustive switch.

    Returns
    -------
    p : array with the variable shape of ``data``
        Per-variable p-values: the proportion of partitions whose maximum
        (two-tailed: maximum absolute) t statistic reaches the observed one.
    """
    matrix, var_shape = _family_matrix(data)
    codes = _group_codes(labels, matrix.shape[0])
    t_obs = two_sample_t_many(matrix, codes)
    obs = np.abs(t_obs) if scheme.two_tailed else t_obs
    reference = _max_stats(matrix, codes, scheme, rank=1, threads=threads)
    p = _mc_pvalues(obs, reference, scheme.exhaustive)
    return p.reshape(var_shape)


def ktms(
    data,
    labels,
    u: int,
    scheme: PermutationScheme,
    alpha: float = 0.05,
    threads: int = 1,
) -> RejectionResult:
    """Permutation GFWER procedure tolerating up to ``u`` false discoveries.

    The ``u`` hypotheses with the smallest p-values are rejected outright;
    the rest are tested against the permutation distribution of the
    (u+1)-th most extreme statistic. With u = 0 this reduces to the
    max-statistic test thresholded at ``alpha``.
    """
    matrix, var_shape = _family_matrix(data)
    codes = _group_codes(labels, matrix.shape[0])
    m = matrix.shape[1]
    if not 0 <= u < m:
        raise ValueError(f"u must satisfy 0 <= u < {m}, got {u}")
    dof = matrix.shape[0] - 2
    t_obs = two_sample_t_many(matrix, codes)
    obs = np.abs(t_obs) if scheme.two_tailed else t_obs
    if scheme.two_tailed:
        p_param = np.array([2.0 * t_tail(abs(t), dof) for t in t_obs])
    else:
        p_param = np.array([t_tail(t, dof) for t in t_obs])
    order = np.argsort(p_param, kind="stable")
    auto = order[:u]
    reference = _max_stats(matrix, codes, scheme, rank=u + 1, threads=threads)
    adjusted = _mc_pvalues(obs, reference, scheme.exhaustive)
    adjusted[auto] = 0.0
    rejected = adjusted <= alpha
    return RejectionResult(
        rejected=rejected.reshape(var_shape),
        info={
            "u": u,
            "alpha": alpha,
            "auto_rejected": np.sort(auto),
            "adjusted_p": adjusted.reshape(var_shape),
            "sorting_p": p_param.reshape(var_shape),
        },
    )


def n_exhaustive_partitions(labels) -> int:
    """Number of distinct group assignments for exhaustive enumeration."""
    codes = np.asarray(getattr(labels, "codes", labels))
    return comb(codes.size, int(np.sum(codes == 0)))
