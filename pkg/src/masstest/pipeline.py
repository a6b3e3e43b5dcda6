"""The three-step hierarchical cross-validation testing procedure.

Step 1 screens channels: each channel's freq x time slab is compressed to
a u x v block of 2-D DCT coefficients, classified under stratified k-fold
cross-validation, and the fold metric vector is t-tested against chance.
BH correction over the nc channel p-values yields the significant set SC.
Step 2 repeats per (channel in SC, frequency row) with the first u 1-D
DCT coefficients of the time course; step 3 tests every time bin of the
surviving (channel, frequency) pairs on the raw power value alone. Each
step corrects only its own test family, which is what makes the
hierarchy less conservative than a one-shot correction over all
channel x freq x time cells.

The procedure stops as soon as a step returns an empty set. Every test
derives its CV seed from (seed, step, indices), so results are identical
at any worker count or loop order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .classify import stratified_kfold_cv
from .data import TFRTensor
from .dct import dct_basis
from .mcp import bh
from .rng import derive_seed, parallel_map
from .stats import one_sample_t

__all__ = [
    "PipelineConfig",
    "StepRecord",
    "SignificanceSets",
    "step1_channels",
    "step2_frequencies",
    "step3_timebins",
    "run_pipeline",
]

MIN_RECOMMENDED_TRIALS = 150
MIN_VALIDATION_SAMPLES = 10


@dataclass(frozen=True)
class PipelineConfig:
    """Adjustable parameters of the hierarchical procedure.

    ``alpha`` feeds the per-step BH correction, ``k`` the fold count,
    ``u``/``v`` the retained DCT block, ``mu`` the chance level the fold
    metric is tested against (0.5 for balanced binary accuracy; supply
    your own for the F1 metric under imbalance).
    """

    alpha: float = 0.05
    k: int = 15
    u: int = 5
    v: int = 5
    metric: str = "accuracy"
    mu: float = 0.5
    seed: int = 0
    lam: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.u < 1 or self.v < 1:
            raise ValueError(f"u and v must be >= 1, got {self.u}, {self.v}")
        if self.metric not in ("accuracy", "f1"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if not 15 <= self.k <= 25:
            warnings.warn(
                f"k={self.k} is outside the recommended 15..25 range for a "
                f"stable t approximation",
                stacklevel=2,
            )
        if not (3 <= self.u <= 7 and 3 <= self.v <= 7):
            warnings.warn(
                f"u={self.u}, v={self.v} outside the recommended 3..7 range",
                stacklevel=2,
            )


@dataclass(frozen=True)
class StepRecord:
    """Bookkeeping for one step's test family."""

    name: str
    test_ids: tuple
    p_values: np.ndarray
    acc_mean: np.ndarray
    rejected: np.ndarray

    @property
    def n_tests(self) -> int:
        return len(self.test_ids)


@dataclass(frozen=True)
class SignificanceSets:
    """Nested result sets SC / SCF / SCFT plus per-step reports.

    Indices are 0-based: ``sc`` holds channel indices, ``scf`` holds
    (channel, freq) pairs, ``scft`` holds (channel, freq, time) triples.
    """

    sc: tuple
    scf: tuple
    scft: tuple
    steps: tuple
    outcome: str
    config: PipelineConfig | None = None

    def __post_init__(self):
        sc = set(self.sc)
        scf = set(self.scf)
        for l, i in self.scf:
            if l not in sc:
                raise ValueError(f"SCF pair ({l},{i}) has channel outside SC")
        for l, i, j in self.scft:
            if (l, i) not in scf:
                raise ValueError(f"SCFT triple ({l},{i},{j}) has pair outside SCF")

    @property
    def stop_stage(self) -> int:
        """1/2/3 when the hierarchy stopped with an empty set, 0 on findings."""
        return {"stopped_step1": 1, "stopped_step2": 2, "stopped_step3": 3, "findings": 0}[
            self.outcome
        ]

    def n_tests(self) -> dict:
        return {rec.name: rec.n_tests for rec in self.steps}


def _cv_pvalue(features: np.ndarray, labels, cfg: PipelineConfig, seed: int) -> tuple[float, float]:
    acc = stratified_kfold_cv(features, labels, cfg.k, seed, metric=cfg.metric, lam=cfg.lam)
    result = one_sample_t(acc, cfg.mu)
    return result.p, float(np.mean(acc.values))


def step1_channels(
    t: TFRTensor, cfg: PipelineConfig, threads: int = 1
) -> tuple[tuple, StepRecord]:
    """Screen all channels; returns (SC, record). One test per channel."""
    basis_f = dct_basis(t.n_freqs)
    basis_t = dct_basis(t.n_times)
    if cfg.u > t.n_freqs or cfg.v > t.n_times:
        raise ValueError(
            f"DCT mask {cfg.u}x{cfg.v} exceeds grid {t.n_freqs}x{t.n_times}"
        )

    def one(l: int) -> tuple[float, float]:
        coeffs = basis_f @ t.power[:, l] @ basis_t.T
        features = coeffs[:, : cfg.u, : cfg.v].reshape(t.n_trials, -1)
        return _cv_pvalue(features, t.labels, cfg, derive_seed(cfg.seed, 1, l))

    results = parallel_map(one, range(t.n_channels), threads)
    p = np.asarray([r[0] for r in results])
    acc = np.asarray([r[1] for r in results])
    rejected = bh(p, cfg.alpha).rejected
    sc = tuple(int(l) for l in np.flatnonzero(rejected))
    record = StepRecord(
        name="channels",
        test_ids=tuple(range(t.n_channels)),
        p_values=p,
        acc_mean=acc,
        rejected=rejected,
    )
    return sc, record


def step2_frequencies(
    t: TFRTensor, sc: tuple, cfg: PipelineConfig, threads: int = 1
) -> tuple[tuple, StepRecord]:
    """Test every frequency row of the SC channels; len(SC) * m tests."""
    if not sc:
        empty = StepRecord("frequencies", (), np.empty(0), np.empty(0), np.empty(0, dtype=bool))
        return (), empty
    basis_t = dct_basis(t.n_times)
    if cfg.u > t.n_times:
        raise ValueError(f"u={cfg.u} exceeds the {t.n_times} time bins")
    test_ids = tuple((int(l), int(i)) for l in sc for i in range(t.n_freqs))

    def one(pair: tuple) -> tuple[float, float]:
        l, i = pair
        features = t.power[:, l, i, :] @ basis_t.T[:, : cfg.u]
        return _cv_pvalue(features, t.labels, cfg, derive_seed(cfg.seed, 2, l, i))

    results = parallel_map(one, test_ids, threads)
    p = np.asarray([r[0] for r in results])
    acc = np.asarray([r[1] for r in results])
    rejected = bh(p, cfg.alpha).rejected
    scf = tuple(tid for tid, rej in zip(test_ids, rejected) if rej)
    record = StepRecord("frequencies", test_ids, p, acc, rejected)
    return scf, record


def step3_timebins(
    t: TFRTensor, scf: tuple, cfg: PipelineConfig, threads: int = 1
) -> tuple[tuple, StepRecord]:
    """Test every time bin of the SCF pairs on raw power; len(SCF) * n tests."""
    if not scf:
        empty = StepRecord("timebins", (), np.empty(0), np.empty(0), np.empty(0, dtype=bool))
        return (), empty
    test_ids = tuple((int(l), int(i), int(j)) for l, i in scf for j in range(t.n_times))

    def one(triple: tuple) -> tuple[float, float]:
        l, i, j = triple
        features = t.power[:, l, i, j][:, None]
        return _cv_pvalue(features, t.labels, cfg, derive_seed(cfg.seed, 3, l, i, j))

    results = parallel_map(one, test_ids, threads)
    p = np.asarray([r[0] for r in results])
    acc = np.asarray([r[1] for r in results])
    rejected = bh(p, cfg.alpha).rejected
    scft = tuple(tid for tid, rej in zip(test_ids, rejected) if rej)
    record = StepRecord("timebins", test_ids, p, acc, rejected)
    return scft, record


def run_pipeline(t: TFRTensor, cfg: PipelineConfig | None = None, threads: int = 1) -> SignificanceSets:
    """Run steps 1 -> 2 -> 3, stopping early at the first empty set."""
    cfg = cfg or PipelineConfig()
    counts = t.labels.class_counts()
    if min(counts) < 2 * cfg.k:
        raise ValueError(
            f"each condition needs at least 2*k={2 * cfg.k} trials for k={cfg.k} "
            f"folds, got {counts}"
        )
    if t.n_trials < MIN_RECOMMENDED_TRIALS:
        warnings.warn(
            f"dataset has {t.n_trials} trials; fewer than {MIN_RECOMMENDED_TRIALS} "
            f"degrades both the accuracy and the p-value approximation",
            stacklevel=2,
        )
    if t.n_trials / cfg.k < MIN_VALIDATION_SAMPLES:
        warnings.warn(
            f"k={cfg.k} leaves validation folds below {MIN_VALIDATION_SAMPLES} "
            f"samples ({t.n_trials} trials)",
            stacklevel=2,
        )
    sc, rec1 = step1_channels(t, cfg, threads)
    if not sc:
        return SignificanceSets((), (), (), (rec1,), "stopped_step1", cfg)
    scf, rec2 = step2_frequencies(t, sc, cfg, threads)
    if not scf:
        return SignificanceSets(sc, (), (), (rec1, rec2), "stopped_step2", cfg)
    scft, rec3 = step3_timebins(t, scf, cfg, threads)
    outcome = "findings" if scft else "stopped_step3"
    return SignificanceSets(sc, scf, scft, (rec1, rec2, rec3), outcome, cfg)
