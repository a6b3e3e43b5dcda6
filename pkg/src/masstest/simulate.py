"""Ground-truth synthetic tensors and procedure evaluation.

Baseline power is half-normal noise smoothed over the freq/time grid,
with a rank-one factor shared across channels, so variables carry the
spatial / spectral / temporal correlations that make multiple-comparison
behavior interesting. A ground-truth effect is an additive mean shift at
a known set of (channel, freq, time) triples for the second condition.

Because the truth is known, any procedure's output can be scored for
sensitivity and false discoveries, and label permutations of an effect
dataset exercise the validity of the hierarchical pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import gaussian_filter

from .cluster import ClusterTestConfig, cluster_permutation_test
from .data import LabelVector, SensorLayout, TFRTensor
from .mcp import PermutationScheme, bh, ktms, tmax_test
from .pipeline import PipelineConfig, SignificanceSets, run_pipeline
from .rng import derive_seed, spawn_rng
from .stats import t_tail_many, two_sample_t_many

__all__ = [
    "EffectSpec",
    "EvalMetrics",
    "ScenarioSpec",
    "broad_effect",
    "narrow_effect",
    "default_broad_effect",
    "default_narrow_effect",
    "scenario_from_dict",
    "grid_layout",
    "gen_dataset",
    "evaluate",
    "significant_cluster_triples",
    "permutation_validity",
    "ValidityResult",
    "compare_procedures",
    "write_metrics_csv",
]

PROCEDURES = ("pipeline", "cluster", "bh", "tmax", "ktms")


@dataclass(frozen=True)
class EffectSpec:
    """Where the ground-truth effect lives and how strong it is."""

    triples: tuple
    amplitude: float
    shape: str = "custom"

    def __post_init__(self):
        triples = tuple(tuple(int(v) for v in tr) for tr in self.triples)
        if any(len(tr) != 3 for tr in triples):
            raise ValueError("effect members must be (channel, freq, time) triples")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        object.__setattr__(self, "triples", triples)

    def __len__(self) -> int:
        return len(self.triples)


def broad_effect(channels, freqs, times, amplitude: float) -> EffectSpec:
    """Block effect over the cartesian product of the given index ranges."""
    triples = tuple((c, f, t) for c in channels for f in freqs for t in times)
    return EffectSpec(triples=triples, amplitude=amplitude, shape="broad")


def narrow_effect(channel: int, freq: int, time: int, amplitude: float) -> EffectSpec:
    """Effect confined to a single (channel, freq, time) cell."""
    return EffectSpec(triples=((channel, freq, time),), amplitude=amplitude, shape="narrow")


def default_broad_effect(dims: tuple, amplitude: float) -> EffectSpec:
    """Broad block for a given grid: up to 4 leading channels, the central
    third of the frequency axis, the central half of the time axis."""
    nc, m, n = (int(d) for d in dims)
    channels = range(min(4, nc))
    f_lo, f_span = m // 3, max(1, m // 3)
    t_lo, t_span = n // 4, max(1, n // 2)
    freqs = range(f_lo, min(m, f_lo + f_span))
    times = range(t_lo, min(n, t_lo + t_span))
    return broad_effect(channels, freqs, times, amplitude)


def default_narrow_effect(dims: tuple, amplitude: float) -> EffectSpec:
    """Single-cell effect at the grid center."""
    nc, m, n = (int(d) for d in dims)
    return narrow_effect(nc // 2, m // 2, n // 2, amplitude)


def scenario_from_dict(d: dict, effect_override: EffectSpec | None = None) -> "ScenarioSpec":
    """Build a ScenarioSpec from a JSON-style dict.

    The ``effect`` entry may be null, carry explicit ``triples``, or give
    ``channels``/``freqs``/``times`` index lists for a block effect.
    """
    dims = tuple(int(v) for v in d.get("dims", (10, 12, 20)))
    effect = effect_override
    if effect is None and d.get("effect"):
        e = d["effect"]
        amplitude = float(e["amplitude"])
        if "triples" in e:
            effect = EffectSpec(
                triples=tuple(tuple(tr) for tr in e["triples"]),
                amplitude=amplitude,
                shape=e.get("shape", "custom"),
            )
        elif {"channels", "freqs", "times"} <= set(e):
            effect = broad_effect(e["channels"], e["freqs"], e["times"], amplitude)
        else:
            raise ValueError(
                "effect spec needs either 'triples' or 'channels'/'freqs'/'times'"
            )
    return ScenarioSpec(
        name=str(d["name"]),
        dims=dims,
        n_trials_per_cond=int(d.get("n_trials_per_cond", 75)),
        effect=effect,
        noise_sigma=float(d.get("noise_sigma", 1.0)),
        trial_corr=float(d.get("trial_corr", 2.0)),
        channel_corr=float(d.get("channel_corr", 0.3)),
    )


@dataclass(frozen=True)
class EvalMetrics:
    """Scores of a detection result against the ground truth."""

    sensitivity: float
    fdp: float
    any_false_discovery: bool
    effect_detected: bool
    n_detected: int

    def __post_init__(self):
        if not 0 <= self.sensitivity <= 1 or not 0 <= self.fdp <= 1:
            raise ValueError("proportions must lie in [0, 1]")


@dataclass(frozen=True)
class ScenarioSpec:
    """A named data-generating configuration for the comparison harness."""

    name: str
    dims: tuple = (10, 12, 20)
    n_trials_per_cond: int = 75
    effect: EffectSpec | None = None
    noise_sigma: float = 1.0
    trial_corr: float = 2.0
    channel_corr: float = 0.3


def grid_layout(n_channels: int) -> SensorLayout:
    """Unit-spaced, roughly square 2-D layout for synthetic channels."""
    cols = int(np.ceil(np.sqrt(n_channels)))
    pos = [(float(i % cols), float(i // cols)) for i in range(n_channels)]
    names = tuple(f"ch{i:02d}" for i in range(n_channels))
    return SensorLayout(channel_names=names, positions=np.asarray(pos))


def gen_dataset(
    dims: tuple,
    n_trials_per_cond: int,
    effect: EffectSpec | None = None,
    noise_sigma: float = 1.0,
    trial_corr: float = 2.0,
    seed: int | None = 0,
    channel_corr: float = 0.3,
) -> TFRTensor:
    """Synthetic TFR tensor with a known (possibly absent) effect.

    Baseline: |N(0, noise_sigma)| per cell, mixing in a shared-across-
    channels field with weight ``channel_corr`` before the magnitude, then
    Gaussian-smoothed over the freq/time grid with width ``trial_corr``
    cells. Trials of condition "B" (the second class) get ``amplitude``
    added at the effect triples. Trials are ordered A-block then B-block;
    everything is deterministic in ``seed``.
    """
    nc, m, n = (int(d) for d in dims)
    if nc < 1 or m < 1 or n < 1:
        raise ValueError(f"dims must be positive, got {dims}")
    if not noise_sigma > 0:
        raise ValueError(f"noise_sigma must be > 0, got {noise_sigma}")
    if not 0 <= channel_corr < 1:
        raise ValueError(f"channel_corr must be in [0, 1), got {channel_corr}")
    if effect is not None:
        for c, f, t in effect.triples:
            if not (0 <= c < nc and 0 <= f < m and 0 <= t < n):
                raise ValueError(f"effect triple ({c},{f},{t}) outside dims {dims}")
    n_trials = 2 * n_trials_per_cond
    rng = np.random.default_rng(seed)
    own = rng.standard_normal((n_trials, nc, m, n))
    shared = rng.standard_normal((n_trials, 1, m, n))
    z = np.sqrt(1.0 - channel_corr) * own + np.sqrt(channel_corr) * shared
    baseline = np.abs(noise_sigma * z)
    if trial_corr > 0:
        baseline = gaussian_filter(baseline, sigma=(0, 0, trial_corr, trial_corr))
    if effect is not None and effect.amplitude != 0.0:
        idx = np.asarray(effect.triples)
        baseline[n_trials_per_cond:, idx[:, 0], idx[:, 1], idx[:, 2]] += effect.amplitude
    labels = LabelVector(("A",) * n_trials_per_cond + ("B",) * n_trials_per_cond)
    return TFRTensor(
        power=baseline,
        freq_axis=np.arange(1.0, m + 1.0),
        time_axis=np.arange(n) * 0.05,
        channel_names=tuple(f"ch{i:02d}" for i in range(nc)),
        labels=labels,
    )


def significant_cluster_triples(clusters, test_alpha: float = 0.025) -> set:
    """Member triples of every cluster with p <= test_alpha."""
    out = set()
    for cl in clusters:
        if cl.p is not None and cl.p <= test_alpha:
            out |= cl.members
    return out


def _detected_triples(result) -> set:
    if isinstance(result, SignificanceSets):
        return set(result.scft)
    if isinstance(result, np.ndarray):
        if result.dtype != bool:
            raise ValueError("array results must be a boolean detection mask")
        return {tuple(int(v) for v in idx) for idx in np.argwhere(result)}
    return {tuple(int(v) for v in tr) for tr in result}


def evaluate(result, truth: EffectSpec | None) -> EvalMetrics:
    """Score a detection result against the ground-truth effect.

    ``result`` may be a SignificanceSets, a boolean mask over the variable
    grid, or any iterable of (channel, freq, time) triples. Sensitivity is
    the detected fraction of the truth, FDP the non-truth fraction of the
    detections (both with a max(1, .) guard on the denominator).
    """
    detected = _detected_triples(result)
    true_set = set(truth.triples) if truth is not None else set()
    hits = detected & true_set
    sensitivity = len(hits) / max(1, len(true_set))
    fdp = len(detected - true_set) / max(1, len(detected))
    return EvalMetrics(
        sensitivity=sensitivity,
        fdp=fdp,
        any_false_discovery=len(detected - true_set) > 0,
        effect_detected=len(hits) > 0,
        n_detected=len(detected),
    )


@dataclass(frozen=True)
class ValidityResult:
    """Stop-stage bookkeeping of a label-permutation experiment."""

    outcomes: tuple
    total_scft: int

    def histogram(self) -> dict:
        keys = ("stopped_step1", "stopped_step2", "stopped_step3", "findings")
        return {k: sum(1 for o in self.outcomes if o == k) for k in keys}

    def stop_fraction(self, stage: int) -> float:
        key = f"stopped_step{stage}"
        return self.histogram()[key] / max(1, len(self.outcomes))


def permutation_validity(
    t: TFRTensor,
    cfg: PipelineConfig,
    n_perm: int,
    seed: int | None = 0,
    permutations=None,
    threads: int = 1,
) -> ValidityResult:
    """Run the pipeline on label-permuted copies of a dataset.

    Random trial permutations are drawn per index from the seed; an
    explicit list of permutation index arrays can be supplied instead
    (e.g. the identity, to reproduce a plain run).
    """
    if n_perm < 1:
        raise ValueError(f"n_perm must be >= 1, got {n_perm}")
    if permutations is not None:
        permutations = [np.asarray(p) for p in permutations]
        if len(permutations) != n_perm:
            raise ValueError(f"{len(permutations)} permutations given for n_perm={n_perm}")
    base = 0 if seed is None else seed
    outcomes = []
    total = 0
    for r in range(n_perm):
        if permutations is not None:
            order = permutations[r]
        else:
            order = spawn_rng(base, r).permutation(t.n_trials)
        result = run_pipeline(t.with_labels(t.labels.permuted(order)), cfg, threads=threads)
        outcomes.append(result.outcome)
        total += len(result.scft)
    return ValidityResult(outcomes=tuple(outcomes), total_scft=total)


def _run_procedure(
    name: str,
    data: TFRTensor,
    layout: SensorLayout,
    alpha: float,
    pipeline_cfg: PipelineConfig,
    cluster_cfg: ClusterTestConfig,
    perm_n: int,
    ktms_u: int,
    seed: int,
    threads: int,
) -> set:
    """Detected triples of one procedure on one dataset."""
    if name == "pipeline":
        cfg = replace(pipeline_cfg, seed=derive_seed(seed, 1))
        return set(run_pipeline(data, cfg, threads=threads).scft)
    if name == "cluster":
        cfg = replace(cluster_cfg, seed=derive_seed(seed, 2))
        _, clusters = cluster_permutation_test(data, data.labels, layout, cfg, threads=threads)
        return significant_cluster_triples(clusters, cfg.test_alpha)
    if name == "bh":
        tstats = two_sample_t_many(data.power.reshape(data.n_trials, -1), data.labels.codes)
        p = 2.0 * t_tail_many(np.abs(tstats), data.n_trials - 2)
        mask = bh(p, alpha).rejected.reshape(data.power.shape[1:])
        return _detected_triples(mask)
    if name == "tmax":
        scheme = PermutationScheme(n_perm=perm_n, seed=derive_seed(seed, 3))
        p = tmax_test(data, data.labels, scheme, threads=threads)
        return _detected_triples(p <= alpha)
    if name == "ktms":
        scheme = PermutationScheme(n_perm=perm_n, seed=derive_seed(seed, 4))
        result = ktms(data, data.labels, ktms_u, scheme, alpha=alpha, threads=threads)
        return _detected_triples(result.rejected)
    raise ValueError(f"unknown procedure {name!r}; choose from {PROCEDURES}")


def compare_procedures(
    scenarios,
    procedures,
    n_sims: int,
    seed: int = 0,
    alpha: float = 0.05,
    pipeline_cfg: PipelineConfig | None = None,
    cluster_cfg: ClusterTestConfig | None = None,
    perm_n: int = 500,
    ktms_u: int = 1,
    threads: int = 1,
) -> list[dict]:
    """Monte-Carlo comparison of procedures across data scenarios.

    Each (scenario, replicate) generates one dataset that all procedures
    see, so sensitivity comparisons are paired. Returns one row per
    (scenario, procedure) with means, rates, and Monte-Carlo standard
    errors; ``write_metrics_csv`` serializes the rows.
    """
    if not scenarios or not procedures:
        raise ValueError("need at least one scenario and one procedure")
    for p in procedures:
        if p not in PROCEDURES:
            raise ValueError(f"unknown procedure {p!r}; choose from {PROCEDURES}")
    if n_sims < 1:
        raise ValueError(f"n_sims must be >= 1, got {n_sims}")
    pipeline_cfg = pipeline_cfg or PipelineConfig()
    cluster_cfg = cluster_cfg or ClusterTestConfig()
    rows = []
    for s_idx, scen in enumerate(scenarios):
        layout = grid_layout(scen.dims[0])
        per_proc = {p: [] for p in procedures}
        for sim in range(n_sims):
            data = gen_dataset(
                scen.dims,
                scen.n_trials_per_cond,
                effect=scen.effect,
                noise_sigma=scen.noise_sigma,
                trial_corr=scen.trial_corr,
                channel_corr=scen.channel_corr,
                seed=derive_seed(seed, s_idx, sim),
            )
            for proc in procedures:
                detected = _run_procedure(
                    proc,
                    data,
                    layout,
                    alpha,
                    pipeline_cfg,
                    cluster_cfg,
                    perm_n,
                    ktms_u,
                    seed=derive_seed(seed, s_idx, sim, PROCEDURES.index(proc)),
                    threads=threads,
                )
                truth = scen.effect
                metrics = evaluate(detected, truth)
                n_false = len(detected - (set(truth.triples) if truth else set()))
                per_proc[proc].append((metrics, n_false))
        for proc in procedures:
            entries = per_proc[proc]
            sens = np.asarray([e[0].sensitivity for e in entries])
            fdp = np.asarray([e[0].fdp for e in entries])
            any_false = np.asarray([e[0].any_false_discovery for e in entries], dtype=float)
            detect = np.asarray([e[0].effect_detected for e in entries], dtype=float)
            u = ktms_u if proc == "ktms" else 0
            gfwer = np.asarray([e[1] > u for e in entries], dtype=float)
            n = len(entries)
            rows.append(
                {
                    "scenario": scen.name,
                    "procedure": proc,
                    "n_sims": n,
                    "sensitivity_mean": float(sens.mean()),
                    "sensitivity_se": float(sens.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
                    "fwer": float(any_false.mean()),
                    "fwer_se": float(np.sqrt(any_false.mean() * (1 - any_false.mean()) / n)),
                    "fdr_mean": float(fdp.mean()),
                    "fdr_se": float(fdp.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
                    "detect_rate": float(detect.mean()),
                    "gfwer_u": u,
                    "gfwer_rate": float(gfwer.mean()),
                }
            )
    return rows


def write_metrics_csv(rows: list[dict], path) -> None:
    """Serialize comparison rows to CSV with a stable column order."""
    import csv

    if not rows:
        raise ValueError("no rows to write")
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
