"""Mass-univariate hypothesis testing on trials x channels x freqs x times
data: the hierarchical cross-validation pipeline, classical
multiple-comparison baselines, and a ground-truth simulator."""

__version__ = "0.1.0"

from .classify import (
    FoldAccuracies,
    LogisticModel,
    f1_score,
    predict,
    stratified_kfold_cv,
    train_logistic,
    zscore_fit_apply,
)
from .cluster import (
    AdjacencyGraph,
    Cluster,
    ClusterTestConfig,
    build_adjacency,
    cluster_permutation_test,
    find_clusters,
)
from .data import (
    LabelVector,
    SensorLayout,
    TFRTensor,
    TrialSet,
    load_csv_dataset,
    load_dataset,
    save_dataset,
    slice_channel,
)
from .dct import ZonalMask, dct1, dct2, idct1, idct2, zonal_mask
from .mcp import (
    PermutationScheme,
    RejectionResult,
    bh,
    bky,
    bonferroni,
    by,
    holm,
    ktms,
    tmax_test,
)
from .pipeline import (
    PipelineConfig,
    SignificanceSets,
    run_pipeline,
    step1_channels,
    step2_frequencies,
    step3_timebins,
)
from .report import emit_topomap
from .simulate import (
    EffectSpec,
    EvalMetrics,
    ScenarioSpec,
    compare_procedures,
    evaluate,
    gen_dataset,
    permutation_validity,
)
from .stats import one_sample_t, t_tail, two_sample_t
from .tfr import MorletConfig, morlet_power, wavelet_width
