"""Hypergraph analytics toolkit.

Provides an immutable hypergraph container with JSON/edge-list I/O,
message-passing homophily measures, two-step hyperedge/node mini-batch
sampling with its probabilistic analysis, connectivity rewiring
strategies, and a small numpy-based multiset-mixer node classifier with
hand-written reverse-mode gradients.
"""

from hypermix.hypergraph import (
    FeatureMatrix,
    Hypergraph,
    HypergraphError,
    LabelAssignment,
    LoadResult,
    ParseError,
    StatsReport,
    ValidationError,
    clique_expand,
    compute_stats,
    load_hypergraph,
    save_hypergraph,
    subhypergraph,
)
from hypermix.homophily import (
    DeltaReport,
    HomophilyTrace,
    KUniformReport,
    ce_homophily,
    delta_grid,
    delta_homophily,
    edge_homophily_0,
    kuniform_scores,
    mp_homophily,
    normalized_accuracy,
)
from hypermix.sampling import (
    ClassShiftReport,
    MiniBatch,
    NodeSeenReport,
    SamplerConfig,
    WaitBoundReport,
    class_shift,
    expected_first_sample_epoch,
    first_sample_pmf,
    iterate_epoch,
    make_rng,
    max_wait_bound,
    node_seen_probability,
    sample_batch,
    simulate_first_sample_epochs,
    total_variation,
)
from hypermix.rewiring import (
    KMeansParams,
    KMeansResult,
    elbow_choice,
    kmeans,
    kmeans_scan,
    kmeans_split,
    label_split,
    order_by_size,
    random_drop,
    retain,
    trim,
)
from hypermix.mixer import (
    MixerModel,
    MlpCBModel,
    MlpModel,
    RepresentationState,
    Split,
    TrainConfig,
    TrainReport,
    TrainingDiverged,
    evaluate,
    forward,
    init_mixer,
    init_mlp,
    init_mlp_cb,
    load_checkpoint,
    loss_and_grad,
    make_split,
    mixer_forward,
    mlp_baseline_forward,
    mlp_cb_forward,
    num_parameters,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
