"""Embedding engine for attributed multiplex heterogeneous networks."""

from .errors import (
    AttributeMissingError,
    ConfigError,
    EdgeFileError,
    EvaluationError,
    MetricUndefinedError,
    MuxembedError,
    NodeReferenceError,
    NumericAbortError,
    SchemaError,
    SplitInfeasibleError,
    WalkConfigError,
)
from .evaluation import (
    MetricsReport,
    MneOracleParams,
    evaluate,
    f1_known_k,
    knn_topn,
    mne_oracle_embedding,
    pr_auc,
    roc_auc,
    score_pair,
    score_pairs,
    theorem1_construct,
    theorem1_max_error,
)
from .graph import (
    AmhenGraph,
    EvalSplit,
    GraphSchema,
    NodeRef,
    load_graph,
    load_split,
    save_graph,
    save_split,
    split_edges,
)
from .model import (
    Hyperparams,
    InductiveParams,
    ModelParams,
    TransductiveParams,
    aggregate,
    attention_coefficients,
    combine_edge_embeddings,
    embed_all,
    init_params,
    initial_edge_embedding,
    load_checkpoint,
    overall_embedding,
    save_checkpoint,
)
from .trainer import (
    Adam,
    GradCheckReport,
    TrainConfig,
    TrainReport,
    check_gradients,
    measure_per_sample_time,
    sample_gradients,
    sample_loss,
    sample_loss_given,
    train,
)
from .walker import (
    AliasTable,
    MetaPathSchema,
    NoiseTable,
    SampleSet,
    TrainingSample,
    WalkConfig,
    WalkCorpus,
    build_noise_table,
    dump_walks,
    generate_corpus,
    generate_walks,
    transition_probabilities,
    walk_step,
    walks_to_pairs,
)

__version__ = "0.1.0"
