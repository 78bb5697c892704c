"""Wedge-graph matching and spline-kernel network classification of cuneiform signs."""

from .assignment import AssignmentResult, InfeasibleAssignment, brute_force, solve
from .dataset import (
    Dataset,
    DatasetError,
    DatasetStats,
    compute_stats,
    parse_json,
    parse_tudataset,
    synthesize,
    write_json,
    write_tudataset,
)
from .editdist import (
    CostModel,
    DistanceMatrix,
    EditPath,
    SizeBoundExceeded,
    apx1,
    apx2,
    apx_matrices,
    build_cost_matrix,
    cross_apx_matrices,
    distance_matrix,
    edit_path_cost,
    exact,
)
from .evaluate import (
    BenchRecord,
    CvResult,
    FoldSplit,
    NetCvResult,
    RocCurve,
    TooFewGraphs,
    UnknownReference,
    bench_ged_scaling,
    bench_network,
    class_references,
    cross_validate,
    knn_classify,
    linear_r2,
    make_folds,
    network_cross_validate,
    rank_and_roc,
)
from .graph import (
    CuneiformGraph,
    Edge,
    EdgeKind,
    GlyphType,
    GraphError,
    MalformedWedge,
    NonFiniteCoordinate,
    NotArrangementEdge,
    PointType,
    Vertex,
    Violation,
    Wedge,
    arrangement_vector,
    build_from_wedges,
    validate,
)
from .refcorpus import build_reference_dataset, reference_ids, write_reference_corpus
from .seeding import (
    STREAM_AUG,
    STREAM_BENCH,
    STREAM_DROPOUT,
    STREAM_INIT,
    STREAM_SHUFFLE,
    STREAM_SPLITS,
    stream_rng,
)
from .splinenet import (
    NetConfig,
    SplineNet,
    TrainConfig,
    TrainTrace,
    augment,
    bspline_basis,
    conv_forward,
    forward,
    init_net,
    input_features,
    load_checkpoint,
    loss_and_grads,
    max_offset,
    predict,
    predict_ensemble,
    pseudo_coords,
    save_checkpoint,
    train,
    train_ensemble,
)

__version__ = "0.1.0"
