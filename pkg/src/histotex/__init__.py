"""Texture-based classification of histopathology image patches.

Three pipelines share one evaluation harness: LBP histograms with
nearest-neighbor matching, bag-of-visual-words over uniform LBP(8,1)
block descriptors with an intersection-kernel SVM, and externally
extracted feature files (e.g. pretrained-network embeddings) evaluated
leave-one-out.
"""

from .bovw import (
    BovwEncoder,
    Codebook,
    GridStrategy,
    block_descriptor,
    block_gradient,
    build_codebook,
    encode_image,
    grid_blocks,
    image_descriptors,
    kmeans,
    load_codebook,
    resize_image,
    save_codebook,
)
from .dataset import (
    Dataset,
    LabeledImage,
    generate_synthetic,
    load_dataset,
    to_grayscale,
)
from .evaluation import (
    EvalReport,
    FoldPlan,
    NearestNeighborClassifier,
    eval_feature_file,
    folds20_bovw,
    loo_nn_accuracy,
    make_fold_plan,
    reports_to_csv,
    sweep_lbp,
    write_reports_csv,
)
from .features_io import (
    FeatureFileError,
    FeatureSet,
    read_feature_file,
    write_feature_file,
)
from .iksvm import (
    BinarySvmModel,
    ConvergenceError,
    IntersectionKernelSVC,
    hik,
    hik_gram,
    load_iksvm,
    save_iksvm,
    select_c,
    train_binary,
)
from .lbp import (
    LbpConfig,
    LbpHistogramExtractor,
    lbp_code,
    lbp_code_image,
    lbp_histogram,
    sample_neighbor,
    uniform_mapping,
)
from .metrics import (
    MetricKind,
    chi2,
    chi2_abs,
    cosine_dist,
    distance_matrix,
    l1,
    l2,
)

__version__ = "0.1.0"

__all__ = [
    "BinarySvmModel",
    "BovwEncoder",
    "Codebook",
    "ConvergenceError",
    "Dataset",
    "EvalReport",
    "FeatureFileError",
    "FeatureSet",
    "FoldPlan",
    "GridStrategy",
    "IntersectionKernelSVC",
    "LabeledImage",
    "LbpConfig",
    "LbpHistogramExtractor",
    "MetricKind",
    "NearestNeighborClassifier",
    "block_descriptor",
    "block_gradient",
    "build_codebook",
    "chi2",
    "chi2_abs",
    "cosine_dist",
    "distance_matrix",
    "encode_image",
    "eval_feature_file",
    "folds20_bovw",
    "generate_synthetic",
    "grid_blocks",
    "hik",
    "hik_gram",
    "image_descriptors",
    "kmeans",
    "l1",
    "l2",
    "lbp_code",
    "lbp_code_image",
    "lbp_histogram",
    "load_codebook",
    "load_dataset",
    "load_iksvm",
    "loo_nn_accuracy",
    "make_fold_plan",
    "read_feature_file",
    "reports_to_csv",
    "resize_image",
    "sample_neighbor",
    "save_codebook",
    "save_iksvm",
    "select_c",
    "sweep_lbp",
    "to_grayscale",
    "train_binary",
    "uniform_mapping",
    "write_feature_file",
    "write_reports_csv",
]
