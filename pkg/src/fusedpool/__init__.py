"""fusedpool: partial pooling of per-class linear models.

Per-class regressions are fit jointly under a pairwise fused-lasso penalty
whose weight grows with the sample-size imbalance of each class pair.  The
lambda spectrum runs from fully separate least squares (lambda = 0) to the
fully pooled model (lambda = lambda_max); models along it are selected by
AIC, by class-stratified K-fold cross-validation, or interactively through
the bundled HTTP service and browser UI.
"""
from .data import (
    DataError,
    Dataset,
    DescriptiveReport,
    Schema,
    SchemaError,
    StandardizationStats,
    apply_missingness_mask,
    dataset_from_arrays,
    ingest,
    load_dataset,
    standardize,
    summarize,
)
from .evaluation import (
    EvaluationReport,
    StarThresholds,
    accuracy,
    confusion_from_scores,
    confusion_matrix,
    consumer_accuracy,
    method_comparison,
    per_class_report,
    to_stars,
)
from .fusion import (
    CoefficientLayout,
    CouplingMatrix,
    FusionPair,
    build_coupling_matrix,
    build_pairs,
    fuse,
)
from .mq4 import PanelRecord, mq4, trimmed_trait_mean
from .oracle import OracleError, qp_oracle
from .selection import AicCurve, CvReport, FoldAssignment, aic_select, cv_select, make_folds
from .solver import (
    ConvergenceError,
    FitConfig,
    FittedModel,
    PathResult,
    fit_classic_pooled,
    fit_new_pooled,
    fit_separate,
    fusion_partition,
    lambda_max,
    predict,
    solve_at,
    solve_path,
)

__version__ = "0.1.0"

__all__ = [
    "AicCurve",
    "CoefficientLayout",
    "ConvergenceError",
    "CouplingMatrix",
    "CvReport",
    "DataError",
    "Dataset",
    "DescriptiveReport",
    "EvaluationReport",
    "FitConfig",
    "FittedModel",
    "FoldAssignment",
    "FusionPair",
    "OracleError",
    "PanelRecord",
    "PathResult",
    "Schema",
    "SchemaError",
    "StandardizationStats",
    "StarThresholds",
    "accuracy",
    "aic_select",
    "apply_missingness_mask",
    "build_coupling_matrix",
    "build_pairs",
    "confusion_from_scores",
    "confusion_matrix",
    "consumer_accuracy",
    "cv_select",
    "dataset_from_arrays",
    "fit_classic_pooled",
    "fit_new_pooled",
    "fit_separate",
    "fuse",
    "fusion_partition",
    "ingest",
    "lambda_max",
    "load_dataset",
    "make_folds",
    "method_comparison",
    "mq4",
    "per_class_report",
    "predict",
    "qp_oracle",
    "solve_at",
    "solve_path",
    "standardize",
    "summarize",
    "to_stars",
    "trimmed_trait_mean",
]
