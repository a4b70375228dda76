"""Star-rating discretization and accuracy metrics for held-out predictions.

Scores are mapped onto four quality bands (2* to 5*) by three ascending
thresholds; boundary scores take the higher band.  Consumer-focused accuracy
additionally counts under-predictions (truth better than predicted) as
acceptable outcomes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import Dataset
from .fusion import CouplingMatrix
from .selection import CvReport, cv_select, pooled_ancestor_vector, _classic_vector
from .solver import FitConfig, fit_classic_pooled, fit_new_pooled, fit_separate

logger = logging.getLogger(__name__)

STAR_LEVELS = (2, 3, 4, 5)
METHODS = ("cv_selected", "new_pooled", "classic_pooled", "separate")


@dataclass(frozen=True)
class StarThresholds:
    """Ascending boundaries between 2*/3*, 3*/4* and 4*/5* on the score scale.

    The industry values are not bundled; callers supply them via config.
    """

    t3: float
    t4: float
    t5: float

    def __post_init__(self) -> None:
        if not (0.0 < self.t3 < self.t4 < self.t5 < 100.0):
            raise ValueError("thresholds must satisfy 0 < t3 < t4 < t5 < 100")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.t3, self.t4, self.t5)

    @classmethod
    def parse(cls, text: str) -> "StarThresholds":
        parts = text.split(",")
        if len(parts) != 3:
            raise ValueError("thresholds must be three comma-separated numbers: t3,t4,t5")
        return cls(*(float(p) for p in parts))


def to_stars(score, thresholds: StarThresholds):
    """Star band of a score (scalar or array); boundaries map upward."""
    bands = np.searchsorted(thresholds.as_tuple(), score, side="right") + 2
    if np.isscalar(score):
        return int(bands)
    return bands.astype(int)


def confusion_matrix(truth_stars, predicted_stars) -> np.ndarray:
    """4x4 counts with rows = true star, columns = predicted star."""
    truth = np.asarray(truth_stars, dtype=int)
    pred = np.asarray(predicted_stars, dtype=int)
    if truth.shape != pred.shape:
        raise ValueError("truth and prediction lengths differ")
    cm = np.zeros((4, 4), dtype=int)
    for t, p in zip(truth - 2, pred - 2):
        if not (0 <= t < 4 and 0 <= p < 4):
            raise ValueError("star values must lie in {2, 3, 4, 5}")
        cm[t, p] += 1
    return cm


def confusion_from_scores(
    truth_scores, predicted_scores, thresholds: StarThresholds
) -> np.ndarray:
    return confusion_matrix(to_stars(truth_scores, thresholds), to_stars(predicted_scores, thresholds))


def accuracy(cm: np.ndarray) -> float:
    total = int(cm.sum())
    if total == 0:
        raise ValueError("empty confusion matrix")
    return float(np.trace(cm)) / total


def consumer_accuracy(cm: np.ndarray) -> float:
    """Fraction of outcomes that are correct or under-predicted (truth at
    least as good as the prediction): the diagonal plus the lower triangle."""
    total = int(cm.sum())
    if total == 0:
        raise ValueError("empty confusion matrix")
    return float(np.tril(cm).sum()) / total


@dataclass(frozen=True)
class EvaluationReport:
    """Per-class MAE/MSE, confusion matrices and both accuracies for each
    prediction method, with macro/micro aggregates."""

    thresholds: StarThresholds
    methods: tuple[str, ...]
    classes: tuple[str, ...]
    sizes: Mapping[str, int]
    mae: Mapping[str, Mapping[str, float]]
    mse: Mapping[str, Mapping[str, float]]
    confusion: Mapping[str, Mapping[str, np.ndarray]]
    acc: Mapping[str, Mapping[str, float]]
    consumer: Mapping[str, Mapping[str, float]]
    macro_mae: Mapping[str, float]
    micro_mae: Mapping[str, float]
    overall_confusion: Mapping[str, np.ndarray]
    overall_acc: Mapping[str, float]
    overall_consumer: Mapping[str, float]


def per_class_report(
    predictions: Mapping[str, Mapping[str, Sequence[float]]],
    truths: Mapping[str, Sequence[float]],
    thresholds: StarThresholds,
    classes: Sequence[str] | None = None,
) -> EvaluationReport:
    """Assemble the evaluation table from per-method per-class predictions."""
    methods = tuple(predictions)
    ids = tuple(classes) if classes is not None else tuple(truths)
    sizes = {c: len(np.asarray(truths[c], dtype=float)) for c in ids}

    mae: dict[str, dict[str, float]] = {}
    mse: dict[str, dict[str, float]] = {}
    conf: dict[str, dict[str, np.ndarray]] = {}
    acc_: dict[str, dict[str, float]] = {}
    cons: dict[str, dict[str, float]] = {}
    macro: dict[str, float] = {}
    micro: dict[str, float] = {}
    overall_cm: dict[str, np.ndarray] = {}
    overall_acc: dict[str, float] = {}
    overall_cons: dict[str, float] = {}

    for method in methods:
        mae[method] = {}
        mse[method] = {}
        conf[method] = {}
        acc_[method] = {}
        cons[method] = {}
        all_err: list[np.ndarray] = []
        total_cm = np.zeros((4, 4), dtype=int)
        for c in ids:
            t = np.asarray(truths[c], dtype=float)
            p = np.asarray(predictions[method][c], dtype=float)
            if t.shape != p.shape:
                raise ValueError(f"prediction/truth length mismatch for class {c!r}")
            err = p - t
            mae[method][c] = float(np.abs(err).mean())
            mse[method][c] = float((err**2).mean())
            cm = confusion_from_scores(t, p, thresholds)
            conf[method][c] = cm
            acc_[method][c] = accuracy(cm)
            cons[method][c] = consumer_accuracy(cm)
            all_err.append(np.abs(err))
            total_cm += cm
        macro[method] = float(np.mean([mae[method][c] for c in ids]))
        pooled = np.concatenate(all_err)
        micro[method] = float(pooled.mean())
        overall_cm[method] = total_cm
        overall_acc[method] = accuracy(total_cm)
        overall_cons[method] = consumer_accuracy(total_cm)

    return EvaluationReport(
        thresholds=thresholds,
        methods=methods,
        classes=ids,
        sizes=sizes,
        mae=mae,
        mse=mse,
        confusion=conf,
        acc=acc_,
        consumer=cons,
        macro_mae=macro,
        micro_mae=micro,
        overall_confusion=overall_cm,
        overall_acc=overall_acc,
        overall_consumer=overall_cons,
    )


def method_comparison(
    dataset: Dataset,
    coupling: CouplingMatrix,
    thresholds: StarThresholds,
    config: FitConfig | None = None,
    k: int = 5,
    seed: int = 0,
    cv: CvReport | None = None,
) -> tuple[EvaluationReport, CvReport]:
    """Held-out comparison of the four methods under one fold assignment.

    Every observation is predicted exactly once (in its test fold) by each
    method; the CV-selected column reuses the cross-validation predictions at
    the selected lambda.
    """
    config = config or FitConfig()
    if cv is None:
        cv = cv_select(dataset, coupling, config, k=k, seed=seed)
    ids = dataset.class_ids
    truths = {c: dataset.design(c).response for c in ids}
    preds: dict[str, dict[str, np.ndarray]] = {
        m: {c: np.full(dataset.size(c), np.nan) for c in ids} for m in METHODS
    }
    for c in ids:
        preds["cv_selected"][c] = cv.held_out[c][:, cv.selected_index].copy()

    folds = cv.folds
    for fold in range(cv.k):
        keep = {c: folds.train_mask(c, fold) for c in ids}
        train = dataset.subset(keep)
        separate_k = fit_separate(train)
        pooled_k = fit_new_pooled(train)
        classic_k = fit_classic_pooled(train)
        for c in ids:
            test = folds.test_mask(c, fold)
            if not test.any():
                continue
            des = dataset.design(c)
            Xtest = des.design[test]
            in_train = c in train.class_ids
            if in_train:
                sep_vec = separate_k.class_vector(c)
                pool_vec = pooled_k.class_vector(c)
            else:
                logger.warning(
                    "fold %d: class %s absent from training; pooled-ancestor predictions",
                    fold,
                    c,
                )
                pool_vec = pooled_ancestor_vector(train, pooled_k, des.available)
                sep_vec = pool_vec
            preds["separate"][c][test] = Xtest @ sep_vec
            preds["new_pooled"][c][test] = Xtest @ pool_vec
            preds["classic_pooled"][c][test] = Xtest @ _classic_vector(
                train, classic_k, des.available
            )

    report = per_class_report(preds, truths, thresholds, classes=ids)
    return report, cv
