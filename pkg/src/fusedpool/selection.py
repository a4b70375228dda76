"""Model selection along the path: AIC curve and class-stratified K-fold CV.

Cross-validation keeps the lambda grid and the coupling weights fixed at
their full-data values so the per-fold error curves align; each fold refits
the whole path on its training rows with warm starts.  The fold MAE is the
macro-average over classes (equal class weight); the pooled micro-average is
computed alongside for export.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .data import Dataset
from .fusion import CouplingMatrix
from .solver import (
    FitConfig,
    FittedModel,
    PathResult,
    fit_classic_pooled,
    fit_new_pooled,
    solve_path,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AicCurve:
    """Per-lambda residual variance, degrees of freedom and AIC."""

    lambdas: np.ndarray
    sigma2: np.ndarray
    df: np.ndarray
    aic: np.ndarray
    selected_index: int

    @property
    def selected_lambda(self) -> float:
        return float(self.lambdas[self.selected_index])


def _argmin_prefer_larger(values: np.ndarray) -> int:
    """Index of the minimum; exact ties resolve to the largest lambda."""
    return int(np.flatnonzero(values == values.min()).max())


def aic_select(path: PathResult, n_total: int) -> AicCurve:
    """AIC over the path: log(sigma2) + 2*df/n with df the number of distinct
    coefficients (fusion groups plus one intercept per class)."""
    sigma2 = path.rss / n_total
    aic = np.log(sigma2) + 2.0 * path.df / n_total
    return AicCurve(
        lambdas=path.lambdas,
        sigma2=sigma2,
        df=path.df.copy(),
        aic=aic,
        selected_index=_argmin_prefer_larger(aic),
    )


@dataclass(frozen=True)
class FoldAssignment:
    """Per-class fold id of every observation; deterministic under the seed."""

    k: int
    seed: int
    assignment: Mapping[str, np.ndarray]

    def test_mask(self, class_id: str, fold: int) -> np.ndarray:
        return self.assignment[class_id] == fold

    def train_mask(self, class_id: str, fold: int) -> np.ndarray:
        return self.assignment[class_id] != fold


def make_folds(dataset: Dataset, k: int, seed: int) -> FoldAssignment:
    """Random per-class partition into k near-equal blocks."""
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    assignment: dict[str, np.ndarray] = {}
    for c in dataset.class_ids:
        n = dataset.size(c)
        if n < k:
            logger.info("class %s has %d rows < k=%d; it reaches fewer folds", c, n, k)
        perm = rng.permutation(n)
        fold_ids = np.empty(n, dtype=int)
        for fold, block in enumerate(np.array_split(perm, k)):
            fold_ids[block] = fold
        assignment[c] = fold_ids
    return FoldAssignment(k=k, seed=seed, assignment=assignment)


def pooled_ancestor_vector(
    train: Dataset, pooled: FittedModel, available: tuple[str, ...]
) -> np.ndarray:
    """Fallback coefficients for a class absent from a training fold: the
    fold's fully pooled slopes plus the size-weighted mean intercept."""
    vec = np.zeros(len(available) + 1)
    for j, pred in enumerate(available):
        carriers = train.classes_with(pred)
        if carriers:
            vec[j] = pooled.slope(carriers[0], pred)
    sizes = np.array([train.size(c) for c in train.class_ids], dtype=float)
    intercepts = np.array([pooled.intercept(c) for c in train.class_ids])
    vec[-1] = float(intercepts @ sizes / sizes.sum())
    return vec


def _nanmean(a: np.ndarray, axis: int) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return np.nanmean(a, axis=axis)


@dataclass(frozen=True)
class CvReport:
    """Per-fold and aggregate error curves plus the selected model."""

    k: int
    seed: int
    lambdas: np.ndarray
    fold_class_mae: np.ndarray  # (k, L, M), NaN where a class has no test rows
    fold_class_mse: np.ndarray
    fold_macro_mae: np.ndarray  # (k, L)
    fold_micro_mae: np.ndarray
    macro_mae: np.ndarray  # (L,)
    micro_mae: np.ndarray
    macro_mse: np.ndarray
    micro_mse: np.ndarray
    class_mae_curves: Mapping[str, np.ndarray]
    selected_index: int
    selected_lambda: float
    per_class_mae_at_selected: Mapping[str, float]
    held_out: Mapping[str, np.ndarray]  # class -> (n, L) test-fold predictions
    classic_pooled_macro_mae: float
    folds: FoldAssignment
    path: PathResult
    flags: tuple[str, ...]

    @property
    def selected_model(self) -> FittedModel:
        return self.path.model(self.selected_index)


def cv_select(
    dataset: Dataset,
    coupling: CouplingMatrix,
    config: FitConfig | None = None,
    k: int = 5,
    seed: int = 0,
    path: PathResult | None = None,
) -> CvReport:
    """K-fold CV over the full-data lambda grid; the selected model is the
    full-data path entry at the argmin of the aggregate macro MAE (ties break
    toward the larger lambda)."""
    config = config or FitConfig()
    folds = make_folds(dataset, k, seed)
    if path is None:
        path = solve_path(dataset, coupling, config)
    grid = path.lambdas
    L = grid.size
    ids = dataset.class_ids
    M = len(ids)
    class_pos = {c: i for i, c in enumerate(ids)}

    fold_class_mae = np.full((k, L, M), np.nan)
    fold_class_mse = np.full((k, L, M), np.nan)
    abs_sum = np.zeros((k, L))
    sq_sum = np.zeros((k, L))
    counts = np.zeros(k)
    held_out = {c: np.full((dataset.size(c), L), np.nan) for c in ids}
    classic_fold_macro = np.full(k, np.nan)
    flags: list[str] = []

    for fold in range(k):
        keep = {c: folds.train_mask(c, fold) for c in ids}
        train = dataset.subset(keep)
        dropped = [c for c in ids if c not in train.class_ids]
        for c in dropped:
            flags.append(f"fold {fold}: class {c} absent from training; pooled-ancestor fallback")
        coupling_k = coupling.restrict(train)
        path_k = solve_path(train, coupling_k, config, grid=grid)
        pooled_k = fit_new_pooled(train) if dropped else None
        classic_k = fit_classic_pooled(train)
        classic_errs: list[np.ndarray] = []

        for c in ids:
            test = folds.test_mask(c, fold)
            if not test.any():
                continue
            des = dataset.design(c)
            Xtest = des.design[test]
            ytest = des.response[test]
            if c in train.class_ids:
                sl = path_k.layout.class_slices[c]
                preds = path_k.betas[:, sl] @ Xtest.T  # (L, ntest)
            else:
                assert pooled_k is not None
                vec = pooled_ancestor_vector(train, pooled_k, des.available)
                preds = np.tile(Xtest @ vec, (L, 1))
            held_out[c][test, :] = preds.T
            err = preds - ytest[None, :]
            ci = class_pos[c]
            fold_class_mae[fold, :, ci] = np.abs(err).mean(axis=1)
            fold_class_mse[fold, :, ci] = (err**2).mean(axis=1)
            abs_sum[fold] += np.abs(err).sum(axis=1)
            sq_sum[fold] += (err**2).sum(axis=1)
            counts[fold] += ytest.size

            classic_vec = _classic_vector(train, classic_k, des.available)
            classic_errs.append(np.abs(Xtest @ classic_vec - ytest))
        if classic_errs:
            classic_fold_macro[fold] = float(np.mean([e.mean() for e in classic_errs]))

    fold_macro_mae = _nanmean(fold_class_mae, axis=2)
    fold_macro_mse = _nanmean(fold_class_mse, axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        fold_micro_mae = abs_sum / counts[:, None]
        fold_micro_mse = sq_sum / counts[:, None]
    macro_mae = fold_macro_mae.mean(axis=0)
    macro_mse = fold_macro_mse.mean(axis=0)
    micro_mae = fold_micro_mae.mean(axis=0)
    micro_mse = fold_micro_mse.mean(axis=0)

    selected = _argmin_prefer_larger(macro_mae)
    class_curves = {
        c: _nanmean(fold_class_mae[:, :, class_pos[c]], axis=0) for c in ids
    }
    per_class_at_selected = {c: float(class_curves[c][selected]) for c in ids}

    return CvReport(
        k=k,
        seed=seed,
        lambdas=grid,
        fold_class_mae=fold_class_mae,
        fold_class_mse=fold_class_mse,
        fold_macro_mae=fold_macro_mae,
        fold_micro_mae=fold_micro_mae,
        macro_mae=macro_mae,
        micro_mae=micro_mae,
        macro_mse=macro_mse,
        micro_mse=micro_mse,
        class_mae_curves=class_curves,
        selected_index=selected,
        selected_lambda=float(grid[selected]),
        per_class_mae_at_selected=per_class_at_selected,
        held_out=held_out,
        classic_pooled_macro_mae=float(_nanmean(classic_fold_macro, axis=0)),
        folds=folds,
        path=path,
        flags=tuple(flags),
    )


def _classic_vector(
    train: Dataset, classic: FittedModel, available: tuple[str, ...]
) -> np.ndarray:
    """Classic-pooled coefficients arranged for one class's design columns."""
    common = {
        p
        for p in train.predictors
        if all(p in train.available(c) for c in train.class_ids)
    }
    anchor = train.class_ids[0]
    vec = np.zeros(len(available) + 1)
    for j, pred in enumerate(available):
        if pred in common:
            vec[j] = classic.slope(anchor, pred)
    vec[-1] = classic.intercept(anchor)
    return vec
