"""Deterministic CSV/JSON artifact writers shared by the CLI and the service.

Floats are written with 17 significant digits so reruns are byte-identical
and golden-file tests are stable.  JSON documents carry a schema field.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import INTERCEPT, Dataset, DescriptiveReport
from .evaluation import EvaluationReport
from .fusion import CouplingMatrix
from .selection import AicCurve, CvReport
from .solver import FitConfig, PathResult

SCHEMA_VERSION = "fusedpool/1"


def fmt(value) -> str:
    """Full-precision text for one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return ""
        return format(v, ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def json_bytes(doc: Mapping) -> bytes:
    return (json.dumps(_jsonify(doc), indent=2) + "\n").encode("utf-8")


def write_json(path: Path, doc: Mapping) -> Path:
    path.write_bytes(json_bytes(doc))
    return path


# ---------------------------------------------------------------------------
# Summaries


def write_summary(out_dir: Path, report: DescriptiveReport) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = write_csv(
        out_dir / "summary_stats.csv",
        ("group", "variable", "statistic", "value"),
        report.stats,
    )
    sizes = write_csv(out_dir / "class_sizes.csv", ("class", "n"), report.class_sizes)
    missing = write_csv(
        out_dir / "missingness_matrix.csv", report.missingness_header, report.missingness
    )
    return [stats, sizes, missing]


# ---------------------------------------------------------------------------
# Coefficient helpers


def _raw_class_coefficients(dataset: Dataset, model, class_id: str):
    """Back-transform one class's coefficients to the raw predictor scale."""
    stats = dataset.stats
    assert stats is not None
    slopes = {}
    raw_slopes = {}
    shift = 0.0
    for pred in dataset.available(class_id):
        b = model.slope(class_id, pred)
        slopes[pred] = b
        raw_slopes[pred] = b / stats.scales[pred]
        shift += b * stats.means[pred] / stats.scales[pred]
    intercept = model.intercept(class_id)
    return slopes, raw_slopes, intercept, intercept - shift


# ---------------------------------------------------------------------------
# Path artifacts


def path_rows(dataset: Dataset, path: PathResult):
    rows = []
    for i, lam in enumerate(path.lambdas):
        model = path.model(i)
        df = int(path.df[i])
        rss = float(path.rss[i])
        pen = float(path.penalty[i])
        for c in dataset.class_ids:
            slopes, raw_slopes, icept, raw_icept = _raw_class_coefficients(dataset, model, c)
            for pred in dataset.available(c):
                rows.append((lam, c, pred, slopes[pred], raw_slopes[pred], df, rss, pen))
            rows.append((lam, c, INTERCEPT, icept, raw_icept, df, rss, pen))
    return rows


def grid_document(dataset: Dataset, path: PathResult, config: FitConfig) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": "lambda_grid",
        "lambda_max": float(path.lambda_max),
        "lambdas": path.lambdas,
        "grid_size": config.grid_size,
        "lambda_min_ratio": config.lambda_min_ratio,
        "n": dataset.n_total,
        "convergence": {
            "iterations": path.iterations,
            "primal_residuals": path.primal_residuals,
            "dual_residuals": path.dual_residuals,
        },
    }


def write_fusion_debug(out_dir: Path, coupling: CouplingMatrix) -> list[Path]:
    pair_rows = [
        (p.predictor, p.class_a, p.class_b, p.raw_weight, p.weight) for p in coupling.pairs
    ]
    pairs = write_csv(
        out_dir / "fusion_pairs.csv",
        ("predictor", "class_a", "class_b", "raw_weight", "weight"),
        pair_rows,
    )
    coo = coupling.matrix.tocoo()
    triplets = sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
    matrix = write_csv(out_dir / "coupling_matrix.csv", ("row", "col", "value"), triplets)
    return [pairs, matrix]


def write_path_outputs(
    out_dir: Path,
    dataset: Dataset,
    coupling: CouplingMatrix,
    path: PathResult,
    config: FitConfig,
) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    header = (
        "lambda",
        "class",
        "predictor",
        "coefficient_standardized",
        "coefficient_raw",
        "df",
        "rss",
        "penalty",
    )
    files = [
        write_csv(out_dir / "coefficient_path.csv", header, path_rows(dataset, path)),
        write_json(out_dir / "lambda_grid.json", grid_document(dataset, path, config)),
    ]
    files += write_fusion_debug(out_dir, coupling)
    return files


# ---------------------------------------------------------------------------
# Service / model documents


def meta_document(dataset: Dataset, path: PathResult, thresholds=None) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": "meta",
        "classes": [{"id": c, "n": dataset.size(c)} for c in dataset.class_ids],
        "predictors": list(dataset.predictors),
        "availability": {c: list(dataset.available(c)) for c in dataset.class_ids},
        "lambda_max": float(path.lambda_max),
        "n": dataset.n_total,
        "thresholds": list(thresholds.as_tuple()) if thresholds is not None else None,
    }


def path_document(
    dataset: Dataset, path: PathResult, markers: Mapping[str, dict] | None = None
) -> dict:
    stats = dataset.stats
    assert stats is not None
    coefficients: dict[str, dict[str, list[float]]] = {}
    coefficients_raw: dict[str, dict[str, list[float]]] = {}
    intercepts: dict[str, list[float]] = {}
    for c in dataset.class_ids:
        sl = path.layout.class_slices[c]
        block = path.betas[:, sl]
        names = dataset.available(c)
        coefficients[c] = {pred: block[:, j] for j, pred in enumerate(names)}
        coefficients_raw[c] = {
            pred: block[:, j] / stats.scales[pred] for j, pred in enumerate(names)
        }
        intercepts[c] = block[:, -1]
    return {
        "schema": SCHEMA_VERSION,
        "kind": "path",
        "lambda_max": float(path.lambda_max),
        "lambdas": path.lambdas,
        "classes": [{"id": c, "n": dataset.size(c)} for c in dataset.class_ids],
        "predictors": list(dataset.predictors),
        "coefficients": coefficients,
        "coefficients_raw": coefficients_raw,
        "intercepts": intercepts,
        "df": path.df,
        "rss": path.rss,
        "penalty": path.penalty,
        "fusion": list(path.partitions),
        "markers": dict(markers) if markers else {},
    }


def model_document(dataset: Dataset, path: PathResult, index: int) -> dict:
    model = path.model(index)
    stats = dataset.stats
    assert stats is not None
    classes = []
    for c in dataset.class_ids:
        slopes, raw_slopes, icept, raw_icept = _raw_class_coefficients(dataset, model, c)
        classes.append(
            {
                "id": c,
                "n": dataset.size(c),
                "intercept": icept,
                "intercept_raw": raw_icept,
                "coefficients": slopes,
                "coefficients_raw": raw_slopes,
            }
        )
    return {
        "schema": SCHEMA_VERSION,
        "kind": "model",
        "lambda": float(path.lambdas[index]),
        "grid_index": int(index),
        "lambda_max": float(path.lambda_max),
        "df": int(path.df[index]),
        "rss": float(path.rss[index]),
        "penalty": float(path.penalty[index]),
        "n": dataset.n_total,
        "standardization": {
            p: {"mean": stats.means[p], "scale": stats.scales[p]} for p in dataset.predictors
        },
        "classes": classes,
        "fusion": dict(path.partitions[index]),
    }


# ---------------------------------------------------------------------------
# Selection artifacts


def cv_rows(dataset: Dataset, cv: CvReport):
    rows = []
    for i, lam in enumerate(cv.lambdas):
        for fold in range(cv.k):
            for ci, c in enumerate(dataset.class_ids):
                mae = cv.fold_class_mae[fold, i, ci]
                if math.isnan(mae):
                    continue
                rows.append((float(lam), fold, c, mae, cv.fold_class_mse[fold, i, ci]))
    return rows


def aic_rows(aic: AicCurve):
    return [
        (float(aic.lambdas[i]), float(aic.aic[i]), int(aic.df[i]), float(aic.sigma2[i]))
        for i in range(aic.lambdas.size)
    ]


def selection_document(dataset: Dataset, cv: CvReport, aic: AicCurve) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": "selection",
        "k": cv.k,
        "seed": cv.seed,
        "lambdas": cv.lambdas,
        "cv": {
            "lambda": cv.selected_lambda,
            "index": cv.selected_index,
            "macro_mae": float(cv.macro_mae[cv.selected_index]),
            "micro_mae": float(cv.micro_mae[cv.selected_index]),
            "per_class_mae": dict(cv.per_class_mae_at_selected),
        },
        "aic": {
            "lambda": aic.selected_lambda,
            "index": aic.selected_index,
            "aic": float(aic.aic[aic.selected_index]),
            "df": int(aic.df[aic.selected_index]),
            "sigma2": float(aic.sigma2[aic.selected_index]),
        },
        "classic_pooled_macro_mae": cv.classic_pooled_macro_mae,
        "flags": list(cv.flags),
    }


def cv_document(dataset: Dataset, cv: CvReport, aic: AicCurve) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": "cv",
        "k": cv.k,
        "seed": cv.seed,
        "lambdas": cv.lambdas,
        "macro_mae": cv.macro_mae,
        "micro_mae": cv.micro_mae,
        "macro_mse": cv.macro_mse,
        "micro_mse": cv.micro_mse,
        "fold_macro_mae": cv.fold_macro_mae,
        "per_class_mae": {c: cv.class_mae_curves[c] for c in dataset.class_ids},
        "per_class_mae_at_selected": dict(cv.per_class_mae_at_selected),
        "selected": {"lambda": cv.selected_lambda, "index": cv.selected_index},
        "classic_pooled_macro_mae": cv.classic_pooled_macro_mae,
        "aic": {
            "aic": aic.aic,
            "df": aic.df,
            "sigma2": aic.sigma2,
            "selected": {"lambda": aic.selected_lambda, "index": aic.selected_index},
        },
        "flags": list(cv.flags),
    }


def write_cv_outputs(
    out_dir: Path, dataset: Dataset, cv: CvReport, aic: AicCurve
) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        write_csv(
            out_dir / "cv_errors.csv",
            ("lambda", "fold", "class", "mae", "mse"),
            cv_rows(dataset, cv),
        ),
        write_csv(
            out_dir / "aic_curve.csv", ("lambda", "aic", "df", "sigma2"), aic_rows(aic)
        ),
        write_json(out_dir / "selection.json", selection_document(dataset, cv, aic)),
        write_json(
            out_dir / "cv_selected_model.json",
            model_document(dataset, cv.path, cv.selected_index),
        ),
        write_json(
            out_dir / "aic_selected_model.json",
            model_document(dataset, cv.path, aic.selected_index),
        ),
    ]


# ---------------------------------------------------------------------------
# Evaluation artifacts


def evaluation_table_rows(report: EvaluationReport):
    rows = []
    for c in report.classes:
        rows.append(
            (c, report.sizes[c]) + tuple(report.mae[m][c] for m in report.methods)
        )
    return rows


def evaluation_metric_rows(report: EvaluationReport):
    rows = []
    for c in report.classes:
        for m in report.methods:
            rows.append(
                (
                    c,
                    report.sizes[c],
                    m,
                    report.mae[m][c],
                    report.mse[m][c],
                    report.acc[m][c],
                    report.consumer[m][c],
                )
            )
    return rows


def evaluation_document(report: EvaluationReport) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": "evaluation",
        "thresholds": list(report.thresholds.as_tuple()),
        "methods": list(report.methods),
        "classes": list(report.classes),
        "sizes": dict(report.sizes),
        "mae": {m: dict(report.mae[m]) for m in report.methods},
        "mse": {m: dict(report.mse[m]) for m in report.methods},
        "accuracy": {m: dict(report.acc[m]) for m in report.methods},
        "consumer_accuracy": {m: dict(report.consumer[m]) for m in report.methods},
        "confusion": {
            m: {c: report.confusion[m][c] for c in report.classes} for m in report.methods
        },
        "macro_mae": dict(report.macro_mae),
        "micro_mae": dict(report.micro_mae),
        "overall_confusion": {m: report.overall_confusion[m] for m in report.methods},
        "overall_accuracy": dict(report.overall_acc),
        "overall_consumer_accuracy": dict(report.overall_consumer),
    }


def write_evaluation(out_dir: Path, report: EvaluationReport) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        write_csv(
            out_dir / "evaluation_table.csv",
            ("class", "n") + report.methods,
            evaluation_table_rows(report),
        ),
        write_csv(
            out_dir / "evaluation_metrics.csv",
            ("class", "n", "method", "mae", "mse", "accuracy", "consumer_accuracy"),
            evaluation_metric_rows(report),
        ),
        write_json(out_dir / "confusion_matrices.json", evaluation_document(report)),
    ]
