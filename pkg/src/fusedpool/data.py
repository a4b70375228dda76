"""CSV ingestion, the group-level missingness policy, standardization, summaries.

The pipeline is ingest -> apply_missingness_mask -> standardize, composed by
:func:`load_dataset`.  A :class:`Dataset` is immutable; each stage returns a
new value, so downstream consumers can share one dataset freely.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

INTERCEPT = "intercept"
ALL_GROUP = "_all"


class SchemaError(ValueError):
    """Schema config malformed or inconsistent with the CSV header."""


class DataError(ValueError):
    """CSV content violates the data contract."""


@dataclass(frozen=True)
class Schema:
    """Column roles for ingestion.

    numeric: names of numeric predictor columns.
    categorical: predictor name -> declared levels, or None to infer the
        levels from the data.
    reference: categorical predictor -> reference level (dropped in the
        indicator expansion); defaults to the lexicographically first level.
    """

    numeric: Sequence[str] = ()
    categorical: Mapping[str, Sequence[str] | None] = field(default_factory=dict)
    reference: Mapping[str, str] = field(default_factory=dict)
    class_column: str = "class"
    response_column: str = "response"

    def __post_init__(self) -> None:
        object.__setattr__(self, "numeric", tuple(self.numeric))
        object.__setattr__(
            self,
            "categorical",
            {t: (tuple(lv) if lv is not None else None) for t, lv in dict(self.categorical).items()},
        )
        object.__setattr__(self, "reference", dict(self.reference))
        names = [self.class_column, self.response_column, *self.traits]
        seen: set[str] = set()
        for name in names:
            if name in seen:
                raise SchemaError(f"duplicate column role for {name!r}")
            seen.add(name)
        if INTERCEPT in names:
            raise SchemaError(f"{INTERCEPT!r} is reserved and cannot be a column name")
        if not self.traits:
            raise SchemaError("schema declares no predictor columns")
        for trait, ref in self.reference.items():
            if trait not in self.categorical:
                raise SchemaError(f"reference level given for non-categorical {trait!r}")
            levels = self.categorical[trait]
            if levels is not None and ref not in levels:
                raise SchemaError(f"reference level {ref!r} not among levels of {trait!r}")

    @property
    def traits(self) -> tuple[str, ...]:
        return self.numeric + tuple(self.categorical)

    @classmethod
    def from_json(cls, source: str | Path | IO[str]) -> "Schema":
        """Load a schema from a JSON key-value file."""
        if hasattr(source, "read"):
            raw = json.load(source)  # type: ignore[arg-type]
        else:
            path = Path(source)
            if not path.exists():
                raise SchemaError(f"schema file not found: {path}")
            raw = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise SchemaError("schema file must hold a JSON object")
        allowed = {"class_column", "response_column", "numeric", "categorical", "reference"}
        unknown = sorted(set(raw) - allowed)
        if unknown:
            raise SchemaError(f"unknown schema keys: {', '.join(unknown)}")
        try:
            return cls(
                numeric=raw.get("numeric", ()),
                categorical=raw.get("categorical", {}),
                reference=raw.get("reference", {}),
                class_column=raw.get("class_column", "class"),
                response_column=raw.get("response_column", "response"),
            )
        except TypeError as exc:
            raise SchemaError(f"malformed schema file: {exc}") from exc


@dataclass(frozen=True)
class ClassRaw:
    """Raw per-class storage: responses plus trait values with missing flags."""

    class_id: str
    response: np.ndarray
    numeric: Mapping[str, np.ndarray]
    categorical: Mapping[str, tuple[str | None, ...]]

    @property
    def n(self) -> int:
        return int(self.response.size)

    def missing_mask(self, trait: str) -> np.ndarray:
        if trait in self.numeric:
            return np.isnan(self.numeric[trait])
        return np.array([v is None for v in self.categorical[trait]], dtype=bool)


@dataclass(frozen=True)
class ClassDesign:
    """Standardized design for one class: predictor columns plus a ones column."""

    class_id: str
    available: tuple[str, ...]
    design: np.ndarray
    response: np.ndarray

    @property
    def n(self) -> int:
        return int(self.response.size)

    @property
    def p(self) -> int:
        return len(self.available)


@dataclass(frozen=True)
class StandardizationStats:
    """Pooled mean/scale per predictor column; raw = standardized*scale + mean."""

    means: Mapping[str, float]
    scales: Mapping[str, float]

    def transform(self, name: str, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.means[name]) / self.scales[name]

    def inverse(self, name: str, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.scales[name] + self.means[name]


@dataclass(frozen=True)
class Dataset:
    """Immutable container moved through the ingest/mask/standardize stages."""

    schema: Schema
    class_ids: tuple[str, ...]
    raw: Mapping[str, ClassRaw] | None
    masked: bool = False
    trait_availability: Mapping[str, tuple[str, ...]] | None = None
    predictors: tuple[str, ...] = ()
    designs: Mapping[str, ClassDesign] | None = None
    stats: StandardizationStats | None = None
    dropped_responses: int = 0
    deleted_rows: Mapping[str, int] = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.class_ids)

    @property
    def is_standardized(self) -> bool:
        return self.designs is not None

    def size(self, class_id: str) -> int:
        if self.designs is not None:
            return self.designs[class_id].n
        assert self.raw is not None
        return self.raw[class_id].n

    @property
    def sizes(self) -> tuple[tuple[str, int], ...]:
        return tuple((c, self.size(c)) for c in self.class_ids)

    @property
    def n_total(self) -> int:
        return sum(n for _, n in self.sizes)

    def design(self, class_id: str) -> ClassDesign:
        if self.designs is None:
            raise ValueError("dataset is not standardized yet")
        return self.designs[class_id]

    def available(self, class_id: str) -> tuple[str, ...]:
        return self.design(class_id).available

    def classes_with(self, predictor: str) -> tuple[str, ...]:
        return tuple(c for c in self.class_ids if predictor in self.available(c))

    def subset(self, keep: Mapping[str, np.ndarray]) -> "Dataset":
        """Row-subset of a standardized dataset (same stats and availability).

        Classes whose kept-row mask is all-False are dropped.  The class
        order of the parent is preserved so coefficient layouts stay aligned.
        """
        if self.designs is None:
            raise ValueError("subset requires a standardized dataset")
        designs: dict[str, ClassDesign] = {}
        ids: list[str] = []
        for c in self.class_ids:
            mask = np.asarray(keep[c], dtype=bool)
            d = self.designs[c]
            if mask.shape != (d.n,):
                raise ValueError(f"keep mask for class {c!r} has wrong length")
            if not mask.any():
                logger.warning("class %s: no rows kept in subset; class dropped", c)
                continue
            ids.append(c)
            designs[c] = ClassDesign(c, d.available, d.design[mask], d.response[mask])
        if not ids:
            raise DataError("subset keeps no rows")
        return replace(
            self,
            class_ids=tuple(ids),
            raw=None,
            designs=designs,
            deleted_rows={},
        )


def _open_rows(source: str | Path | IO[str]) -> tuple[list[str], list[list[str]]]:
    if hasattr(source, "read"):
        reader = csv.reader(source)  # type: ignore[arg-type]
        rows = list(reader)
    else:
        path = Path(source)
        if not path.exists():
            raise DataError(f"data file not found: {path}")
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    if not rows:
        raise DataError("CSV has no header row")
    return rows[0], rows[1:]


def _parse_float(cell: str, column: str, rownum: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(
            f"row {rownum}: non-numeric value {cell!r} in numeric column {column!r}"
        ) from None
    if not np.isfinite(value):
        raise DataError(f"row {rownum}: non-finite value in numeric column {column!r}")
    return value


def _class_order(sizes: Mapping[str, int]) -> tuple[str, ...]:
    # Largest class first; ties broken by identifier for determinism.
    return tuple(sorted(sizes, key=lambda c: (-sizes[c], c)))


def ingest(source: str | Path | IO[str], schema: Schema) -> Dataset:
    """Parse a CSV into a raw Dataset.

    Empty cells are missing values.  Rows with a missing response are dropped
    and counted; a row with an empty class cell is an error.  Responses must
    be finite and lie in [0, 100].
    """
    header, rows = _open_rows(source)
    if len(set(header)) != len(header):
        raise DataError("CSV header contains duplicate column names")
    required = [schema.class_column, schema.response_column, *schema.traits]
    missing_cols = [c for c in required if c not in header]
    if missing_cols:
        raise SchemaError(f"columns not in CSV: {', '.join(missing_cols)}")
    col = {name: header.index(name) for name in required}
    extra = [c for c in header if c not in required]
    if extra:
        logger.debug("ignoring undeclared CSV columns: %s", ", ".join(extra))

    responses: dict[str, list[float]] = {}
    numeric: dict[str, dict[str, list[float]]] = {}
    categorical: dict[str, dict[str, list[str | None]]] = {}
    dropped_by_class: dict[str, int] = {}
    dropped = 0

    for rownum, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"row {rownum}: expected {len(header)} fields, got {len(row)}")
        class_id = row[col[schema.class_column]].strip()
        if not class_id:
            raise DataError(f"row {rownum}: empty class identifier")
        resp_cell = row[col[schema.response_column]].strip()
        if resp_cell == "":
            dropped += 1
            dropped_by_class[class_id] = dropped_by_class.get(class_id, 0) + 1
            continue
        y = _parse_float(resp_cell, schema.response_column, rownum)
        if not 0.0 <= y <= 100.0:
            raise DataError(f"row {rownum}: response {y} outside [0, 100]")
        if class_id not in responses:
            responses[class_id] = []
            numeric[class_id] = {t: [] for t in schema.numeric}
            categorical[class_id] = {t: [] for t in schema.categorical}
        responses[class_id].append(y)
        for t in schema.numeric:
            cell = row[col[t]].strip()
            numeric[class_id][t].append(np.nan if cell == "" else _parse_float(cell, t, rownum))
        for t, levels in schema.categorical.items():
            cell = row[col[t]].strip()
            if cell == "":
                categorical[class_id][t].append(None)
            else:
                if levels is not None and cell not in levels:
                    raise DataError(
                        f"row {rownum}: value {cell!r} not among declared levels of {t!r}"
                    )
                categorical[class_id][t].append(cell)

    for class_id, count in dropped_by_class.items():
        if class_id not in responses:
            logger.warning(
                "class %s: all %d rows had missing responses; class omitted", class_id, count
            )
    if dropped:
        logger.info("dropped %d rows with missing response", dropped)
    if not responses:
        raise DataError("no usable rows in CSV")

    raw = {
        c: ClassRaw(
            class_id=c,
            response=np.asarray(responses[c], dtype=float),
            numeric={t: np.asarray(v, dtype=float) for t, v in numeric[c].items()},
            categorical={t: tuple(v) for t, v in categorical[c].items()},
        )
        for c in responses
    }
    order = _class_order({c: raw[c].n for c in raw})
    return Dataset(schema=schema, class_ids=order, raw=raw, dropped_responses=dropped)


def apply_missingness_mask(dataset: Dataset) -> Dataset:
    """Group-level missingness policy: a trait with any missing cell inside a
    class is removed from that class's available set.  No rows are dropped.

    Idempotent: recomputes availability from the raw missing flags, which the
    mask never mutates.
    """
    if dataset.raw is None:
        raise ValueError("mask requires raw data")
    availability: dict[str, tuple[str, ...]] = {}
    for c in dataset.class_ids:
        raw = dataset.raw[c]
        kept: list[str] = []
        for trait in dataset.schema.traits:
            if raw.missing_mask(trait).any():
                logger.info("class %s: trait %s masked (missing cells present)", c, trait)
            else:
                kept.append(trait)
        if not kept:
            logger.warning("class %s: no traits survive masking; intercept-only fit", c)
        availability[c] = tuple(kept)
    return replace(dataset, masked=True, trait_availability=availability)


def _resolve_levels(dataset: Dataset) -> dict[str, tuple[str, ...]]:
    assert dataset.raw is not None
    levels: dict[str, tuple[str, ...]] = {}
    for trait, declared in dataset.schema.categorical.items():
        if declared is not None:
            levels[trait] = tuple(declared)
        else:
            seen = {
                v
                for c in dataset.class_ids
                for v in dataset.raw[c].categorical[trait]
                if v is not None
            }
            if not seen:
                levels[trait] = ()
            else:
                levels[trait] = tuple(sorted(seen))
    return levels


def _expanded_columns(
    dataset: Dataset, levels: Mapping[str, tuple[str, ...]]
) -> tuple[tuple[str, str, str | None], ...]:
    """(column name, source trait, indicator level or None) in declared order."""
    out: list[tuple[str, str, str | None]] = []
    for trait in dataset.schema.numeric:
        out.append((trait, trait, None))
    for trait in dataset.schema.categorical:
        lv = levels[trait]
        if not lv:
            continue
        ref = dataset.schema.reference.get(trait, min(lv))
        for level in lv:
            if level != ref:
                out.append((f"{trait}={level}", trait, level))
    return tuple(out)


def _raw_column(raw: ClassRaw, trait: str, level: str | None) -> np.ndarray:
    if level is None:
        return raw.numeric[trait].copy()
    values = raw.categorical[trait]
    out = np.empty(len(values), dtype=float)
    for i, v in enumerate(values):
        out[i] = np.nan if v is None else float(v == level)
    return out


def standardize(dataset: Dataset) -> tuple[Dataset, StandardizationStats]:
    """Expand categoricals to indicator columns and standardize every retained
    column to pooled mean 0 / sample SD 1 across the classes that carry it.

    If the missingness mask was bypassed, residual missing cells trigger
    listwise deletion within the class (logged).  A retained column with zero
    pooled variance is a named error.
    """
    if dataset.raw is None:
        raise ValueError("standardize requires raw data")
    if dataset.masked:
        assert dataset.trait_availability is not None
        trait_avail = dataset.trait_availability
    else:
        trait_avail = {c: dataset.schema.traits for c in dataset.class_ids}

    levels = _resolve_levels(dataset)
    columns = _expanded_columns(dataset, levels)

    # Per class: raw values of each available expanded column.
    values: dict[str, dict[str, np.ndarray]] = {}
    responses: dict[str, np.ndarray] = {}
    deleted: dict[str, int] = {}
    for c in dataset.class_ids:
        raw = dataset.raw[c]
        avail = set(trait_avail[c])
        cols = {name: _raw_column(raw, trait, level) for name, trait, level in columns if trait in avail}
        keep = np.ones(raw.n, dtype=bool)
        for arr in cols.values():
            keep &= ~np.isnan(arr)
        if not keep.all():
            deleted[c] = int((~keep).sum())
            logger.warning(
                "class %s: %d rows deleted listwise (missing cells past the mask)",
                c,
                deleted[c],
            )
        values[c] = {name: arr[keep] for name, arr in cols.items()}
        responses[c] = raw.response[keep]
        if responses[c].size == 0:
            raise DataError(f"class {c!r} has no rows left after listwise deletion")

    means: dict[str, float] = {}
    scales: dict[str, float] = {}
    retained: list[str] = []
    for name, _trait, _level in columns:
        pooled = [values[c][name] for c in dataset.class_ids if name in values[c]]
        if not pooled:
            logger.info("predictor %s: unavailable in every class; omitted", name)
            continue
        stacked = np.concatenate(pooled)
        if stacked.size < 2:
            raise DataError(f"predictor {name!r} has fewer than two observed values")
        mean = float(stacked.mean())
        scale = float(stacked.std(ddof=1))
        if scale <= 0.0:
            raise DataError(f"predictor {name!r} has zero variance across available classes")
        means[name] = mean
        scales[name] = scale
        retained.append(name)

    stats = StandardizationStats(means=means, scales=scales)
    designs: dict[str, ClassDesign] = {}
    sizes: dict[str, int] = {}
    for c in dataset.class_ids:
        avail = tuple(name for name in retained if name in values[c])
        n = responses[c].size
        mat = np.ones((n, len(avail) + 1), dtype=float)
        for j, name in enumerate(avail):
            mat[:, j] = stats.transform(name, values[c][name])
        designs[c] = ClassDesign(c, avail, mat, responses[c].astype(float))
        sizes[c] = n

    out = replace(
        dataset,
        class_ids=_class_order(sizes),
        masked=True,
        trait_availability=trait_avail,
        predictors=tuple(retained),
        designs=designs,
        stats=stats,
        deleted_rows=deleted,
    )
    return out, stats


def load_dataset(
    csv_source: str | Path | IO[str],
    schema: Schema | str | Path,
    apply_mask: bool = True,
) -> Dataset:
    """Ingest, mask and standardize in one call (the CLI entry path)."""
    if not isinstance(schema, Schema):
        schema = Schema.from_json(schema)
    ds = ingest(csv_source, schema)
    if apply_mask:
        ds = apply_missingness_mask(ds)
    ds, _ = standardize(ds)
    return ds


def dataset_from_arrays(
    columns: Mapping[str, Mapping[str, Sequence[float]]],
    responses: Mapping[str, Sequence[float]],
    apply_mask: bool = True,
    run_standardize: bool = True,
) -> Dataset:
    """Build a dataset from in-memory numeric columns (tests and benchmarks).

    NaN cells mark missing values.  Responses are only required to be finite;
    the [0, 100] response check applies to CSV ingestion alone.
    """
    traits = sorted({name for cols in columns.values() for name in cols})
    schema = Schema(numeric=traits) if traits else Schema(numeric=("x",))
    raw: dict[str, ClassRaw] = {}
    for c, resp in responses.items():
        y = np.asarray(resp, dtype=float)
        if not np.isfinite(y).all():
            raise DataError(f"class {c!r}: non-finite response")
        cols = columns.get(c, {})
        numeric = {}
        for t in traits:
            arr = np.asarray(cols.get(t, np.full(y.size, np.nan)), dtype=float)
            if arr.shape != y.shape:
                raise DataError(f"class {c!r}: column {t!r} length mismatch")
            numeric[t] = arr
        raw[c] = ClassRaw(c, y, numeric, {})
    order = _class_order({c: raw[c].n for c in raw})
    ds = Dataset(schema=schema, class_ids=order, raw=raw)
    if apply_mask:
        ds = apply_missingness_mask(ds)
    if run_standardize:
        ds, _ = standardize(ds)
    return ds


@dataclass(frozen=True)
class DescriptiveReport:
    """Raw-data summary: long-format stats, class sizes, missingness matrix."""

    stats: tuple[tuple[str, str, str, float], ...]
    class_sizes: tuple[tuple[str, int], ...]
    missingness_header: tuple[str, ...]
    missingness: tuple[tuple[object, ...], ...]


def _numeric_stats(values: np.ndarray, missing: np.ndarray) -> list[tuple[str, float]]:
    present = values[~missing] if missing.size else values
    n = missing.size
    out: list[tuple[str, float]] = [("n", float(n))]
    if present.size:
        sd = float(present.std(ddof=1)) if present.size > 1 else float("nan")
        out += [
            ("mean", float(present.mean())),
            ("sd", sd),
            ("median", float(np.median(present))),
            ("min", float(present.min())),
            ("max", float(present.max())),
        ]
    else:
        out += [(s, float("nan")) for s in ("mean", "sd", "median", "min", "max")]
    miss = int(missing.sum())
    out += [("missing_n", float(miss)), ("missing_pct", 100.0 * miss / n if n else float("nan"))]
    return out


def summarize(dataset: Dataset) -> DescriptiveReport:
    """Descriptive statistics per variable per class (plus a pooled group),
    class sizes largest-first, and a boolean per-observation missingness
    matrix.

    Operates on the raw ingest values, so masking and standardization do not
    change the report.  Row order inside the missingness matrix is canonical
    (class, then pattern) making the report invariant to input row order.
    """
    if dataset.raw is None:
        raise ValueError("summarize requires raw data")
    schema = dataset.schema
    levels = _resolve_levels(dataset)
    rows: list[tuple[str, str, str, float]] = []

    groups: list[tuple[str, tuple[str, ...]]] = [(ALL_GROUP, dataset.class_ids)]
    groups += [(c, (c,)) for c in dataset.class_ids]

    for group, members in groups:
        y = np.concatenate([dataset.raw[c].response for c in members])
        for stat, value in _numeric_stats(y, np.zeros(y.size, dtype=bool)):
            rows.append((group, schema.response_column, stat, value))
        for trait in schema.numeric:
            vals = np.concatenate([dataset.raw[c].numeric[trait] for c in members])
            miss = np.isnan(vals)
            for stat, value in _numeric_stats(vals, miss):
                rows.append((group, trait, stat, value))
        for trait in schema.categorical:
            cells = [v for c in members for v in dataset.raw[c].categorical[trait]]
            n = len(cells)
            rows.append((group, trait, "n", float(n)))
            for level in levels[trait]:
                count = sum(1 for v in cells if v == level)
                rows.append((group, trait, f"count[{level}]", float(count)))
                rows.append((group, trait, f"pct[{level}]", 100.0 * count / n if n else float("nan")))
            miss = sum(1 for v in cells if v is None)
            rows.append((group, trait, "missing_n", float(miss)))
            rows.append((group, trait, "missing_pct", 100.0 * miss / n if n else float("nan")))

    header = ("class",) + schema.traits
    matrix: list[tuple[object, ...]] = []
    for idx, c in enumerate(dataset.class_ids):
        raw = dataset.raw[c]
        flags = np.column_stack([raw.missing_mask(t) for t in schema.traits])
        patterns = sorted(tuple(int(v) for v in row) for row in flags)
        matrix += [(idx, c) + pat for pat in patterns]
    matrix.sort()
    trimmed = tuple(row[1:] for row in matrix)

    return DescriptiveReport(
        stats=tuple(rows),
        class_sizes=dataset.sizes,
        missingness_header=header,
        missingness=trimmed,
    )
