"""Penalized coefficient pairs across classes and the sparse coupling matrix.

Every unordered class pair sharing a predictor contributes one penalty term
whose weight is the pair's sample-size ratio, normalized by the largest such
ratio over all class pairs.  Stacking the pairs row-wise yields the coupling
matrix used by the solver: each row holds +w and -w in the two slope columns.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .data import INTERCEPT, Dataset


@dataclass(frozen=True)
class FusionPair:
    """One penalized coefficient pair: predictor shared by two classes."""

    predictor: str
    class_a: str
    class_b: str
    raw_weight: float
    weight: float


@dataclass(frozen=True)
class CoefficientLayout:
    """Canonical flat layout of the joint coefficient vector.

    Per class (dataset order): one slope column per available predictor in
    global predictor order, then the class intercept.
    """

    entries: tuple[tuple[str, str], ...]

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "CoefficientLayout":
        entries: list[tuple[str, str]] = []
        for c in dataset.class_ids:
            entries += [(c, p) for p in dataset.available(c)]
            entries.append((c, INTERCEPT))
        return cls(entries=tuple(entries))

    @cached_property
    def _index(self) -> dict[tuple[str, str], int]:
        return {entry: i for i, entry in enumerate(self.entries)}

    @property
    def dim(self) -> int:
        return len(self.entries)

    def index(self, class_id: str, name: str) -> int:
        try:
            return self._index[(class_id, name)]
        except KeyError:
            raise KeyError(f"no coefficient for ({class_id!r}, {name!r}) in layout") from None

    def intercept_index(self, class_id: str) -> int:
        return self.index(class_id, INTERCEPT)

    @cached_property
    def class_slices(self) -> dict[str, slice]:
        """Contiguous column block of each class, intercept last."""
        blocks: dict[str, slice] = {}
        start = 0
        current: str | None = None
        for i, (c, _name) in enumerate(self.entries):
            if c != current:
                if current is not None:
                    blocks[current] = slice(start, i)
                current = c
                start = i
        if current is not None:
            blocks[current] = slice(start, self.dim)
        return blocks


def build_pairs(dataset: Dataset) -> tuple[FusionPair, ...]:
    """Enumerate all penalized pairs with normalized size-ratio weights.

    The normalizer is the maximum raw ratio over all unordered class pairs,
    shared by every predictor; pairs where either class lacks the predictor
    are structurally absent rather than zero-weighted.
    """
    sizes = dict(dataset.sizes)
    ids = dataset.class_ids
    if len(ids) < 2:
        return ()
    normalizer = max(
        max(sizes[a], sizes[b]) / min(sizes[a], sizes[b]) for a, b in combinations(ids, 2)
    )
    pairs: list[FusionPair] = []
    for predictor in dataset.predictors:
        carriers = dataset.classes_with(predictor)
        for a, b in combinations(carriers, 2):
            raw = max(sizes[a], sizes[b]) / min(sizes[a], sizes[b])
            pairs.append(FusionPair(predictor, a, b, raw, raw / normalizer))
    order = {p: i for i, p in enumerate(dataset.predictors)}
    rank = {c: i for i, c in enumerate(ids)}
    pairs.sort(key=lambda pr: (order[pr.predictor], rank[pr.class_a], rank[pr.class_b]))
    return tuple(pairs)


@dataclass(frozen=True)
class CouplingMatrix:
    """Sparse pair-difference matrix over the coefficient layout.

    One row per fusion pair with entries +w and -w in the slope columns of the
    two classes; intercept columns are never touched.
    """

    pairs: tuple[FusionPair, ...]
    layout: CoefficientLayout
    matrix: sp.csr_matrix

    @property
    def n_rows(self) -> int:
        return len(self.pairs)

    def penalty(self, beta: np.ndarray) -> float:
        if self.n_rows == 0:
            return 0.0
        return float(np.abs(self.matrix @ beta).sum())

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def restrict(self, dataset: Dataset) -> "CouplingMatrix":
        """Coupling for a class subset, keeping the original pair weights."""
        keep = set(dataset.class_ids)
        pairs = tuple(p for p in self.pairs if p.class_a in keep and p.class_b in keep)
        return build_coupling_matrix(pairs, CoefficientLayout.from_dataset(dataset))


def build_coupling_matrix(
    pairs: Sequence[FusionPair], layout: CoefficientLayout
) -> CouplingMatrix:
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for r, pair in enumerate(pairs):
        rows += [r, r]
        cols += [
            layout.index(pair.class_a, pair.predictor),
            layout.index(pair.class_b, pair.predictor),
        ]
        vals += [pair.weight, -pair.weight]
    matrix = sp.csr_matrix(
        (vals, (rows, cols)), shape=(len(pairs), layout.dim), dtype=float
    )
    return CouplingMatrix(pairs=tuple(pairs), layout=layout, matrix=matrix)


def fuse(dataset: Dataset) -> CouplingMatrix:
    """Pairs + coupling matrix on the dataset's canonical layout."""
    return build_coupling_matrix(build_pairs(dataset), CoefficientLayout.from_dataset(dataset))


def penalty_from_pairs(
    pairs: Sequence[FusionPair], layout: CoefficientLayout, beta: np.ndarray
) -> float:
    """Direct pairwise evaluation of the penalty (test cross-check path)."""
    total = 0.0
    for p in pairs:
        a = beta[layout.index(p.class_a, p.predictor)]
        b = beta[layout.index(p.class_b, p.predictor)]
        total += p.weight * abs(a - b)
    return total


def availability_map(dataset: Dataset) -> Mapping[str, tuple[str, ...]]:
    return {c: dataset.available(c) for c in dataset.class_ids}
