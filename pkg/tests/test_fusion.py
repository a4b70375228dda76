"""Fusion pairs, weights and the coupling matrix."""
from __future__ import annotations

import numpy as np
import pytest

from fusedpool import (
    CoefficientLayout,
    build_coupling_matrix,
    build_pairs,
    dataset_from_arrays,
    fuse,
)
from fusedpool.fusion import FusionPair, penalty_from_pairs

from util import make_random_instance


def sized_dataset(sizes: dict[str, int], preds=("x",), missing: set | None = None):
    """Classes of given sizes; (class, pred) in `missing` becomes all-NaN."""
    rng = np.random.default_rng(0)
    missing = missing or set()
    columns = {}
    responses = {}
    for c, n in sizes.items():
        columns[c] = {
            p: (np.full(n, np.nan) if (c, p) in missing else rng.normal(0, 1, n))
            for p in preds
        }
        responses[c] = rng.normal(50, 5, n)
    return dataset_from_arrays(columns, responses)


def test_weight_ratio_and_global_normalizer():
    ds = sized_dataset({"big": 317, "small": 17})
    pairs = build_pairs(ds)
    assert len(pairs) == 1
    pair = pairs[0]
    assert pair.raw_weight == pytest.approx(317 / 17)
    assert pair.raw_weight == pytest.approx(18.6471, abs=5e-5)
    assert pair.weight == 1.0  # this pair is the global maximum ratio


def test_equal_sizes_normalized_by_global_max():
    ds = sized_dataset({"a": 10, "b": 10, "c": 30})
    pairs = {(p.class_a, p.class_b): p for p in build_pairs(ds)}
    assert pairs[("a", "b")].raw_weight == 1.0
    assert pairs[("a", "b")].weight == pytest.approx(1.0 / 3.0)
    assert pairs[("c", "a")].weight == 1.0


def test_pair_absent_when_predictor_missing_in_one_class():
    ds = sized_dataset({"a": 12, "b": 10}, preds=("x", "w"), missing={("b", "w")})
    pairs = build_pairs(ds)
    assert [(p.predictor, p.class_a, p.class_b) for p in pairs] == [("x", "a", "b")]


def test_smallest_coupling_matrix():
    ds = sized_dataset({"a": 8, "b": 8})
    coup = fuse(ds)
    assert coup.matrix.shape == (1, coup.layout.dim)
    row = coup.dense()[0]
    w = coup.pairs[0].weight
    ia = coup.layout.index("a", "x")
    ib = coup.layout.index("b", "x")
    assert row[ia] == pytest.approx(w)
    assert row[ib] == pytest.approx(-w)
    assert np.count_nonzero(row) == 2


def test_three_class_pair_counts():
    full = fuse(sized_dataset({"c0": 9, "c1": 9, "c2": 9}))
    assert full.n_rows == 3  # C(3, 2)

    partial = fuse(
        sized_dataset({"c0": 9, "c1": 9, "c2": 9}, preds=("x",), missing={("c1", "x")})
    )
    assert partial.n_rows == 1
    pair = partial.pairs[0]
    assert {pair.class_a, pair.class_b} == {"c0", "c2"}


def test_row_count_matches_combinatorial_formula():
    rng = np.random.default_rng(7)
    for _ in range(10):
        ds, coup = make_random_instance(rng)
        expected = 0
        for pred in ds.predictors:
            g = len(ds.classes_with(pred))
            expected += g * (g - 1) // 2
        assert coup.n_rows == expected


def test_rows_sum_to_zero_and_intercepts_untouched():
    rng = np.random.default_rng(1)
    ds, coup = make_random_instance(rng, m_range=(3, 4))
    dense = coup.dense()
    np.testing.assert_allclose(dense.sum(axis=1), 0.0, atol=1e-15)
    for c in ds.class_ids:
        col = coup.layout.intercept_index(c)
        assert not dense[:, col].any()


def test_matrix_penalty_matches_direct_pair_sum():
    rng = np.random.default_rng(2)
    for _ in range(10):
        ds, coup = make_random_instance(rng)
        beta = rng.normal(0, 3, coup.layout.dim)
        direct = penalty_from_pairs(coup.pairs, coup.layout, beta)
        assert coup.penalty(beta) == pytest.approx(direct, abs=1e-12)


def test_weights_in_unit_interval_and_max_attained_when_shared():
    rng = np.random.default_rng(3)
    for _ in range(10):
        ds, coup = make_random_instance(rng, mask_prob=0.0)  # complete availability
        weights = [p.weight for p in coup.pairs]
        assert all(0.0 < w <= 1.0 for w in weights)
        assert max(weights) == pytest.approx(1.0)


def test_relabeling_classes_leaves_penalty_invariant():
    rng = np.random.default_rng(4)
    ds, coup = make_random_instance(rng, m_range=(3, 3), mask_prob=0.0)
    beta = rng.normal(0, 2, coup.layout.dim)

    rename = {c: f"z{i}" for i, c in enumerate(ds.class_ids)}
    columns = {
        rename[c]: {
            p: ds.design(c).design[:, ds.design(c).available.index(p)]
            for p in ds.available(c)
        }
        for c in ds.class_ids
    }
    responses = {rename[c]: ds.design(c).response for c in ds.class_ids}
    ds2 = dataset_from_arrays(columns, responses)
    coup2 = fuse(ds2)

    beta2 = np.empty_like(beta)
    for i, (c, name) in enumerate(coup.layout.entries):
        beta2[coup2.layout.index(rename[c], name)] = beta[i]
    assert coup2.penalty(beta2) == pytest.approx(coup.penalty(beta), rel=1e-9)


def test_row_order_sorted_by_predictor_then_classes():
    ds = sized_dataset({"a": 9, "b": 9, "c": 9}, preds=("x", "w"))
    coup = fuse(ds)
    keys = [(p.predictor, p.class_a, p.class_b) for p in coup.pairs]
    order = {p: i for i, p in enumerate(ds.predictors)}
    rank = {c: i for i, c in enumerate(ds.class_ids)}
    sort_key = lambda k: (order[k[0]], rank[k[1]], rank[k[2]])
    assert keys == sorted(keys, key=sort_key)


def test_layout_missing_coefficient_is_an_error():
    ds = sized_dataset({"a": 8, "b": 8})
    layout = CoefficientLayout.from_dataset(ds)
    bogus = FusionPair("nope", "a", "b", 1.0, 1.0)
    with pytest.raises(KeyError, match="nope"):
        build_coupling_matrix([bogus], layout)


def test_restrict_keeps_original_weights():
    ds = sized_dataset({"a": 30, "b": 10, "c": 10})
    coup = fuse(ds)
    sub = ds.subset(
        {
            "a": np.ones(30, dtype=bool),
            "b": np.ones(10, dtype=bool),
            "c": np.zeros(10, dtype=bool),
        }
    )
    restricted = coup.restrict(sub)
    assert {(p.class_a, p.class_b) for p in restricted.pairs} == {("a", "b")}
    original = next(p for p in coup.pairs if {p.class_a, p.class_b} == {"a", "b"})
    assert restricted.pairs[0].weight == original.weight
