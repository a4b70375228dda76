"""Shared helpers for the test suite: random instances and tiny fixtures."""
from __future__ import annotations

import numpy as np

from fusedpool import dataset_from_arrays, fuse


def make_random_instance(
    rng: np.random.Generator,
    m_range: tuple[int, int] = (2, 4),
    p_max: int = 3,
    n_range: tuple[int, int] = (5, 30),
    mask_prob: float = 0.25,
    noise_sd: float = 2.0,
):
    """Random multi-class regression problem with a random availability mask.

    Masked (class, predictor) cells are all-NaN columns, so the standard
    ingest pipeline derives the availability sets.  Retries until at least one
    predictor is shared by two classes.
    """
    while True:
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        p = int(rng.integers(1, p_max + 1))
        preds = [f"x{j}" for j in range(p)]
        avail = rng.random((m, p)) > mask_prob
        if not any(avail[:, j].sum() >= 2 for j in range(p)):
            continue
        columns: dict[str, dict[str, np.ndarray]] = {}
        responses: dict[str, np.ndarray] = {}
        for i in range(m):
            c = f"c{i}"
            n = int(rng.integers(n_range[0], n_range[1] + 1))
            slopes = rng.normal(0.0, 2.0, p) * avail[i]
            intercept = rng.normal(50.0, 5.0)
            x = rng.normal(0.0, 1.0, (n, p))
            y = intercept + x @ slopes + rng.normal(0.0, noise_sd, n)
            columns[c] = {
                preds[j]: (x[:, j] if avail[i, j] else np.full(n, np.nan))
                for j in range(p)
            }
            responses[c] = y
        dataset = dataset_from_arrays(columns, responses)
        coupling = fuse(dataset)
        if coupling.n_rows == 0:
            continue
        return dataset, coupling


def two_class_instance(
    rng: np.random.Generator, n1: int = 12, n2: int = 7, noise_sd: float = 1.0
):
    """Two classes sharing a single predictor (closed-form testbed)."""
    x1 = rng.normal(0.0, 1.0, n1)
    x2 = rng.normal(0.0, 1.0, n2)
    y1 = 48.0 + 3.0 * x1 + rng.normal(0.0, noise_sd, n1)
    y2 = 55.0 - 1.0 * x2 + rng.normal(0.0, noise_sd, n2)
    dataset = dataset_from_arrays(
        {"a": {"x": x1}, "b": {"x": x2}}, {"a": y1, "b": y2}
    )
    return dataset, fuse(dataset)


def centered_parts(dataset, class_id: str, predictor: str):
    """Within-class centered design column and response (intercepts profiled
    out), for subgradient-style closed forms."""
    des = dataset.design(class_id)
    j = des.available.index(predictor)
    x = des.design[:, j]
    y = des.response
    return x - x.mean(), y - y.mean()
