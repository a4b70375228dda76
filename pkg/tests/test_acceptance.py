"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the lines live.
"""
from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from fusedpool import (
    FitConfig,
    PanelRecord,
    StarThresholds,
    accuracy,
    cli,
    consumer_accuracy,
    cv_select,
    dataset_from_arrays,
    fit_new_pooled,
    fit_separate,
    fuse,
    lambda_max,
    mq4,
    qp_oracle,
    solve_at,
    solve_path,
    to_stars,
)
from fusedpool.solver import objective

from test_mq4 import oracle_trimmed_mean
from util import centered_parts, make_random_instance, two_class_instance

SAMPLE = Path(__file__).resolve().parent.parent / "sample_data"


def criterion(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"[ACCEPTANCE] {name}: {status}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def test_oracle_equivalence():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst_coef = 0.0
    worst_gap = 0.0
    # Objective agreement at 1e-6 needs coefficients well under the 1e-4 bar
    # (the l1 term is first-order in the coefficient error), so the ADMM side
    # runs at tightened tolerances here.
    config = FitConfig(tol_abs=1e-11, tol_rel=1e-9)
    for _ in range(20):
        ds, coup = make_random_instance(rng, m_range=(2, 4), p_max=3, n_range=(5, 30))
        lam_top = lambda_max(ds, coup, config)
        for frac in rng.uniform(0.03, 0.97, 5):
            lam = float(frac * lam_top)
            admm = solve_at(ds, coup, lam, config)
            ref = qp_oracle(ds, coup, lam)
            worst_coef = max(worst_coef, float(np.abs(admm.beta - ref).max()))
            gap = abs(
                objective(ds, coup, admm.beta, lam) - objective(ds, coup, ref, lam)
            )
            worst_gap = max(worst_gap, gap)
    elapsed = time.perf_counter() - start
    criterion(
        "oracle-equivalence",
        worst_coef <= 1e-4 and worst_gap <= 1e-6 and elapsed < 60.0,
        f"max coef diff {worst_coef:.2e}, max objective gap {worst_gap:.2e}, {elapsed:.1f}s",
    )


def test_endpoint_identities():
    rng = np.random.default_rng(7)
    worst_sep = 0.0
    worst_pool = 0.0
    for _ in range(10):
        ds, coup = make_random_instance(rng)
        path = solve_path(ds, coup, FitConfig(grid_size=12))
        worst_sep = max(worst_sep, float(np.abs(path.betas[0] - fit_separate(ds).beta).max()))
        worst_pool = max(
            worst_pool, float(np.abs(path.betas[-1] - fit_new_pooled(ds).beta).max())
        )
    criterion(
        "endpoint-identities",
        worst_sep <= 1e-6 and worst_pool <= 1e-6,
        f"separate diff {worst_sep:.2e}, pooled diff {worst_pool:.2e}",
    )


def test_analytic_pooling_threshold():
    rng = np.random.default_rng(99)
    ds, coup = two_class_instance(rng)
    x1, y1 = centered_parts(ds, ds.class_ids[0], "x")
    x2, y2 = centered_parts(ds, ds.class_ids[1], "x")
    bbar = float((x1 @ y1 + x2 @ y2) / (x1 @ x1 + x2 @ x2))
    analytic = abs(float(x1 @ (y1 - x1 * bbar))) / coup.pairs[0].weight
    measured = lambda_max(ds, coup)
    rel = abs(measured - analytic) / analytic
    criterion(
        "analytic-pooling-threshold",
        rel <= 0.01,
        f"measured {measured:.6g} vs analytic {analytic:.6g}, rel err {rel:.2e}",
    )


def test_path_structure():
    rng = np.random.default_rng(31)
    config = FitConfig(grid_size=15, tol_abs=1e-11, tol_rel=1e-9)
    ok = True
    details = []
    for _ in range(6):
        ds, coup = make_random_instance(rng)
        path = solve_path(ds, coup, config)
        rss_ok = bool(np.all(np.diff(path.rss) >= -1e-8))
        pen_ok = bool(np.all(np.diff(path.penalty) <= 1e-8))
        df0_ok = path.df[0] == sum(len(ds.available(c)) + 1 for c in ds.class_ids)
        dfmax_ok = path.df[-1] == len(ds.predictors) + ds.n_classes
        ok = ok and rss_ok and pen_ok and df0_ok and dfmax_ok
        if not (rss_ok and pen_ok and df0_ok and dfmax_ok):
            details.append(f"rss={rss_ok} pen={pen_ok} df0={df0_ok} dfmax={dfmax_ok}")
    criterion("path-structure", ok, "; ".join(details) if details else "6 instances clean")


def _shared_slope_benchmark(seed: int) -> bool:
    """One run of the unbalanced shared-coefficient simulation."""
    rng = np.random.default_rng(seed)
    sizes = {"c_big": 100, "c_s1": 10, "c_s2": 10}
    intercepts = {"c_big": 45.0, "c_s1": 50.0, "c_s2": 55.0}
    slopes = np.array([3.0, -2.0])
    columns = {}
    responses = {}
    for c, n in sizes.items():
        x = rng.normal(0.0, 1.0, (n, 2))
        columns[c] = {"x0": x[:, 0], "x1": x[:, 1]}
        responses[c] = intercepts[c] + x @ slopes + rng.normal(0.0, 5.0, n)
    ds = dataset_from_arrays(columns, responses)
    coup = fuse(ds)
    report = cv_select(ds, coup, FitConfig(grid_size=50), k=5, seed=seed)
    selected = report.macro_mae[report.selected_index]
    separate = report.macro_mae[0]  # lambda = 0 entry
    classic = report.classic_pooled_macro_mae
    return bool(selected < separate and selected < classic)


def test_qualitative_cv_improvement():
    start = time.perf_counter()
    wins = sum(_shared_slope_benchmark(seed) for seed in range(10))
    elapsed = time.perf_counter() - start
    criterion(
        "cv-beats-endpoints",
        wins >= 8 and elapsed < 300.0,
        f"{wins}/10 seeds, {elapsed:.1f}s",
    )


def test_metric_identities():
    rng = np.random.default_rng(55)
    ok = True
    for _ in range(1000):
        cm = rng.integers(0, 25, size=(4, 4))
        if cm.sum() == 0:
            continue
        acc = accuracy(cm)
        cons = consumer_accuracy(cm)
        if cons < acc:
            ok = False
        if abs((cons - acc) - np.tril(cm, k=-1).sum() / cm.sum()) > 1e-15:
            ok = False
    stars_ok = True
    for _ in range(200):
        cuts = np.sort(rng.uniform(1.0, 99.0, 3))
        if cuts[0] >= cuts[1] or cuts[1] >= cuts[2]:
            continue
        th = StarThresholds(*cuts)
        scores = rng.uniform(-20.0, 120.0, 50)
        stars = to_stars(scores, th)
        if not np.isin(stars, (2, 3, 4, 5)).all():
            stars_ok = False
        order = np.argsort(scores)
        if np.any(np.diff(stars[order]) < 0):
            stars_ok = False
    criterion(
        "metric-identities",
        ok and stars_ok,
        "1000 matrices, 200 threshold draws",
    )


def test_mq4_oracle_agreement():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(1000):
        traits = [tuple(rng.uniform(0, 100, 10)) for _ in range(4)]
        got = mq4(PanelRecord(*traits))
        want = (
            0.3 * oracle_trimmed_mean(traits[0])
            + 0.1 * oracle_trimmed_mean(traits[1])
            + 0.3 * oracle_trimmed_mean(traits[2])
            + 0.3 * oracle_trimmed_mean(traits[3])
        )
        worst = max(worst, abs(got - want))
    base = (50.0,) * 10
    bumped = (50.0,) * 9 + (90.0,)
    mono = mq4(PanelRecord(bumped, base, base, base)) >= mq4(
        PanelRecord(base, base, base, base)
    )
    criterion(
        "mq4-oracle",
        worst <= 1e-12 and mono,
        f"max abs diff {worst:.2e} over 1000 records",
    )


def test_rerun_determinism(tmp_path):
    outs = {"path": [], "cv": []}
    for run in range(2):
        for cmd in ("path", "cv"):
            out = tmp_path / f"{cmd}{run}"
            code = cli.main(
                [
                    cmd,
                    "--data",
                    str(SAMPLE / "toy.csv"),
                    "--schema",
                    str(SAMPLE / "schema.json"),
                    "--out",
                    str(out),
                    "--grid-size",
                    "6",
                ]
                + (["--k", "4", "--seed", "9"] if cmd == "cv" else [])
            )
            assert code == 0
            outs[cmd].append(out)
    identical = True
    compared = 0
    for cmd in ("path", "cv"):
        a, b = outs[cmd]
        for f in sorted(a.iterdir()):
            compared += 1
            if f.read_bytes() != (b / f.name).read_bytes():
                identical = False
    criterion("rerun-determinism", identical, f"{compared} files byte-compared")
