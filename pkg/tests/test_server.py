"""JSON service: endpoints, bounds, selection round-trip."""
from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request
from pathlib import Path

import numpy as np
import pytest

from fusedpool import FitConfig, StarThresholds, dataset_from_arrays, fit_separate, fuse
from fusedpool.server import build_state, make_server


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    rng = np.random.default_rng(0)
    columns = {
        "a": {"x": rng.normal(0, 1, 24), "w": rng.normal(0, 1, 24)},
        "b": {"x": rng.normal(0, 1, 15), "w": rng.normal(0, 1, 15)},
    }
    responses = {
        "a": np.clip(55 + 4 * columns["a"]["x"] + rng.normal(0, 2, 24), 1, 99),
        "b": np.clip(48 + 2 * columns["b"]["x"] + rng.normal(0, 2, 15), 1, 99),
    }
    dataset = dataset_from_arrays(columns, responses)
    coupling = fuse(dataset)
    out_dir = tmp_path_factory.mktemp("service_out")
    state = build_state(
        dataset,
        coupling,
        FitConfig(grid_size=7),
        k=3,
        seed=1,
        thresholds=StarThresholds(40, 60, 80),
        out_dir=out_dir,
    )
    server = make_server(state, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    port = server.server_address[1]
    yield f"http://127.0.0.1:{port}", state, dataset
    server.shutdown()
    server.server_close()


def get_json(url: str):
    with urllib.request.urlopen(url) as resp:
        return json.loads(resp.read()), resp.status


def test_meta_endpoint(service):
    base, state, dataset = service
    doc, status = get_json(f"{base}/api/meta")
    assert status == 200
    assert doc["schema"] == "fusedpool/1"
    assert [c["id"] for c in doc["classes"]] == list(dataset.class_ids)
    assert doc["predictors"] == list(dataset.predictors)
    assert doc["thresholds"] == [40.0, 60.0, 80.0]


def test_path_and_cv_endpoints_consistent(service):
    base, state, dataset = service
    path_doc, _ = get_json(f"{base}/api/path")
    cv_doc, _ = get_json(f"{base}/api/cv")
    assert path_doc["lambdas"] == cv_doc["lambdas"]
    assert path_doc["markers"]["cv"]["lambda"] == cv_doc["selected"]["lambda"]
    assert len(path_doc["df"]) == len(path_doc["lambdas"])
    # Every displayed curve has one value per grid point for available classes.
    for c in dataset.class_ids:
        for pred, series in path_doc["coefficients"][c].items():
            assert len(series) == len(path_doc["lambdas"])
            raw = path_doc["coefficients_raw"][c][pred]
            assert len(raw) == len(series)
            scale = dataset.stats.scales[pred]
            assert raw[0] == pytest.approx(series[0] / scale, rel=1e-12)


def test_model_at_zero_is_separate_ols(service):
    base, state, dataset = service
    doc, _ = get_json(f"{base}/api/model?lambda=0")
    sep = fit_separate(dataset)
    for entry in doc["classes"]:
        c = entry["id"]
        for pred, value in entry["coefficients"].items():
            assert value == pytest.approx(sep.slope(c, pred), abs=1e-9)
        assert entry["intercept"] == pytest.approx(sep.intercept(c), abs=1e-9)


def test_model_at_lambda_max_is_fully_fused(service):
    base, state, dataset = service
    lam = state.path.lambda_max
    doc, _ = get_json(f"{base}/api/model?lambda={lam}")
    for groups in doc["fusion"].values():
        assert len(groups) == 1


def test_out_of_range_lambda_is_400_with_bounds(service):
    base, state, _ = service
    with pytest.raises(urllib.error.HTTPError) as info:
        get_json(f"{base}/api/model?lambda=1e9")
    assert info.value.code == 400
    body = json.loads(info.value.read())
    assert body["lambda_max"] == pytest.approx(state.path.lambda_max)
    with pytest.raises(urllib.error.HTTPError) as info2:
        get_json(f"{base}/api/model?lambda=-0.5")
    assert info2.value.code == 400


def test_select_round_trips_model_document(service):
    base, state, _ = service
    lam = state.cv.selected_lambda
    req = urllib.request.Request(
        f"{base}/api/select",
        data=json.dumps({"lambda": lam}).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req) as resp:
        result = json.loads(resp.read())
    written = Path(result["written"])
    assert written.exists()

    with urllib.request.urlopen(f"{base}/api/model?lambda={lam}") as resp:
        served = resp.read()
    assert written.read_bytes() == served  # bit-exact round trip


def test_two_commits_write_distinct_files(service):
    base, state, _ = service
    names = []
    for _ in range(2):
        req = urllib.request.Request(
            f"{base}/api/select",
            data=json.dumps({"lambda": 0.0}).encode(),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with urllib.request.urlopen(req) as resp:
            names.append(json.loads(resp.read())["written"])
    assert names[0] != names[1]
    assert Path(names[0]).read_bytes() == Path(names[1]).read_bytes()


def test_unknown_api_endpoint_404(service):
    base, _, _ = service
    with pytest.raises(urllib.error.HTTPError) as info:
        get_json(f"{base}/api/wat")
    assert info.value.code == 404


def test_bad_select_body_400(service):
    base, _, _ = service
    req = urllib.request.Request(
        f"{base}/api/select", data=b"{}", headers={"Content-Type": "application/json"}, method="POST"
    )
    with pytest.raises(urllib.error.HTTPError) as info:
        urllib.request.urlopen(req)
    assert info.value.code == 400
