"""Read-only JSON service over precomputed fit results, plus static UI files.

All fitting happens once at startup; request handlers only serialize the
immutable state.  The single mutating route, POST /api/select, writes a new
selected-model export under the output directory and never touches the
fitted results.
"""
from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .data import Dataset
from .evaluation import StarThresholds
from .exports import (
    cv_document,
    json_bytes,
    meta_document,
    model_document,
    path_document,
    write_json,
)
from .fusion import CouplingMatrix
from .selection import AicCurve, CvReport, aic_select, cv_select
from .solver import FitConfig, PathResult, solve_path

logger = logging.getLogger(__name__)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
}


class ServerError(RuntimeError):
    pass


@dataclass
class ServiceState:
    """Immutable fit results plus the select-export bookkeeping."""

    dataset: Dataset
    coupling: CouplingMatrix
    path: PathResult
    cv: CvReport
    aic: AicCurve
    thresholds: StarThresholds | None
    out_dir: Path
    ui_dir: Path | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _select_count: int = 0

    def markers(self) -> dict:
        return {
            "aic": {"lambda": self.aic.selected_lambda, "index": self.aic.selected_index},
            "cv": {"lambda": self.cv.selected_lambda, "index": self.cv.selected_index},
        }

    def snap(self, lam: float) -> int:
        if lam < 0.0 or lam > self.path.lambda_max:
            raise ValueError(
                f"lambda {lam:g} outside [0, {self.path.lambda_max:.17g}]"
            )
        return self.path.index_of(lam)

    def select(self, lam: float) -> dict:
        index = self.snap(lam)
        doc = model_document(self.dataset, self.path, index)
        with self._lock:
            self._select_count += 1
            name = f"selected_model_{time.time_ns()}_{self._select_count:04d}.json"
            target = self.out_dir / name
            write_json(target, doc)
        logger.info("selection exported to %s", target)
        return {
            "schema": doc["schema"],
            "kind": "select",
            "written": str(target),
            "lambda": doc["lambda"],
            "index": index,
        }


def build_state(
    dataset: Dataset,
    coupling: CouplingMatrix,
    config: FitConfig,
    k: int,
    seed: int,
    thresholds: StarThresholds | None,
    out_dir: Path,
    ui_dir: Path | None = None,
) -> ServiceState:
    """Fit everything the endpoints need, once."""
    logger.info("precomputing path and cross-validation state")
    path = solve_path(dataset, coupling, config)
    cv = cv_select(dataset, coupling, config, k=k, seed=seed, path=path)
    aic = aic_select(path, dataset.n_total)
    out_dir.mkdir(parents=True, exist_ok=True)
    return ServiceState(
        dataset=dataset,
        coupling=coupling,
        path=path,
        cv=cv,
        aic=aic,
        thresholds=thresholds,
        out_dir=out_dir,
        ui_dir=ui_dir,
    )


class ApiHandler(BaseHTTPRequestHandler):
    state: ServiceState  # bound in make_server

    def log_message(self, format: str, *args) -> None:  # noqa: A002 (stdlib name)
        logger.debug("%s - %s", self.address_string(), format % args)

    def _send_bytes(self, code: int, payload: bytes, content_type: str) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, code: int, doc: dict) -> None:
        self._send_bytes(code, json_bytes(doc), "application/json")

    def _send_error_json(self, code: int, message: str, **extra) -> None:
        self._send_json(code, {"schema": "fusedpool/1", "kind": "error", "error": message, **extra})

    def _lambda_param(self, query: str) -> float:
        params = parse_qs(query)
        if "lambda" not in params:
            raise ValueError("missing 'lambda' query parameter")
        return float(params["lambda"][0])

    def do_GET(self) -> None:  # noqa: N802 (stdlib casing)
        st = self.state
        url = urlparse(self.path)
        try:
            if url.path == "/api/meta":
                self._send_json(200, meta_document(st.dataset, st.path, st.thresholds))
            elif url.path == "/api/path":
                self._send_json(200, path_document(st.dataset, st.path, st.markers()))
            elif url.path == "/api/cv":
                self._send_json(200, cv_document(st.dataset, st.cv, st.aic))
            elif url.path == "/api/model":
                try:
                    lam = self._lambda_param(url.query)
                    index = st.snap(lam)
                except ValueError as exc:
                    self._send_error_json(
                        400,
                        str(exc),
                        lambda_min=0.0,
                        lambda_max=float(st.path.lambda_max),
                    )
                    return
                self._send_json(200, model_document(st.dataset, st.path, index))
            elif url.path.startswith("/api/"):
                self._send_error_json(404, f"unknown endpoint {url.path}")
            else:
                self._serve_static(url.path)
        except BrokenPipeError:
            pass

    def do_POST(self) -> None:  # noqa: N802
        st = self.state
        url = urlparse(self.path)
        if url.path != "/api/select":
            self._send_error_json(404, f"unknown endpoint {url.path}")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"{}")
            lam = float(body["lambda"])
        except (KeyError, TypeError, ValueError) as exc:
            self._send_error_json(400, f"body must be JSON with a 'lambda' field: {exc}")
            return
        try:
            result = st.select(lam)
        except ValueError as exc:
            self._send_error_json(
                400, str(exc), lambda_min=0.0, lambda_max=float(st.path.lambda_max)
            )
            return
        self._send_json(200, result)

    def _serve_static(self, path: str) -> None:
        st = self.state
        if st.ui_dir is None:
            self._send_error_json(404, "no UI bundle configured; API lives under /api/")
            return
        rel = path.lstrip("/") or "index.html"
        target = (st.ui_dir / rel).resolve()
        try:
            target.relative_to(st.ui_dir.resolve())
        except ValueError:
            self._send_error_json(404, "not found")
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_error_json(404, "not found")
            return
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send_bytes(200, target.read_bytes(), ctype)


def make_server(state: ServiceState, port: int = 8000, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    handler = type("BoundApiHandler", (ApiHandler,), {"state": state})
    try:
        return ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        raise ServerError(f"cannot bind {host}:{port}: {exc}") from exc
