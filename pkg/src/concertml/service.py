"""Read-only HTTP inference service over one model bundle.

Endpoints (JSON request/response bodies, documented in docs/api.md):

    GET  /health            liveness + bundle format version
    GET  /model-card        metadata, hyperparameters, scores, city classes
    POST /predict/location  feature assignment -> 5-class distribution
    POST /predict/price     feature assignment -> price estimate

Invalid bodies get a 400 with a field-level message; internal model errors
get a 500. The bundle snapshot is immutable; ``ServiceState.reload`` swaps it
atomically for hot reloads.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .bundle import ModelBundle, dumps_canonical
from .city_cluster import assign_class
from .data_model import DAYS, GENRES
from .pipeline import bundle_predict_location, bundle_predict_price
from .preprocess import apply_minmax, log_transform

# Documented defaults for omitted request fields (docs/api.md).
REQUEST_DEFAULTS: dict[str, float] = {
    "concert_popularity": 0.5,
    "playcount": 2.0e6,
    "market_heat": 300.0,
    "venue_concert_count": 12.0,
    "venue_type": 2,
    "average_price": 150.0,
    "latitude": 38.0,
    "longitude": -95.0,
    "population_estimate_2017": 500000.0,
    "income_per_capita": 27000.0,
    "population_density": 5500.0,
    "class_label": 2,
}
DEFAULT_DAY = "Sat"
DEFAULT_GENRES = ("pop",)

_NUMERIC_FIELDS = (
    "concert_popularity", "playcount", "market_heat", "venue_concert_count",
    "average_price", "latitude", "longitude", "population_estimate_2017",
    "income_per_capita", "population_density", "genres_num",
)
_ALLOWED_FIELDS = set(_NUMERIC_FIELDS) | {
    "genres", "day", "venue_type", "class_label",
}


class RequestError(ValueError):
    """Invalid request body; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str):
        super().__init__(message)
        self.field = field


def build_feature_row(request: dict, bundle: ModelBundle) -> np.ndarray:
    """Validate a request body and assemble the bundle's covariate row.

    Omitted fields take the documented defaults. The city class comes from
    ``class_label`` or, when the bundle carries a city clustering model and
    income/density are supplied, from the nearest centroid.
    """
    if not isinstance(request, dict):
        raise RequestError("request body must be a JSON object", field="")
    for key in request:
        if key not in _ALLOWED_FIELDS:
            raise RequestError(f"unknown field: {key}", field=key)

    genres = request.get("genres", list(DEFAULT_GENRES))
    if not isinstance(genres, list):
        raise RequestError("genres must be a list of genre names", field="genres")
    for i, g in enumerate(genres):
        if g not in GENRES:
            raise RequestError(f"unknown genre: {g!r}", field=f"genres[{i}]")
    if len(set(genres)) != len(genres):
        raise RequestError("duplicate genre names", field="genres")

    day = request.get("day", DEFAULT_DAY)
    if day not in DAYS:
        raise RequestError(f"unknown day: {day!r} (expected one of {', '.join(DAYS)})",
                           field="day")

    venue_type = request.get("venue_type", REQUEST_DEFAULTS["venue_type"])
    if venue_type not in (1, 2, 3):
        raise RequestError("venue_type must be 1, 2 or 3", field="venue_type")

    values: dict[str, float] = {}
    for name in _NUMERIC_FIELDS:
        raw = request.get(name, REQUEST_DEFAULTS.get(name))
        if name == "genres_num" and raw is None:
            raw = float(max(len(genres), 1))
        if not isinstance(raw, (int, float)) or isinstance(raw, bool) or not np.isfinite(raw):
            raise RequestError(f"{name} must be a finite number", field=name)
        values[name] = float(raw)
    if values["concert_popularity"] < 0 or values["concert_popularity"] > 1:
        raise RequestError("concert_popularity must lie in [0, 1]",
                           field="concert_popularity")
    for name in ("playcount", "genres_num", "venue_concert_count",
                 "average_price", "market_heat"):
        if values[name] <= 0:
            raise RequestError(f"{name} must be positive", field=name)

    class_label = request.get("class_label")
    if class_label is None:
        if bundle.kmeans is not None and (
            "income_per_capita" in request or "population_density" in request
        ):
            class_label = assign_class(
                np.array([values["income_per_capita"], values["population_density"]]),
                bundle.kmeans,
            )
        else:
            class_label = REQUEST_DEFAULTS["class_label"]
    if class_label not in (0, 1, 2, 3, 4):
        raise RequestError("class_label must lie in 0..4", field="class_label")

    schema_values = {
        "average_price": values["average_price"],
        "latitude": values["latitude"],
        "longitude": values["longitude"],
        "concert_popularity": values["concert_popularity"],
        "playcount": values["playcount"],
        "Population_Estimate_2017": values["population_estimate_2017"],
        "market_heat": values["market_heat"],
        "Estimated_per_capita_income": values["income_per_capita"],
        "Population_density": values["population_density"],
        "Class": float(class_label),
        "genres_num": values["genres_num"],
        "venue_concert_count": values["venue_concert_count"],
        "venue_type": float(venue_type),
    }
    for g in GENRES:
        schema_values[g] = 1.0 if g in genres else 0.0
    for d in DAYS:
        schema_values[d] = 1.0 if d == day else 0.0

    return np.array([schema_values[name] for name in bundle.feature_columns])


def model_card(bundle: ModelBundle) -> dict:
    card = {
        "task": bundle.task,
        "format_version": bundle.version,
        "metadata": bundle.metadata,
        "feature_columns": list(bundle.feature_columns),
        "request_defaults": dict(REQUEST_DEFAULTS),
        "city_classes": None,
    }
    if bundle.kmeans is not None:
        centers = bundle.kmeans.centroids_original_units()
        card["city_classes"] = [
            {
                "class": j,
                "income_per_capita": float(centers[j, 0]),
                "population_density": float(centers[j, 1]),
            }
            for j in range(bundle.kmeans.k)
        ]
    return card


@dataclass
class ServiceState:
    bundle: ModelBundle  # primary bundle (served by /health and /model-card)
    extra: ModelBundle | None = None  # optional bundle for the other task
    ui_dir: Path | None = None

    def reload(self, bundle: ModelBundle, extra: ModelBundle | None = None) -> None:
        # attribute swaps are atomic for readers
        self.bundle = bundle
        self.extra = extra

    def bundle_for(self, task: str) -> ModelBundle | None:
        if self.bundle.task == task:
            return self.bundle
        if self.extra is not None and self.extra.task == task:
            return self.extra
        return None

    @property
    def tasks(self) -> list[str]:
        out = [self.bundle.task]
        if self.extra is not None and self.extra.task not in out:
            out.append(self.extra.task)
        return out


def _predict(state: ServiceState, task: str, body: dict) -> dict:
    bundle = state.bundle_for(task)
    if bundle is None:
        raise RequestError(
            f"bundle was trained for task {state.bundle.task!r}, not {task!r}",
            field="task",
        )
    row = build_feature_row(body, bundle)
    X = bundle.design_matrix(row.reshape(1, -1))
    X = log_transform(X, bundle.log_spec)
    X = apply_minmax(X, bundle.scaler)
    if task == "location":
        out = bundle_predict_location(bundle, X)
        probs = out["probabilities"][0]
        return {
            "probabilities": [float(p) for p in probs],
            "class": int(out["classes"][0]),
        }
    out = bundle_predict_price(bundle, X)
    scores = bundle.metadata.get("scores", {})
    return {
        "price": float(out["price"][0]),
        "model_scale": float(out["model_scale"][0]),
        "train_rmspe": scores.get("train_rmspe"),
    }


class BundleRequestHandler(BaseHTTPRequestHandler):
    state: ServiceState  # injected by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, payload: dict | bytes, content_type: str = "application/json") -> None:
        body = payload if isinstance(payload, bytes) else dumps_canonical(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _serve_static(self, path: str) -> None:
        assert self.state.ui_dir is not None
        rel = path.lstrip("/") or "index.html"
        target = (self.state.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.state.ui_dir.resolve())) or not target.is_file():
            self._send(404, {"error": f"not found: {path}"})
            return
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self._send(200, target.read_bytes(), content_type=ctype)

    def do_OPTIONS(self):  # CORS preflight
        self._send(204, b"", content_type="text/plain")

    def do_GET(self):
        if self.path == "/health":
            self._send(200, {
                "status": "ok",
                "format_version": self.state.bundle.version,
                "task": self.state.bundle.task,
                "tasks": self.state.tasks,
            })
        elif self.path == "/model-card":
            card = model_card(self.state.bundle)
            card["secondary"] = (
                model_card(self.state.extra) if self.state.extra is not None else None
            )
            self._send(200, card)
        elif self.state.ui_dir is not None:
            self._serve_static(self.path)
        else:
            self._send(404, {"error": f"not found: {self.path}"})

    def do_POST(self):
        if self.path not in ("/predict/location", "/predict/price"):
            self._send(404, {"error": f"not found: {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length else b"{}"
            try:
                body = json.loads(raw.decode("utf-8")) if raw.strip() else {}
            except json.JSONDecodeError as exc:
                self._send(400, {"error": f"invalid JSON body: {exc}", "field": ""})
                return
            task = self.path.rsplit("/", 1)[1]
            result = _predict(self.state, task, body)
            self._send(200, result)
        except RequestError as exc:
            self._send(400, {"error": str(exc), "field": exc.field})
        except Exception as exc:  # model/internal failure
            self._send(500, {"error": f"{type(exc).__name__}: {exc}"})


def make_server(
    bundle: ModelBundle,
    host: str = "127.0.0.1",
    port: int = 8787,
    ui_dir: str | Path | None = None,
    extra_bundle: ModelBundle | None = None,
) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port.

    ``extra_bundle`` may carry the other task so one service answers both
    /predict/location and /predict/price.
    """
    if extra_bundle is not None and extra_bundle.task == bundle.task:
        raise ValueError("extra bundle must cover the other task")
    state = ServiceState(bundle=bundle, extra=extra_bundle,
                         ui_dir=Path(ui_dir) if ui_dir else None)
    handler = type("Handler", (BundleRequestHandler,), {"state": state})
    server = ThreadingHTTPServer((host, port), handler)
    server.state = state  # type: ignore[attr-defined]
    return server


def serve_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
