"""HTTP surface of the scoring sidecar.

Speaks the same wire protocol as the reward engine's constant-mock scorer
binding, so the two are interchangeable at the wire level:

  POST /v1/semantic-score
    request:  {"model": str | null, "items": [{"src": str, "ref": str | null, "hyp": str}]}
    response: {"model": str, "scores": [float], "latency_ms": [float]}
  GET /v1/health -> {"status": "ok" | "loading", "model": str}

Scores are served raw (unrounded); any rounding or weighting is the reward
engine's job. Inference over one request is serialized behind a lock;
concurrent HTTP requests queue on it.
"""

from __future__ import annotations

import logging
import threading
import time

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from starlette.requests import Request

from .model import ModelError, load_model

logger = logging.getLogger("comet_bridge")


class BridgeState:
    def __init__(self, default_model=None, batch_size: int = 64):
        self.default_model = default_model
        self.batch_size = batch_size
        self.clamped = 0
        self._lock = threading.Lock()

    @property
    def loaded(self) -> bool:
        return self.default_model is not None

    def resolve(self, spec):
        if spec is None or (self.loaded and spec == self.default_model.model_id):
            if not self.loaded:
                raise ModelError("model not loaded")
            return self.default_model
        return load_model(spec)

    def score(self, model, items: list[dict]) -> list[float]:
        scores: list[float] = []
        with self._lock:  # single model instance: inference serialized per batch
            for start in range(0, len(items), self.batch_size):
                scores.extend(model.score_batch(items[start : start + self.batch_size]))
        clamped = [min(max(s, 0.0), 1.0) for s in scores]
        for raw, kept in zip(scores, clamped):
            if raw != kept:
                self.clamped += 1
                logger.warning("clamped out-of-range score %r to %r", raw, kept)
        return clamped


def _validate_items(items) -> str | None:
    if not isinstance(items, list):
        return "items must be a list"
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            return f"item {i} must be an object"
        if not isinstance(item.get("src"), str):
            return f"item {i} is missing a string 'src'"
        if not isinstance(item.get("hyp"), str):
            return f"item {i} is missing a string 'hyp'"
        ref = item.get("ref")
        if ref is not None and not isinstance(ref, str):
            return f"item {i} has a non-string 'ref'"
    return None


def create_app(model_spec: str | None = None, weights_path: str | None = None,
               batch_size: int = 64, defer_load: bool = False) -> FastAPI:
    """Build the bridge app; the model loads eagerly unless defer_load."""
    app = FastAPI(title="comet-bridge")
    state = BridgeState(batch_size=batch_size)
    app.state.bridge = state
    if not defer_load:
        state.default_model = load_model(model_spec, weights_path)
        app.state.model_spec = None
    else:
        app.state.model_spec = (model_spec, weights_path)

    @app.get("/v1/health")
    def health() -> dict:
        if not state.loaded:
            return {"status": "loading", "model": ""}
        return {"status": "ok", "model": state.default_model.model_id}

    @app.post("/v1/semantic-score")
    async def semantic_score(request: Request):
        try:
            body = await request.json()
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": f"bad JSON: {exc}"})
        if not isinstance(body, dict):
            return JSONResponse(status_code=400, content={"detail": "body must be an object"})
        problem = _validate_items(body.get("items"))
        if problem is not None:
            return JSONResponse(status_code=400, content={"detail": problem})
        if not state.loaded:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})
        try:
            model = state.resolve(body.get("model"))
        except ModelError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})

        items = body["items"]
        started = time.perf_counter()
        scores = state.score(model, items)
        per_item = (time.perf_counter() - started) * 1000.0 / max(len(items), 1)
        return {
            "model": model.model_id,
            "scores": scores,
            "latency_ms": [per_item] * len(items),
        }

    return app
