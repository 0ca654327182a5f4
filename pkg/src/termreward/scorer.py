"""Semantic-scorer bindings and the scorer wire protocol.

The engine never computes semantic quality scores itself; it obtains them
from a binding: a constant mock, per-record precomputed values, or an
external scoring service speaking the wire protocol below.

Wire protocol (shared with any conforming scorer sidecar):
  POST /v1/semantic-score
    request:  {"model": str | null, "items": [{"src": str, "ref": str | null, "hyp": str}]}
    response: {"model": str, "scores": [float], "latency_ms": [float]}
  GET /v1/health -> {"status": "ok" | "loading", "model": str}

A transport or protocol failure is always a hard error; a score of 0 is
never silently substituted.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import ScorerBinding


class ScorerError(RuntimeError):
    pass


class ScorerUnavailableError(ScorerError):
    """Transport-level failure: endpoint down, timeout, or bad payload."""


@dataclass(frozen=True)
class ScoreItem:
    src: str
    hyp: str
    ref: str | None = None

    def to_wire(self) -> dict:
        return {"src": self.src, "ref": self.ref, "hyp": self.hyp}


class MockScorer:
    """Constant-score binding for tests and golden fixtures."""

    def __init__(self, constant: float):
        if not (0.0 <= constant <= 1.0):
            raise ScorerError(f"mock constant {constant!r} outside [0, 1]")
        self.constant = constant

    def score_batch(self, items: list[ScoreItem]) -> list[float]:
        return [self.constant] * len(items)

    def reachable(self) -> bool:
        return True

    def describe(self) -> str:
        return f"mock:{self.constant}"


class EndpointScorer:
    """HTTP client for an external scorer, with bounded in-flight batches.

    Requests are idempotent (scoring is side-effect-free), so transport
    failures are retried up to the configured count before raising.
    """

    def __init__(self, binding: ScorerBinding):
        if binding.kind != "endpoint" or not binding.url:
            raise ScorerError("endpoint scorer requires an endpoint binding with a url")
        self.url = binding.url.rstrip("/")
        self.timeout_s = binding.timeout_s
        self.max_in_flight = binding.max_in_flight
        self.batch_size = binding.batch_size
        self.retries = binding.retries

    def _post_chunk(self, items: list[ScoreItem]) -> list[float]:
        payload = {"model": None, "items": [item.to_wire() for item in items]}
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                response = httpx.post(
                    f"{self.url}/v1/semantic-score",
                    json=payload,
                    timeout=self.timeout_s,
                )
                response.raise_for_status()
                body = response.json()
                break
            except (httpx.HTTPError, ValueError) as exc:
                last_error = exc
        else:
            raise ScorerUnavailableError(
                f"scorer endpoint {self.url} unavailable: {last_error}"
            )
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(items):
            raise ScorerUnavailableError(
                f"scorer endpoint {self.url} returned {0 if not isinstance(scores, list) else len(scores)} "
                f"scores for {len(items)} items"
            )
        for score in scores:
            if (
                isinstance(score, bool)
                or not isinstance(score, (int, float))
                or not math.isfinite(score)
                or not (0.0 <= score <= 1.0)
            ):
                raise ScorerUnavailableError(
                    f"scorer endpoint {self.url} returned invalid score {score!r}"
                )
        return [float(s) for s in scores]

    def score_batch(self, items: list[ScoreItem]) -> list[float]:
        if not items:
            return []
        chunks = [
            items[i : i + self.batch_size]
            for i in range(0, len(items), self.batch_size)
        ]
        if len(chunks) == 1:
            return self._post_chunk(chunks[0])
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            results = list(pool.map(self._post_chunk, chunks))
        return [score for chunk_scores in results for score in chunk_scores]

    def reachable(self) -> bool:
        try:
            response = httpx.get(f"{self.url}/v1/health", timeout=self.timeout_s)
            response.raise_for_status()
            return response.json().get("status") == "ok"
        except (httpx.HTTPError, ValueError):
            return False

    def describe(self) -> str:
        return f"endpoint:{self.url}"


def make_scorer(binding: ScorerBinding) -> MockScorer | EndpointScorer | None:
    """Instantiate the configured binding; precomputed needs no client."""
    if binding.kind == "mock":
        assert binding.constant is not None
        return MockScorer(binding.constant)
    if binding.kind == "endpoint":
        return EndpointScorer(binding)
    return None


def mock_scorer_app(constant: float = 0.8, model_id: str | None = None) -> FastAPI:
    """FastAPI app serving constant scores over the scorer wire protocol.

    Exists so wire-level conformance of any real scorer sidecar can be
    checked against a byte-compatible reference.
    """
    model = model_id or f"mock:{constant}"
    app = FastAPI(title="mock semantic scorer")

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "model": model}

    @app.post("/v1/semantic-score")
    async def semantic_score(request: Request):
        try:
            body = await request.json()
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": f"bad JSON: {exc}"})
        items = body.get("items")
        if not isinstance(items, list):
            return JSONResponse(status_code=400, content={"detail": "items must be a list"})
        for i, item in enumerate(items):
            if not isinstance(item, dict) or "src" not in item or "hyp" not in item:
                return JSONResponse(
                    status_code=400,
                    content={"detail": f"item {i} must carry src and hyp"},
                )
        started = time.perf_counter()
        latency = (time.perf_counter() - started) * 1000.0
        return {
            "model": body.get("model") or model,
            "scores": [constant] * len(items),
            "latency_ms": [latency] * len(items),
        }

    return app
