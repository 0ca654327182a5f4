"""Reward service: score endpoint for RL rollout loops plus health reporting.

The service shares the batch pipeline with the CLI, so identical records
under an identical config produce identical breakdowns on either surface.
Shared state (table, lexicon, config) is immutable once loaded.
"""

from __future__ import annotations

import dataclasses
import json

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import ConfigError, RewardConfig, config_from_dict
from .pipeline import Resources, load_resources, score_batch
from .scorer import ScorerUnavailableError

# Request-safe override keys: nothing that would trigger resource I/O.
OVERRIDE_KEYS = frozenset(
    {"recipe", "weights", "match_policy", "format_mode", "lang_src", "lang_tgt",
     "aao_empty_value"}
)


class ServiceState:
    def __init__(self, config: RewardConfig):
        if config.alignment.kind == "pharaoh":
            raise ConfigError(
                "config: pharaoh sidecar alignment is positional and only valid "
                "for the batch CLI; use 'table' or 'record' for the service"
            )
        self.config = config
        self.resources: Resources | None = None

    @property
    def loaded(self) -> bool:
        return self.resources is not None

    def load(self) -> None:
        if self.resources is None:
            self.resources = load_resources(self.config)

    def health(self) -> dict:
        scorer_info: dict = {"binding": self.config.scorer.kind}
        if self.loaded and self.resources.scorer is not None:
            scorer_info["reachable"] = self.resources.scorer.reachable()
        needs_table = self.config.alignment.kind == "table"
        return {
            "status": "ok" if self.loaded else "loading",
            "table": (
                ("loaded" if self.loaded else "loading") if needs_table else "absent"
            ),
            "lexicon": (
                ("loaded" if self.loaded else "loading")
                if self.config.lexicon_path
                else "absent"
            ),
            "scorer": scorer_info,
            "recipe": self.config.recipe,
            "config_sha256": self.config.config_sha256,
        }


def _apply_overrides(config: RewardConfig, overrides: dict) -> RewardConfig:
    unknown = set(overrides) - OVERRIDE_KEYS
    if unknown:
        raise ConfigError(
            f"config: overrides not allowed for {sorted(unknown)}; "
            f"allowed: {sorted(OVERRIDE_KEYS)}"
        )
    raw = _config_raw(config)
    for key, value in overrides.items():
        raw[key] = value
    merged = config_from_dict(raw, base_dir=config.base_dir)
    # The hash must keep identifying the served base config.
    return dataclasses.replace(merged, config_sha256=config.config_sha256)


def _config_raw(config: RewardConfig) -> dict:
    raw: dict = {
        "version": config.version,
        "recipe": config.recipe,
        "weights": config.weights.as_dict(),
        "match_policy": config.match_policy,
        "format_mode": config.format_mode,
        "lang_src": config.lang_src,
        "lang_tgt": config.lang_tgt,
        "parallelism": config.parallelism,
        "aao_empty_value": config.aao_empty_value,
    }
    if config.alignment.kind == "table":
        raw["alignment"] = {
            "source": "table",
            "path": config.alignment.table_path,
            "mode": config.alignment.mode,
        }
    else:
        raw["alignment"] = {"source": config.alignment.kind}
    scorer = config.scorer
    if scorer.kind == "mock":
        raw["scorer"] = {"binding": f"mock:{scorer.constant}"}
    elif scorer.kind == "precomputed":
        raw["scorer"] = {"binding": "precomputed"}
    else:
        raw["scorer"] = {
            "binding": "endpoint",
            "url": scorer.url,
            "timeout_s": scorer.timeout_s,
            "max_in_flight": scorer.max_in_flight,
            "batch_size": scorer.batch_size,
            "retries": scorer.retries,
        }
    if config.lexicon_path:
        raw["lexicon"] = {
            "path": config.lexicon_path,
            "case_fold": config.lexicon_case_fold,
        }
    return raw


def create_app(config: RewardConfig) -> FastAPI:
    """Build the service app; call ``app.state.service.load()`` before serving."""
    app = FastAPI(title="termreward service")
    state = ServiceState(config)
    app.state.service = state

    @app.get("/v1/health")
    def health() -> dict:
        return state.health()

    @app.post("/v1/score")
    async def score(request: Request):
        body_bytes = await request.body()
        try:
            body = json.loads(body_bytes)
        except json.JSONDecodeError as exc:
            return JSONResponse(
                status_code=400,
                content={
                    "detail": f"malformed JSON body: {exc.msg}",
                    "position": exc.pos,
                    "line": exc.lineno,
                    "column": exc.colno,
                },
            )
        if not isinstance(body, dict) or not isinstance(body.get("records"), list):
            return JSONResponse(
                status_code=400,
                content={"detail": "body must be an object with a 'records' list"},
            )
        if not state.loaded:
            return JSONResponse(
                status_code=503, content={"detail": "service still loading"}
            )

        effective = state.config
        overrides = body.get("overrides")
        if overrides is not None:
            if not isinstance(overrides, dict):
                return JSONResponse(
                    status_code=400, content={"detail": "overrides must be an object"}
                )
            try:
                effective = _apply_overrides(state.config, overrides)
            except ConfigError as exc:
                return JSONResponse(status_code=400, content={"detail": str(exc)})

        try:
            batch = score_batch(body["records"], effective, state.resources)
        except ScorerUnavailableError as exc:
            return JSONResponse(status_code=503, content={"detail": str(exc)})

        items = [
            {"index": i, "latency_ms": batch.latencies_ms[i], **result}
            for i, result in enumerate(batch.results)
        ]
        return {"items": items, "summary": batch.summary}

    return app
