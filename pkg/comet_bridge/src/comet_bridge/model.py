"""Quality models served by the bridge.

The default model is a small pretrained logistic regressor over surface
similarity features between the hypothesis and its anchor (the reference
when present, the source otherwise). Its weights ship with the package and
were fitted offline by scripts/train_model.py. A ``constant:<v>`` model is
also available for protocol-level testing against constant-score bindings.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from importlib import resources

DEFAULT_MODEL_ID = "lexsim-tiny-1"
WEIGHTS_VERSION = 1

FEATURE_NAMES = ("char_trigram_cosine", "token_f1", "length_ratio", "char_cosine")


class ModelError(ValueError):
    pass


def _tokens(text: str) -> list[str]:
    return text.casefold().split()


def _char_ngrams(text: str, n: int) -> Counter:
    # Boundary padding helps n >= 2 mark word edges; unigrams use the raw
    # text so an empty string has a genuinely empty profile.
    folded = text.casefold()
    padded = f" {folded} " if n > 1 else folded
    if len(padded) < n:
        return Counter()
    return Counter(padded[i : i + n] for i in range(len(padded) - n + 1))


def _cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    dot = sum(count * b[gram] for gram, count in a.items())
    norm = math.sqrt(sum(c * c for c in a.values())) * math.sqrt(
        sum(c * c for c in b.values())
    )
    return dot / norm if norm else 0.0


def _token_f1(hyp: list[str], anchor: list[str]) -> float:
    if not hyp or not anchor:
        return 0.0
    hyp_counts, anchor_counts = Counter(hyp), Counter(anchor)
    overlap = sum(min(c, anchor_counts[t]) for t, c in hyp_counts.items())
    if overlap == 0:
        return 0.0
    precision = overlap / len(hyp)
    recall = overlap / len(anchor)
    return 2 * precision * recall / (precision + recall)


def _length_ratio(hyp: str, anchor: str) -> float:
    if not hyp or not anchor:
        return 0.0
    short, long = sorted((len(hyp), len(anchor)))
    return short / long


def extract_features(src: str, ref: str | None, hyp: str) -> list[float]:
    """Similarity features of the hypothesis against its anchor text."""
    anchor = ref if ref else src
    return [
        _cosine(_char_ngrams(hyp, 3), _char_ngrams(anchor, 3)),
        _token_f1(_tokens(hyp), _tokens(anchor)),
        _length_ratio(hyp, anchor),
        _cosine(_char_ngrams(hyp, 1), _char_ngrams(anchor, 1)),
    ]


@dataclass(frozen=True)
class LexicalQualityModel:
    """Logistic regressor over surface-similarity features."""

    model_id: str
    bias: float
    weights: tuple[float, ...]

    def score_one(self, src: str, ref: str | None, hyp: str) -> float:
        features = extract_features(src, ref, hyp)
        z = self.bias + sum(w * f for w, f in zip(self.weights, features))
        return 1.0 / (1.0 + math.exp(-z))

    def score_batch(self, items: list[dict]) -> list[float]:
        return [
            self.score_one(item["src"], item.get("ref"), item["hyp"])
            for item in items
        ]


@dataclass(frozen=True)
class ConstantModel:
    """Degenerate model returning one fixed score; protocol testing only."""

    model_id: str
    constant: float

    def score_batch(self, items: list[dict]) -> list[float]:
        return [self.constant] * len(items)


def load_pretrained(path: str | None = None) -> LexicalQualityModel:
    """Load the shipped (or an explicit) weights file."""
    if path is None:
        payload = json.loads(
            resources.files("comet_bridge").joinpath("data/weights.json").read_text("utf-8")
        )
    else:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    if payload.get("version") != WEIGHTS_VERSION:
        raise ModelError(f"unsupported weights version {payload.get('version')!r}")
    weights = payload["weights"]
    if list(payload.get("features", [])) != list(FEATURE_NAMES):
        raise ModelError("weights file features do not match this model")
    if len(weights) != len(FEATURE_NAMES):
        raise ModelError(f"expected {len(FEATURE_NAMES)} weights, got {len(weights)}")
    return LexicalQualityModel(
        model_id=payload.get("model_id", DEFAULT_MODEL_ID),
        bias=float(payload["bias"]),
        weights=tuple(float(w) for w in weights),
    )


def load_model(spec: str | None, weights_path: str | None = None):
    """Resolve a model spec: None/default id -> pretrained, constant:<v> -> constant."""
    if spec is None or spec == DEFAULT_MODEL_ID:
        return load_pretrained(weights_path)
    if spec.startswith("constant:"):
        try:
            value = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ModelError(f"bad constant model spec {spec!r}") from exc
        if not (0.0 <= value <= 1.0):
            raise ModelError("constant model value must be in [0, 1]")
        return ConstantModel(model_id=spec, constant=value)
    raise ModelError(f"unknown model {spec!r}")
