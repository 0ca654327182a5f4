"""Semantic MT-quality scoring sidecar.

Loads a pretrained lexical quality model and serves scores over the reward
engine's scorer wire protocol (POST /v1/semantic-score, GET /v1/health).
"""

from .model import (
    DEFAULT_MODEL_ID,
    ConstantModel,
    LexicalQualityModel,
    ModelError,
    extract_features,
    load_model,
    load_pretrained,
)
from .server import create_app

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODEL_ID",
    "ConstantModel",
    "LexicalQualityModel",
    "ModelError",
    "create_app",
    "extract_features",
    "load_model",
    "load_pretrained",
]
