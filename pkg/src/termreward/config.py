"""Versioned, declarative reward configuration.

A config file pins everything a scoring run depends on: the reward recipe,
component weights, match policy, alignment source, semantic-scorer binding,
and the language pair. Its canonical hash is echoed into every output
summary so rewards stay attributable to an exact configuration.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .rewards import MatchPolicy, RewardWeights

CONFIG_VERSION = 1
CONFIG_PATH_ENV = "TERMREWARD_CONFIG"

# Component sets of the supported reward recipes, from plain semantic scoring
# up to the full alignment-aware combination.
RECIPES: dict[str, frozenset[str]] = {
    "comet": frozenset({"comet"}),
    "comet+bleu": frozenset({"comet", "bleu"}),
    "comet+aaw": frozenset({"comet", "aaw"}),
    "comet+aaw+aao": frozenset({"comet", "aaw", "aao"}),
    "all": frozenset({"comet", "aaw", "aao", "taw"}),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AlignmentSource:
    """Where alignments come from: a trained table, per-record Pharaoh
    fields, or Pharaoh sidecar files merged in at batch ingestion."""

    kind: str  # "table" | "record" | "pharaoh"
    table_path: str | None = None
    mode: str = "grow-diag"
    ref_path: str | None = None
    pre_path: str | None = None


@dataclass(frozen=True)
class ScorerBinding:
    """Semantic-scorer binding: external endpoint, per-record precomputed
    scores, or a constant mock."""

    kind: str  # "endpoint" | "precomputed" | "mock"
    constant: float | None = None
    url: str | None = None
    timeout_s: float = 10.0
    max_in_flight: int = 4
    batch_size: int = 32
    retries: int = 1


@dataclass(frozen=True)
class RewardConfig:
    version: int
    recipe: str
    weights: RewardWeights
    match_policy: str  # "auto" | "exact" | "fold"
    format_mode: str  # "strict" | "lenient"
    lang_src: str
    lang_tgt: str
    alignment: AlignmentSource
    scorer: ScorerBinding
    lexicon_path: str | None = None
    lexicon_case_fold: bool = False
    parallelism: int = 1
    aao_empty_value: float = 1.0
    config_sha256: str = ""
    base_dir: Path = field(default_factory=Path.cwd, compare=False)

    @property
    def components(self) -> frozenset[str]:
        return RECIPES[self.recipe]

    def policy(self) -> MatchPolicy:
        if self.match_policy == "exact":
            return MatchPolicy(case_fold=False)
        if self.match_policy == "fold":
            return MatchPolicy(case_fold=True)
        return MatchPolicy.for_target_language(self.lang_tgt)

    def resolve_path(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _require(mapping: dict, key: str, kind, where: str):
    if key not in mapping:
        raise ConfigError(f"config: missing field {where}{key}")
    value = mapping[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"config: {where}{key} must be a number")
        return float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"config: {where}{key} must be {kind.__name__}")
    return value


def _weights_from(raw: dict) -> RewardWeights:
    allowed = {"alpha", "beta", "gamma", "bleu_weight"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"config: unknown weight keys {sorted(unknown)}")
    defaults = RewardWeights()
    values = {}
    for name in allowed:
        value = raw.get(name, getattr(defaults, name))
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"config: weights.{name} must be a number")
        if not math.isfinite(float(value)) or float(value) < 0:
            raise ConfigError(f"config: weights.{name} must be finite and >= 0")
        values[name] = float(value)
    return RewardWeights(**values)


def _alignment_from(raw: dict) -> AlignmentSource:
    kind = _require(raw, "source", str, "alignment.")
    if kind == "table":
        path = _require(raw, "path", str, "alignment.")
        mode = raw.get("mode", "grow-diag")
        if mode not in ("argmax", "grow-diag"):
            raise ConfigError(f"config: alignment.mode must be argmax or grow-diag")
        return AlignmentSource(kind="table", table_path=path, mode=mode)
    if kind == "record":
        return AlignmentSource(kind="record")
    if kind == "pharaoh":
        return AlignmentSource(
            kind="pharaoh",
            ref_path=_require(raw, "ref_path", str, "alignment."),
            pre_path=_require(raw, "pre_path", str, "alignment."),
        )
    raise ConfigError(
        f"config: alignment.source {kind!r} not one of table, record, pharaoh"
    )


def _scorer_from(raw: dict) -> ScorerBinding:
    binding = _require(raw, "binding", str, "scorer.")
    if binding == "precomputed":
        return ScorerBinding(kind="precomputed")
    if binding.startswith("mock:"):
        try:
            constant = float(binding.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"config: bad mock constant in {binding!r}") from exc
        if not (0.0 <= constant <= 1.0):
            raise ConfigError("config: mock constant must be in [0, 1]")
        return ScorerBinding(kind="mock", constant=constant)
    if binding == "endpoint":
        url = _require(raw, "url", str, "scorer.")
        binding_kwargs = {}
        for name, default, minimum in (
            ("timeout_s", 10.0, 0.001),
            ("max_in_flight", 4, 1),
            ("batch_size", 32, 1),
            ("retries", 1, 0),
        ):
            value = raw.get(name, default)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"config: scorer.{name} must be a number")
            if value < minimum:
                raise ConfigError(f"config: scorer.{name} must be >= {minimum}")
            binding_kwargs[name] = type(default)(value)
        return ScorerBinding(kind="endpoint", url=url, **binding_kwargs)
    raise ConfigError(
        f"config: scorer.binding {binding!r} not one of endpoint, precomputed, mock:<constant>"
    )


def config_from_dict(raw: dict, base_dir: Path | None = None) -> RewardConfig:
    """Build and validate a RewardConfig from parsed JSON."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    version = _require(raw, "version", int, "")
    if version != CONFIG_VERSION:
        raise ConfigError(f"config: unsupported version {version}")
    recipe = _require(raw, "recipe", str, "")
    if recipe not in RECIPES:
        raise ConfigError(
            f"config: unknown recipe {recipe!r}; valid recipes: {', '.join(sorted(RECIPES))}"
        )
    weights = _weights_from(raw.get("weights", {}))
    match_policy = raw.get("match_policy", "auto")
    if match_policy not in ("auto", "exact", "fold"):
        raise ConfigError("config: match_policy must be auto, exact, or fold")
    format_mode = raw.get("format_mode", "strict")
    if format_mode not in ("strict", "lenient"):
        raise ConfigError("config: format_mode must be strict or lenient")
    lang_src = _require(raw, "lang_src", str, "")
    lang_tgt = _require(raw, "lang_tgt", str, "")
    alignment = _alignment_from(_require(raw, "alignment", dict, ""))
    scorer = _scorer_from(_require(raw, "scorer", dict, ""))

    lexicon_path = None
    lexicon_case_fold = False
    if "lexicon" in raw:
        lex = _require(raw, "lexicon", dict, "")
        lexicon_path = _require(lex, "path", str, "lexicon.")
        lexicon_case_fold = bool(lex.get("case_fold", False))

    parallelism = raw.get("parallelism", 1)
    if not isinstance(parallelism, int) or parallelism < 1:
        raise ConfigError("config: parallelism must be an integer >= 1")
    aao_empty_value = raw.get("aao_empty_value", 1.0)
    if not isinstance(aao_empty_value, (int, float)) or isinstance(aao_empty_value, bool):
        raise ConfigError("config: aao_empty_value must be a number")

    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    sha = hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    return RewardConfig(
        version=version,
        recipe=recipe,
        weights=weights,
        match_policy=match_policy,
        format_mode=format_mode,
        lang_src=lang_src,
        lang_tgt=lang_tgt,
        alignment=alignment,
        scorer=scorer,
        lexicon_path=lexicon_path,
        lexicon_case_fold=lexicon_case_fold,
        parallelism=parallelism,
        aao_empty_value=float(aao_empty_value),
        config_sha256=sha,
        base_dir=base_dir if base_dir is not None else Path.cwd(),
    )


def load_config(path: str | Path) -> RewardConfig:
    """Load and validate a config file; relative resource paths resolve
    against the config file's directory."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {p}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {p} is not valid JSON: {exc}") from exc
    return config_from_dict(raw, base_dir=p.resolve().parent)


def resolve_config_path(cli_value: str | None) -> str:
    """CLI --config wins; otherwise the environment override applies."""
    if cli_value:
        return cli_value
    env = os.environ.get(CONFIG_PATH_ENV)
    if env:
        return env
    raise ConfigError(
        f"config: no config path given and {CONFIG_PATH_ENV} is not set"
    )
