"""End-to-end record scoring: parse, tokenize, align, filter, reward, combine.

Both the batch CLI and the reward service call ``score_batch`` so a record
scores identically regardless of the surface it arrived through. Per-record
failures (bad fields, format violations) are valid results; only transport
and configuration problems escape as exceptions.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import fmean

from .align import (
    AlignmentSet,
    PharaohParseError,
    TranslationTable,
    align,
    load_table,
    parse_pharaoh,
)
from .config import ConfigError, RewardConfig
from .keywords import KeyAlignmentSet, KeywordLexicon, filter_key, load_lexicon
from .rewards import (
    ComponentScores,
    ParsedOutput,
    RewardBreakdown,
    RewardError,
    combine,
    match_links,
    order_pairs,
    parse_output,
    reward_aao,
    reward_aaw,
    reward_bleu,
    reward_taw,
    think_hits,
    think_token_union,
    target_order_words,
)
from .scorer import ScoreItem
from .tokenizer import TokenSequence, from_pretokenized, tokenize


class RecordError(ValueError):
    """A single record could not be scored; the batch continues."""


@dataclass
class Resources:
    """Immutable shared state resolved from a config: table, lexicon, scorer."""

    table: TranslationTable | None = None
    lexicon: KeywordLexicon | None = None
    scorer: object | None = None
    pharaoh_ref: list[str] | None = None
    pharaoh_pre: list[str] | None = None


def load_resources(config: RewardConfig) -> Resources:
    """Load the table, lexicon, sidecars, and scorer the config names."""
    from .scorer import make_scorer

    table = None
    if config.alignment.kind == "table":
        table = load_table(str(config.resolve_path(config.alignment.table_path)))
    lexicon = None
    if config.lexicon_path is not None:
        lexicon = load_lexicon(
            str(config.resolve_path(config.lexicon_path)),
            case_fold=config.lexicon_case_fold,
        )
    pharaoh_ref = pharaoh_pre = None
    if config.alignment.kind == "pharaoh":
        pharaoh_ref = (
            config.resolve_path(config.alignment.ref_path)
            .read_text(encoding="utf-8")
            .splitlines()
        )
        pharaoh_pre = (
            config.resolve_path(config.alignment.pre_path)
            .read_text(encoding="utf-8")
            .splitlines()
        )
    return Resources(
        table=table,
        lexicon=lexicon,
        scorer=make_scorer(config.scorer),
        pharaoh_ref=pharaoh_ref,
        pharaoh_pre=pharaoh_pre,
    )


@dataclass
class BatchResult:
    results: list[dict]
    summary: dict
    latencies_ms: list[float] = field(default_factory=list)


def _field(record: dict, name: str, required: bool = True) -> str | None:
    if name not in record:
        if required:
            raise RecordError(f"missing required field {name!r}")
        return None
    value = record[name]
    if not isinstance(value, str):
        raise RecordError(f"field {name!r} must be a string")
    return value


def _sequence(record: dict, text_field: str, tokens_field: str, lang: str) -> TokenSequence:
    if tokens_field in record:
        tokens = record[tokens_field]
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise RecordError(f"field {tokens_field!r} must be a list of strings")
        try:
            return from_pretokenized(tokens, lang)
        except ValueError as exc:
            raise RecordError(f"field {tokens_field!r}: {exc}") from exc
    text = _field(record, text_field)
    return tokenize(text, lang)


def _record_lexicon(record: dict, config: RewardConfig, resources: Resources) -> KeywordLexicon:
    if "key_src_tokens" in record:
        tokens = record["key_src_tokens"]
        if not isinstance(tokens, list) or not all(
            isinstance(t, str) and t != "" for t in tokens
        ):
            raise RecordError("field 'key_src_tokens' must be a list of non-empty strings")
        return KeywordLexicon.from_tokens(
            tokens, source="record", case_fold=config.lexicon_case_fold
        )
    if resources.lexicon is None:
        raise RecordError(
            "no keyword source: configure a lexicon or provide key_src_tokens"
        )
    return resources.lexicon


def _alignments(
    record: dict,
    config: RewardConfig,
    resources: Resources,
    src: TokenSequence,
    ref: TokenSequence,
    pred: TokenSequence,
    need_pre: bool,
) -> tuple[AlignmentSet, AlignmentSet | None]:
    kind = config.alignment.kind
    if kind == "table":
        assert resources.table is not None
        aref = align(resources.table, src, ref, mode=config.alignment.mode)
        apre = None
        if need_pre:
            if len(pred) == 0:
                apre = AlignmentSet.from_links([], len(src), 0)
            else:
                apre = align(resources.table, src, pred, mode=config.alignment.mode)
        return aref, apre
    # record / pharaoh sources carry explicit Pharaoh strings per record
    ref_line = _field(record, "align_ref")
    try:
        aref = parse_pharaoh(ref_line, src, ref)
    except PharaohParseError as exc:
        raise RecordError(f"align_ref: {exc}") from exc
    apre = None
    if need_pre:
        pre_line = _field(record, "align_pre")
        try:
            apre = parse_pharaoh(pre_line, src, pred)
        except PharaohParseError as exc:
            raise RecordError(f"align_pre: {exc}") from exc
    return aref, apre


def _gated_breakdown(parsed: ParsedOutput, config: RewardConfig) -> RewardBreakdown:
    return combine(
        parsed,
        ComponentScores(),
        config.weights,
        diagnostics={"gated": True},
    )


def _score_parsed(
    record: dict,
    parsed: ParsedOutput,
    comet: float | None,
    config: RewardConfig,
    resources: Resources,
) -> RewardBreakdown:
    """Compute the non-semantic components and combine. Assumes format_ok."""
    components = config.components
    policy = config.policy()
    lang_src = record.get("lang_src", config.lang_src)
    lang_tgt = record.get("lang_tgt", config.lang_tgt)

    src = _sequence(record, "src", "src_tokens", lang_src)
    ref = _sequence(record, "ref", "ref_tokens", lang_tgt)
    pred = tokenize(parsed.answer, lang_tgt)
    if len(src) == 0:
        raise RecordError("source tokenizes to an empty sequence")
    if len(ref) == 0:
        raise RecordError("reference tokenizes to an empty sequence")

    need_ref_align = bool(components & {"aaw", "aao", "taw"})
    need_pre_align = bool(components & {"aaw", "aao"})

    aaw = aao = taw = bleu_score = None
    diagnostics: dict = {
        "src_len": len(src),
        "ref_len": len(ref),
        "pred_len": len(pred),
    }

    if need_ref_align:
        aref, apre = _alignments(
            record, config, resources, src, ref, pred, need_pre_align
        )
        lexicon = _record_lexicon(record, config, resources)
        aref_key = filter_key(aref, lexicon)
        diagnostics["ref_links"] = len(aref)
        diagnostics["ref_key_links"] = len(aref_key)
        if config.alignment.kind == "table":
            diagnostics["oov"] = aref.oov + (apre.oov if apre is not None else 0)

        apre_key: KeyAlignmentSet | None = None
        if need_pre_align:
            assert apre is not None
            apre_key = filter_key(apre, lexicon)
            diagnostics["pre_links"] = len(apre)
            diagnostics["pre_key_links"] = len(apre_key)

        if "aaw" in components:
            assert apre_key is not None
            aaw = reward_aaw(aref_key, apre_key, len(src), len(pred), policy)
            diagnostics["matched_links"] = len(match_links(aref_key, apre_key, policy))
        if "aao" in components:
            assert apre_key is not None
            ref_pairs = order_pairs(target_order_words(aref_key, policy))
            pre_pairs = order_pairs(target_order_words(apre_key, policy))
            diagnostics["ref_order_pairs"] = len(ref_pairs)
            diagnostics["pre_order_pairs"] = len(pre_pairs)
            diagnostics["order_pair_matches"] = len(ref_pairs & pre_pairs)
            aao = reward_aao(
                aref_key, apre_key, policy, empty_order_value=config.aao_empty_value
            )
        if "taw" in components:
            tokens = think_token_union(parsed.think, lang_src, lang_tgt)
            diagnostics["think_hits"] = think_hits(aref_key, tokens, policy)
            diagnostics["think_membership"] = "token"
            taw = reward_taw(aref_key, parsed.think, lang_src, lang_tgt, policy)

    if "bleu" in components:
        try:
            bleu_score = reward_bleu(pred, ref)
        except RewardError as exc:
            raise RecordError(str(exc)) from exc

    return combine(
        parsed,
        ComponentScores(comet=comet, aaw=aaw, aao=aao, taw=taw, bleu=bleu_score),
        config.weights,
        diagnostics=diagnostics,
    )


def merge_pharaoh_sidecars(records: list[dict], resources: Resources) -> None:
    """Inject sidecar alignment lines into records positionally (in place)."""
    assert resources.pharaoh_ref is not None and resources.pharaoh_pre is not None
    for name, lines in (("ref", resources.pharaoh_ref), ("pre", resources.pharaoh_pre)):
        if len(lines) < len(records):
            raise ConfigError(
                f"pharaoh {name} sidecar has {len(lines)} lines for {len(records)} records"
            )
    for i, record in enumerate(records):
        if isinstance(record, dict):
            record.setdefault("align_ref", resources.pharaoh_ref[i])
            record.setdefault("align_pre", resources.pharaoh_pre[i])


def score_batch(
    records: list[dict],
    config: RewardConfig,
    resources: Resources,
) -> BatchResult:
    """Score a batch of records, preserving input order.

    Each result is either a reward breakdown dict or ``{"error": ...}``.
    Semantic scores are fetched in one batched scorer call; format-violating
    records short-circuit to an all-zero breakdown without touching the
    aligner or the scorer.
    """
    if config.alignment.kind == "pharaoh":
        merge_pharaoh_sidecars(records, resources)

    parsed_list: list[ParsedOutput | None] = []
    errors: dict[int, str] = {}
    for i, record in enumerate(records):
        if not isinstance(record, dict):
            errors[i] = "record must be a JSON object"
            parsed_list.append(None)
            continue
        if "_invalid" in record:
            # Ingestion marks unparseable lines so they stay positional.
            errors[i] = str(record["_invalid"])
            parsed_list.append(None)
            continue
        try:
            raw = _field(record, "output")
            parsed_list.append(parse_output(raw, mode=config.format_mode))
        except RecordError as exc:
            errors[i] = str(exc)
            parsed_list.append(None)

    # One batched semantic-score fetch for every format-valid record.
    comet_values: dict[int, float] = {}
    need_comet = [
        i
        for i, parsed in enumerate(parsed_list)
        if parsed is not None and parsed.format_ok and i not in errors
    ]
    if need_comet and "comet" in config.components:
        if config.scorer.kind == "precomputed":
            for i in need_comet:
                value = records[i].get("comet")
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    errors[i] = "missing or non-numeric 'comet' field for precomputed binding"
                else:
                    comet_values[i] = float(value)
        else:
            assert resources.scorer is not None
            items = []
            for i in need_comet:
                record = records[i]
                parsed = parsed_list[i]
                assert parsed is not None
                items.append(
                    ScoreItem(
                        src=record.get("src", ""),
                        ref=record.get("ref"),
                        hyp=parsed.answer,
                    )
                )
            scores = resources.scorer.score_batch(items)
            for i, score in zip(need_comet, scores):
                comet_values[i] = score

    def compute(i: int) -> tuple[dict, float]:
        started = time.perf_counter()
        if i in errors:
            return {"error": errors[i]}, 0.0
        parsed = parsed_list[i]
        assert parsed is not None
        try:
            if not parsed.format_ok:
                breakdown = _gated_breakdown(parsed, config)
            else:
                breakdown = _score_parsed(
                    records[i], parsed, comet_values.get(i), config, resources
                )
        except ValueError as exc:  # RecordError and all reward/alignment errors
            return {"error": str(exc)}, (time.perf_counter() - started) * 1000.0
        elapsed = (time.perf_counter() - started) * 1000.0
        return breakdown.to_dict(), elapsed

    indices = range(len(records))
    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            computed = list(pool.map(compute, indices))
    else:
        computed = [compute(i) for i in indices]

    results = [result for result, _ in computed]
    latencies = [latency for _, latency in computed]
    summary = _summarize(results, config)
    return BatchResult(results=results, summary=summary, latencies_ms=latencies)


def _summarize(results: list[dict], config: RewardConfig) -> dict:
    scored = [r for r in results if "error" not in r]
    error_count = len(results) - len(scored)
    failures = sum(1 for r in scored if r["r_format"] == 0)
    component_means = {}
    for name in ("r_comet", "r_aaw", "r_aao", "r_taw", "r_bleu"):
        values = [r[name] for r in scored if r.get(name) is not None]
        if values:
            component_means[name] = fmean(values)
    summary = {
        "records": len(results),
        "errors": error_count,
        "scored": len(scored),
        "format_failure_rate": (failures / len(scored)) if scored else 0.0,
        "mean_r_all": fmean([r["r_all"] for r in scored]) if scored else None,
        "mean_components": component_means,
        "recipe": config.recipe,
        "config_sha256": config.config_sha256,
    }
    return summary


def score_record(record: dict, config: RewardConfig, resources: Resources) -> dict:
    """Score one record; returns a breakdown dict or an error entry."""
    return score_batch([record], config, resources).results[0]
