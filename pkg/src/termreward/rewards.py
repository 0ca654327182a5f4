"""Reward components for reasoning-formatted translation outputs.

Implements the format gate over <think>/<answer> templates, the alignment
overlap rewards (answer-align-word, answer-align-order, think-align-word),
a sentence-BLEU reward option, and the gated linear combination into an
overall reward with per-component diagnostics.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Literal

from .keywords import KeyAlignmentSet
from .metrics import sentence_bleu
from .tokenizer import TokenSequence, tokenize

FormatMode = Literal["strict", "lenient"]

_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)
_STRICT_RE = re.compile(
    r"\s*<think>(.*?)</think>\s*<answer>(.*?)</answer>\s*", re.DOTALL
)


class RewardError(ValueError):
    pass


@dataclass(frozen=True)
class MatchPolicy:
    """Surface comparison policy for alignment words: exact or case-folded."""

    case_fold: bool = False

    @classmethod
    def for_target_language(cls, lang: str) -> "MatchPolicy":
        # Case variation is meaningful for German nouns and absent in Chinese;
        # fold only for English-target comparisons.
        return cls(case_fold=lang.split("-")[0].lower() == "en")

    def key(self, word: str) -> str:
        return word.casefold() if self.case_fold else word


@dataclass(frozen=True)
class ParsedOutput:
    """Raw model output split into think/answer spans plus the format verdict."""

    raw: str
    think: str
    answer: str
    format_ok: bool


def parse_output(raw: str, mode: FormatMode = "strict") -> ParsedOutput:
    """Extract think/answer spans under the template contract.

    Valid output carries exactly one <think> span followed by exactly one
    <answer> span; tags are case-sensitive; nested or repeated pairs fail.
    Strict mode allows nothing but whitespace outside the spans, lenient mode
    tolerates surrounding text. Malformed input is a valid False result.
    """
    counts = [raw.count(tag) for tag in ("<think>", "</think>", "<answer>", "</answer>")]
    if counts != [1, 1, 1, 1]:
        return ParsedOutput(raw=raw, think="", answer="", format_ok=False)

    if mode == "strict":
        m = _STRICT_RE.fullmatch(raw)
        if m is None:
            return ParsedOutput(raw=raw, think="", answer="", format_ok=False)
        return ParsedOutput(raw=raw, think=m.group(1), answer=m.group(2), format_ok=True)

    think_m = _THINK_RE.search(raw)
    answer_m = _ANSWER_RE.search(raw)
    if think_m is None or answer_m is None or answer_m.start() < think_m.end():
        return ParsedOutput(raw=raw, think="", answer="", format_ok=False)
    return ParsedOutput(
        raw=raw, think=think_m.group(1), answer=answer_m.group(1), format_ok=True
    )


def round_half_away(value: float, digits: int = 2) -> float:
    """Round with ties away from zero (not banker's rounding)."""
    quantum = Decimal(1).scaleb(-digits)
    return float(Decimal(str(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def match_links(
    aref_key: KeyAlignmentSet,
    apre_key: KeyAlignmentSet,
    policy: MatchPolicy = MatchPolicy(),
) -> list[tuple]:
    """Greedy one-to-one matching of reference key links to predicted links.

    A reference link matches a predicted link when their source indices are
    equal and their target surface forms compare equal under the policy;
    target positions are ignored. Each reference link consumes at most one
    predicted link, preferring the lowest predicted target index.
    """
    pre_links = sorted(apre_key.links, key=lambda l: (l.tgt_idx, l.src_idx))
    consumed = [False] * len(pre_links)
    matches = []
    for ref in aref_key.links:
        want = (ref.src_idx, policy.key(ref.tgt_word))
        for idx, pre in enumerate(pre_links):
            if consumed[idx]:
                continue
            if (pre.src_idx, policy.key(pre.tgt_word)) == want:
                consumed[idx] = True
                matches.append((ref, pre))
                break
    return matches


def reward_aaw(
    aref_key: KeyAlignmentSet,
    apre_key: KeyAlignmentSet,
    src_len: int,
    pred_len: int,
    policy: MatchPolicy = MatchPolicy(),
) -> float:
    """Key-alignment overlap normalized by source plus prediction length.

    The prediction length in the denominator makes the reward strictly
    decrease as the output grows with matches held fixed, so padding the
    output cannot inflate it.
    """
    if src_len < 1:
        raise RewardError("src_len must be >= 1")
    if pred_len < 0:
        raise RewardError("pred_len must be >= 0")
    if pred_len == 0 and len(apre_key) > 0:
        raise RewardError("pred_len is 0 but predicted key alignments are non-empty")
    return len(match_links(aref_key, apre_key, policy)) / (src_len + pred_len)


def target_order_words(key_set: KeyAlignmentSet, policy: MatchPolicy) -> list[str]:
    # One sequence element per distinct target position, in target order.
    by_pos: dict[int, str] = {}
    for link in key_set.links:
        by_pos.setdefault(link.tgt_idx, policy.key(link.tgt_word))
    return [by_pos[j] for j in sorted(by_pos)]


def order_pairs(words: list[str]) -> set[tuple[str, str]]:
    """All ordered word pairs (earlier, later) of a sequence, as a set."""
    return {
        (words[u], words[v])
        for u in range(len(words))
        for v in range(u + 1, len(words))
    }


def reward_aao(
    aref_key: KeyAlignmentSet,
    apre_key: KeyAlignmentSet,
    policy: MatchPolicy = MatchPolicy(),
    empty_order_value: float = 1.0,
) -> float:
    """Fraction of the reference key words' ordered pairs preserved by the
    prediction's key-word order.

    With fewer than two reference key positions there is no order constraint
    to violate and ``empty_order_value`` (default 1.0) is returned.
    """
    ref_pairs = order_pairs(target_order_words(aref_key, policy))
    if not ref_pairs:
        return empty_order_value
    pre_pairs = order_pairs(target_order_words(apre_key, policy))
    return len(ref_pairs & pre_pairs) / len(ref_pairs)


def think_token_union(think: str, src_lang: str, tgt_lang: str) -> set[str]:
    """Tokens of the think span under both the source and target segmenters."""
    tokens = set(tokenize(think, src_lang).tokens)
    tokens.update(tokenize(think, tgt_lang).tokens)
    return tokens


def think_hits(
    aref_key: KeyAlignmentSet,
    think_tokens: set[str],
    policy: MatchPolicy = MatchPolicy(),
) -> int:
    keyed = {policy.key(tok) for tok in think_tokens}
    return sum(
        1
        for link in aref_key.links
        if policy.key(link.src_word) in keyed and policy.key(link.tgt_word) in keyed
    )


def reward_taw(
    aref_key: KeyAlignmentSet,
    think: str,
    src_lang: str,
    tgt_lang: str,
    policy: MatchPolicy = MatchPolicy(),
) -> float:
    """Fraction of reference key links whose both words appear in the think
    span, with membership tested over tokenized text rather than substrings.

    Returns 0.0 when there are no reference key links.
    """
    if len(aref_key) == 0:
        return 0.0
    tokens = think_token_union(think, src_lang, tgt_lang)
    return think_hits(aref_key, tokens, policy) / len(aref_key)


def reward_bleu(answer: TokenSequence, reference: TokenSequence) -> float:
    """Sentence-level smoothed BLEU in [0, 1] as an optional reward component."""
    if len(reference) == 0:
        raise RewardError("empty reference")
    return sentence_bleu(answer, reference)


@dataclass(frozen=True)
class RewardWeights:
    """Trade-off weights for the alignment components of the overall reward."""

    alpha: float = 1.0
    beta: float = 0.1
    gamma: float = 0.1
    bleu_weight: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "bleu_weight"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise RewardError(f"weight {name} must be finite and >= 0, got {value!r}")

    def as_dict(self) -> dict[str, float]:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "bleu_weight": self.bleu_weight,
        }


@dataclass(frozen=True)
class ComponentScores:
    """Raw component values prior to combination; None means not computed."""

    comet: float | None = None
    aaw: float | None = None
    aao: float | None = None
    taw: float | None = None
    bleu: float | None = None


@dataclass(frozen=True)
class RewardBreakdown:
    r_format: int
    r_comet: float | None
    r_aaw: float | None
    r_aao: float | None
    r_taw: float | None
    r_bleu: float | None
    r_all: float
    weights: RewardWeights
    diagnostics: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "r_format": self.r_format,
            "r_comet": self.r_comet,
            "r_aaw": self.r_aaw,
            "r_aao": self.r_aao,
            "r_taw": self.r_taw,
            "r_bleu": self.r_bleu,
            "r_all": self.r_all,
            "weights": self.weights.as_dict(),
            "diagnostics": self.diagnostics,
        }


def combine(
    parsed: ParsedOutput,
    components: ComponentScores,
    weights: RewardWeights,
    diagnostics: dict | None = None,
) -> RewardBreakdown:
    """Combine component rewards into the gated overall reward.

    A format violation forces the overall reward to 0 regardless of the
    components. The semantic score is rounded to two decimals (ties away
    from zero) before weighting; absent components contribute nothing.
    """
    for name in ("comet", "aaw", "aao", "taw", "bleu"):
        value = getattr(components, name)
        if value is not None and not math.isfinite(value):
            raise RewardError(f"component {name} is not finite: {value!r}")

    r_comet = None if components.comet is None else round_half_away(components.comet)
    if not parsed.format_ok:
        r_all = 0.0
    else:
        r_all = r_comet if r_comet is not None else 0.0
        if components.aaw is not None:
            r_all += weights.alpha * components.aaw
        if components.aao is not None:
            r_all += weights.beta * components.aao
        if components.taw is not None:
            r_all += weights.gamma * components.taw
        if components.bleu is not None:
            r_all += weights.bleu_weight * components.bleu

    return RewardBreakdown(
        r_format=1 if parsed.format_ok else 0,
        r_comet=r_comet,
        r_aaw=components.aaw,
        r_aao=components.aao,
        r_taw=components.taw,
        r_bleu=components.bleu,
        r_all=r_all,
        weights=weights,
        diagnostics=diagnostics or {},
    )
