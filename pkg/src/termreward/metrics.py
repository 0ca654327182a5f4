"""Corpus evaluation metrics: BLEU and terminology accuracy.

Metrics consume already-tokenized sequences so the evaluation tokenizer is
an explicit, logged choice. Semantic metrics are never computed here; the
report helpers only average externally supplied scores.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .tokenizer import TokenSequence, tokenize


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusScore:
    """A named corpus metric value with diagnostic counts.

    ``value`` is None only for the explicit "no terms found" terminology
    result, which is distinct from any numeric score.
    """

    name: str
    value: float | None
    sentences: int
    details: dict = field(default_factory=dict, compare=False)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped_matches(hyp: Sequence[str], ref: Sequence[str], n: int) -> tuple[int, int]:
    hyp_counts = _ngram_counts(hyp, n)
    ref_counts = _ngram_counts(ref, n)
    matches = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
    total = max(len(hyp) - n + 1, 0)
    return matches, total


def _brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len == 0:
        return 0.0
    if hyp_len > ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / hyp_len)


def bleu(
    hypotheses: list[TokenSequence],
    references: list[TokenSequence],
    max_n: int = 4,
    smoothing: str = "none",
) -> CorpusScore:
    """Corpus BLEU on a 0-100 scale.

    Clipped n-gram precisions up to ``max_n`` are pooled over the corpus,
    combined by geometric mean, and multiplied by the brevity penalty
    exp(1 - r/c) when the hypothesis side is not longer. ``smoothing="add1"``
    applies add-one smoothing to the n>1 precisions (the sentence-level
    reward variant); the default is unsmoothed.
    """
    if len(hypotheses) != len(references):
        raise MetricError(
            f"length mismatch: {len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not references:
        raise MetricError("empty corpus")
    if smoothing not in ("none", "add1"):
        raise MetricError(f"unknown smoothing {smoothing!r}")
    for idx, ref in enumerate(references):
        if len(ref) == 0:
            raise MetricError(f"empty reference sentence at index {idx}")

    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            m, t = _clipped_matches(hyp.tokens, ref.tokens, n)
            matches[n - 1] += m
            totals[n - 1] += t

    # Orders with no possible n-grams anywhere in the corpus are vacuous and
    # excluded from the geometric mean, so a corpus identical to its
    # reference scores 100 even when every sentence is shorter than max_n.
    precisions: list[float | None] = []
    for n in range(1, max_n + 1):
        m, t = matches[n - 1], totals[n - 1]
        if smoothing == "add1" and n > 1:
            precisions.append((m + 1) / (t + 1))
        elif t > 0:
            precisions.append(m / t)
        else:
            precisions.append(None)

    effective = [p for p in precisions if p is not None]
    bp = _brevity_penalty(hyp_len, ref_len)
    if not effective or any(p == 0.0 for p in effective) or bp == 0.0:
        value = 0.0
    else:
        value = 100.0 * bp * math.exp(
            sum(math.log(p) for p in effective) / len(effective)
        )

    return CorpusScore(
        name="bleu",
        value=value,
        sentences=len(hypotheses),
        details={
            "precisions": precisions,
            "matches": matches,
            "totals": totals,
            "hyp_len": hyp_len,
            "ref_len": ref_len,
            "brevity_penalty": bp,
            "max_n": max_n,
            "smoothing": smoothing,
        },
    )


def sentence_bleu(hypothesis: TokenSequence, reference: TokenSequence, max_n: int = 4) -> float:
    """Sentence-level smoothed BLEU in [0, 1] (add-one on the n>1 precisions)."""
    score = bleu([hypothesis], [reference], max_n=max_n, smoothing="add1")
    assert score.value is not None
    return score.value / 100.0


@dataclass(frozen=True)
class TermEntry:
    source: tuple[str, ...]
    renderings: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if not self.source or any(t == "" for t in self.source):
            raise MetricError("term source must be a non-empty token sequence")
        if not self.renderings:
            raise MetricError(f"term {' '.join(self.source)!r} has no renderings")
        for rendering in self.renderings:
            if not rendering or any(t == "" for t in rendering):
                raise MetricError(
                    f"term {' '.join(self.source)!r} has an empty rendering"
                )


@dataclass(frozen=True)
class TermDictionary:
    entries: tuple[TermEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)


def load_term_dictionary(path: str, src_lang: str, tgt_lang: str) -> TermDictionary:
    """Load a TSV term dictionary: ``src_term<TAB>rendering[|alt_rendering...]``.

    Terms and renderings are tokenized with the built-in tokenizer for the
    given languages so matching granularity is pinned to the pipeline's.
    """
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise MetricError(f"{path}:{lineno}: expected 2 tab-separated fields")
            source = tokenize(parts[0], src_lang).tokens
            renderings = tuple(
                tokenize(alt, tgt_lang).tokens
                for alt in parts[1].split("|")
                if alt.strip()
            )
            entries.append(TermEntry(source=source, renderings=renderings))
    if not entries:
        raise MetricError(f"term dictionary {path} has zero entries")
    return TermDictionary(entries=tuple(entries))


def _fold(tokens: Iterable[str], case_fold: bool) -> tuple[str, ...]:
    return tuple(t.casefold() for t in tokens) if case_fold else tuple(tokens)


def _subsequence_starts(haystack: tuple[str, ...], needle: tuple[str, ...]) -> int:
    if not needle or len(needle) > len(haystack):
        return 0
    return sum(
        1
        for i in range(len(haystack) - len(needle) + 1)
        if haystack[i : i + len(needle)] == needle
    )


def terminology_accuracy(
    records: list[tuple[TokenSequence, TokenSequence]],
    term_dict: TermDictionary,
    case_fold: bool = False,
) -> CorpusScore:
    """Fraction of source-term occurrences whose sanctioned rendering appears
    in the hypothesis.

    Every contiguous occurrence of a dictionary source term in a record's
    source counts toward the denominator; it counts toward the numerator iff
    any allowed rendering occurs contiguously in that record's hypothesis.
    When no term occurs anywhere, the result is an explicit "no terms found"
    value (None), not a score.
    """
    if len(term_dict) == 0:
        raise MetricError("term dictionary is empty")

    hits = 0
    total = 0
    hit_types = 0
    total_types = 0
    for src, hyp in records:
        src_toks = _fold(src.tokens, case_fold)
        hyp_toks = _fold(hyp.tokens, case_fold)
        for entry in term_dict.entries:
            occurrences = _subsequence_starts(src_toks, _fold(entry.source, case_fold))
            if occurrences == 0:
                continue
            total += occurrences
            total_types += 1
            rendered = any(
                _subsequence_starts(hyp_toks, _fold(r, case_fold)) > 0
                for r in entry.renderings
            )
            if rendered:
                hits += occurrences
                hit_types += 1

    details = {
        "term_hits": hits,
        "term_total": total,
        "type_hits": hit_types,
        "type_total": total_types,
        "case_fold": case_fold,
    }
    if total == 0:
        details["no_terms_found"] = True
        return CorpusScore(name="ta", value=None, sentences=len(records), details=details)
    return CorpusScore(
        name="ta", value=hits / total, sentences=len(records), details=details
    )


def mean_external_scores(scores: list[float], name: str, sentences: int) -> CorpusScore:
    """Average externally supplied per-sentence scores without recomputing them."""
    if not scores:
        raise MetricError(f"no {name} scores supplied")
    return CorpusScore(
        name=name,
        value=math.fsum(scores) / len(scores),
        sentences=sentences,
        details={"count": len(scores)},
    )


def format_report(scores: list[CorpusScore]) -> str:
    """Aligned plain-text table of corpus scores."""
    rows = [("metric", "value", "sentences")]
    for score in scores:
        if score.value is None:
            rendered = "no-terms-found"
        else:
            rendered = f"{score.value:.4f}"
        rows.append((score.name, rendered, str(score.sentences)))
    widths = [max(len(row[col]) for row in rows) for col in range(3)]
    lines = [
        "  ".join(cell.ljust(widths[col]) for col, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    return "\n".join(lines)


def report_json(scores: list[CorpusScore]) -> dict:
    return {
        "metrics": [
            {
                "name": score.name,
                "value": score.value,
                "sentences": score.sentences,
                "details": score.details,
            }
            for score in scores
        ]
    }
