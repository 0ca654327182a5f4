"""Deterministic tokenization into TokenSequence values.

Whitespace languages are split on whitespace with leading/trailing
punctuation detached as separate tokens. Languages without whitespace and
without a registered segmenter hook fall back to per-codepoint segmentation
(contiguous Latin alphanumeric runs stay single tokens). External segmenter
output can be ingested verbatim via ``from_pretokenized``.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

Segmenter = Callable[[str], list[str]]

# Primary subtags of languages the built-in tokenizer treats as
# whitespace-segmented even when a single chunk carries no spaces.
SPACE_DELIMITED_LANGS = frozenset(
    {
        "en", "de", "fr", "es", "it", "pt", "nl", "sv", "da", "no", "fi",
        "pl", "cs", "sk", "ru", "uk", "tr", "ro", "hu", "el", "bg", "id",
        "vi",
    }
)

FALLBACK_WARNING = "fallback-codepoint-segmentation"

_segmenters: dict[str, Segmenter] = {}


@dataclass(frozen=True)
class TokenSequence:
    """An ordered list of surface tokens with its language tag.

    Invariants: no token is the empty string; for sequences produced by
    ``tokenize`` (pretokenized=False), joining tokens with single spaces and
    re-tokenizing yields the same token list.
    """

    tokens: tuple[str, ...]
    lang: str
    pretokenized: bool = False
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        for i, tok in enumerate(self.tokens):
            if tok == "":
                raise ValueError(f"empty token at index {i}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def text(self) -> str:
        """Tokens joined with single spaces."""
        return " ".join(self.tokens)


def register_segmenter(lang: str, segmenter: Segmenter) -> None:
    """Register a per-language segmenter hook.

    The registry is write-once: registering a language twice raises. Hooks
    receive the NFC-normalized text and must return non-empty tokens.
    """
    key = _primary_subtag(lang)
    if key in _segmenters:
        raise ValueError(f"segmenter already registered for language {key!r}")
    _segmenters[key] = segmenter


def registered_segmenter(lang: str) -> Segmenter | None:
    return _segmenters.get(_primary_subtag(lang))


def _primary_subtag(lang: str) -> str:
    return lang.split("-")[0].lower()


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _split_chunk(chunk: str) -> list[str]:
    """Detach leading/trailing punctuation codepoints of one chunk."""
    leading: list[str] = []
    trailing: list[str] = []
    start, end = 0, len(chunk)
    while start < end and _is_punct(chunk[start]):
        leading.append(chunk[start])
        start += 1
    while end > start and _is_punct(chunk[end - 1]):
        trailing.append(chunk[end - 1])
        end -= 1
    core = chunk[start:end]
    out = leading
    if core:
        out.append(core)
    out.extend(reversed(trailing))
    return out


def _is_latin_run_char(ch: str) -> bool:
    # ASCII alphanumerics form single tokens inside non-spaced scripts.
    return ch.isascii() and ch.isalnum()


def _codepoint_segment(text: str) -> list[str]:
    tokens: list[str] = []
    run = ""
    for ch in text:
        if _is_latin_run_char(ch):
            run += ch
            continue
        if run:
            tokens.append(run)
            run = ""
        if ch.isspace():
            continue
        tokens.append(ch)
    if run:
        tokens.append(run)
    return tokens


def tokenize(text: str, lang: str) -> TokenSequence:
    """Tokenize raw text deterministically for the given language.

    Input is NFC-normalized first. Empty or whitespace-only text yields an
    empty sequence. Unknown languages with no registered segmenter and no
    whitespace fall back to per-codepoint segmentation and carry a warning
    flag in the result.
    """
    normalized = unicodedata.normalize("NFC", text)
    hook = registered_segmenter(lang)
    if hook is not None:
        tokens = [t for t in hook(normalized) if t != ""]
        return TokenSequence(tuple(tokens), lang=lang)

    chunks = normalized.split()
    if not chunks:
        return TokenSequence((), lang=lang)

    known_spaced = _primary_subtag(lang) in SPACE_DELIMITED_LANGS
    stripped = normalized.strip()
    if not known_spaced and not any(ch.isspace() for ch in stripped):
        # No usable whitespace in a non-spaced script: per-codepoint fallback.
        tokens = _codepoint_segment(stripped)
        return TokenSequence(tuple(tokens), lang=lang, warnings=(FALLBACK_WARNING,))

    tokens = []
    for chunk in chunks:
        tokens.extend(_split_chunk(chunk))
    return TokenSequence(tuple(tokens), lang=lang)


def from_pretokenized(tokens: Sequence[str] | Iterable[str], lang: str) -> TokenSequence:
    """Wrap externally segmented tokens verbatim.

    Raises ValueError naming the index of any empty-string token.
    """
    toks = tuple(tokens)
    for i, tok in enumerate(toks):
        if tok == "":
            raise ValueError(f"empty token at index {i}")
    return TokenSequence(toks, lang=lang, pretokenized=True)
