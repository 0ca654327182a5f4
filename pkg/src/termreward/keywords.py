"""Keyword lexicons and key-alignment filtering.

Reduces full alignment sets to the links whose source token is a known
noun/term. The lexicon is a plain surface-form matcher; an upstream tagger's
per-record decisions can be injected by building a lexicon from its tokens.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .align import AlignmentLink, AlignmentSet


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class KeywordLexicon:
    """Exact-match keyword entries, optionally case-folded at lookup."""

    entries: frozenset[str]
    tags: dict[str, str] = field(default_factory=dict, compare=False)
    source: str = "builtin"
    case_fold: bool = False

    def __post_init__(self) -> None:
        if any(e == "" for e in self.entries):
            raise LexiconError("lexicon entries must be non-empty")
        if self.case_fold:
            folded = frozenset(e.casefold() for e in self.entries)
            object.__setattr__(self, "entries", folded)

    def __contains__(self, token: str) -> bool:
        return (token.casefold() if self.case_fold else token) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_tokens(
        cls, tokens: Iterable[str], source: str = "record", case_fold: bool = False
    ) -> "KeywordLexicon":
        return cls(entries=frozenset(tokens), source=source, case_fold=case_fold)


@dataclass(frozen=True)
class KeyAlignmentSet:
    """The lexicon-matching subset of an AlignmentSet."""

    links: tuple[AlignmentLink, ...]
    src_len: int
    tgt_len: int
    lexicon: KeywordLexicon
    empty_lexicon: bool = False

    def __len__(self) -> int:
        return len(self.links)

    def __iter__(self):
        return iter(self.links)


def filter_key(alignments: AlignmentSet, lexicon: KeywordLexicon) -> KeyAlignmentSet:
    """Retain exactly the links whose src_word matches the lexicon.

    Order is stable by (src_idx, tgt_idx). An empty lexicon yields an empty
    result flagged with ``empty_lexicon=True``.
    """
    kept = tuple(l for l in alignments.links if l.src_word in lexicon)
    return KeyAlignmentSet(
        links=kept,
        src_len=alignments.src_len,
        tgt_len=alignments.tgt_len,
        lexicon=lexicon,
        empty_lexicon=len(lexicon) == 0,
    )


def load_lexicon(path: str, case_fold: bool = False) -> KeywordLexicon:
    """Load a lexicon file: one entry per line, optional ``<TAB>tag``.

    Blank lines and ``#`` comments are skipped; duplicate entries collapse.
    Raises LexiconError when the file yields zero usable entries.
    """
    entries: set[str] = set()
    tags: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                entry, _, tag = line.partition("\t")
                entry = entry.strip()
                if not entry:
                    continue
                entries.add(entry)
                if tag.strip():
                    tags[entry] = tag.strip()
    except OSError as exc:
        raise LexiconError(f"cannot read lexicon {path}: {exc}") from exc
    if not entries:
        raise LexiconError(f"lexicon {path} has zero entries")
    return KeywordLexicon(
        entries=frozenset(entries), tags=tags, source=path, case_fold=case_fold
    )
