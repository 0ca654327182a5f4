"""Word alignment: EM-trained lexical translation tables and alignment sets.

Provides a built-in IBM Model 1 aligner (optionally Model 2 with a distortion
table) trained by expectation-maximization on a parallel corpus, argmax and
grow-diag-final alignment extraction, Pharaoh-format ingestion of external
alignments, and a bit-exact binary table serialization.
"""

from __future__ import annotations

import math
import re
import struct
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Literal

from .tokenizer import TokenSequence

# Source-side NULL word. Real tokens are never empty strings, so the empty
# string is a collision-free key for the NULL row.
NULL_SOURCE = ""

Model = Literal["ibm1", "ibm2"]

_PROB_FLOOR = 1e-300  # guards log() against float underflow, not a smoothing term


class AlignmentError(ValueError):
    pass


class PharaohParseError(ValueError):
    pass


class TableFormatError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class AlignmentLink:
    """One token-level link: source index/word paired with target index/word."""

    src_idx: int
    tgt_idx: int
    src_word: str
    tgt_word: str


@dataclass(frozen=True)
class AlignmentSet:
    """A deduplicated, (src_idx, tgt_idx)-sorted set of alignment links."""

    links: tuple[AlignmentLink, ...]
    src_len: int
    tgt_len: int
    oov: int = field(default=0, compare=False)

    @classmethod
    def from_links(
        cls,
        links: Iterable[AlignmentLink],
        src_len: int,
        tgt_len: int,
        oov: int = 0,
    ) -> "AlignmentSet":
        by_pos: dict[tuple[int, int], AlignmentLink] = {}
        for link in links:
            if not (0 <= link.src_idx < src_len):
                raise AlignmentError(
                    f"src index {link.src_idx} out of range for length {src_len}"
                )
            if not (0 <= link.tgt_idx < tgt_len):
                raise AlignmentError(
                    f"tgt index {link.tgt_idx} out of range for length {tgt_len}"
                )
            pos = (link.src_idx, link.tgt_idx)
            seen = by_pos.get(pos)
            if seen is not None and seen != link:
                raise AlignmentError(f"conflicting links at position {pos}")
            by_pos[pos] = link
        ordered = tuple(by_pos[pos] for pos in sorted(by_pos))
        return cls(links=ordered, src_len=src_len, tgt_len=tgt_len, oov=oov)

    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((l.src_idx, l.tgt_idx) for l in self.links)

    def __len__(self) -> int:
        return len(self.links)

    def __iter__(self):
        return iter(self.links)


@dataclass
class TranslationTable:
    """Sparse lexical translation probabilities t(target word | source word).

    ``probs`` maps each source word (plus the NULL row under ``NULL_SOURCE``)
    to a row of target-word probabilities summing to 1. ``distortion`` is
    populated for ibm2 only and maps (src_len, tgt_len) to a per-target-
    position distribution over source positions 0..src_len, where position 0
    is NULL. Training diagnostics are carried but never serialized.
    """

    probs: dict[str, dict[str, float]]
    model: Model = "ibm1"
    distortion: dict[tuple[int, int], list[list[float]]] = field(default_factory=dict)
    log_likelihoods: list[float] = field(default_factory=list, compare=False)
    skipped_pairs: int = field(default=0, compare=False)

    def source_vocab(self) -> set[str]:
        return {w for w in self.probs if w != NULL_SOURCE}

    def target_vocab(self) -> set[str]:
        vocab: set[str] = set()
        for row in self.probs.values():
            vocab.update(row)
        return vocab

    def prob(self, tgt_word: str, src_word: str) -> float:
        return self.probs.get(src_word, {}).get(tgt_word, 0.0)

    def check_rows(self, tol: float = 1e-9) -> None:
        """Raise if any row fails the sum-to-one invariant."""
        for src_word, row in self.probs.items():
            total = math.fsum(row.values())
            if abs(total - 1.0) > tol:
                raise AlignmentError(
                    f"row for {src_word!r} sums to {total!r}, expected 1"
                )
            for prob in row.values():
                if not (0.0 <= prob <= 1.0):
                    raise AlignmentError(f"probability {prob!r} outside [0, 1]")


def _usable_pairs(
    corpus: Iterable[tuple[TokenSequence, TokenSequence]],
) -> tuple[list[tuple[tuple[str, ...], tuple[str, ...]]], int]:
    pairs = []
    skipped = 0
    for src, tgt in corpus:
        if len(src) == 0 or len(tgt) == 0:
            skipped += 1
            continue
        pairs.append((tuple(src), tuple(tgt)))
    return pairs, skipped


def em_train(
    corpus: list[tuple[TokenSequence, TokenSequence]],
    iterations: int,
    model: Model = "ibm1",
) -> TranslationTable:
    """Estimate a TranslationTable by EM over a parallel corpus.

    Initialization is uniform over observed co-occurrences only; a NULL
    source word participates in every sentence pair. Per-iteration corpus
    log-likelihood (under the parameters entering the iteration) is recorded
    on the result and is non-decreasing. Sentence pairs with an empty side
    are skipped and counted.
    """
    if iterations < 1:
        raise AlignmentError("iterations must be >= 1")
    if model not in ("ibm1", "ibm2"):
        raise AlignmentError(f"unknown model {model!r}")
    pairs, skipped = _usable_pairs(corpus)
    if not pairs:
        raise AlignmentError("empty corpus")

    cooc: dict[str, set[str]] = defaultdict(set)
    for src_toks, tgt_toks in pairs:
        for e in (NULL_SOURCE, *src_toks):
            cooc[e].update(tgt_toks)
    t = {e: {f: 1.0 / len(fs) for f in fs} for e, fs in cooc.items()}

    distortion: dict[tuple[int, int], list[list[float]]] = {}
    if model == "ibm2":
        for src_toks, tgt_toks in pairs:
            shape = (len(src_toks), len(tgt_toks))
            if shape not in distortion:
                uniform = 1.0 / (shape[0] + 1)
                distortion[shape] = [
                    [uniform] * (shape[0] + 1) for _ in range(shape[1])
                ]

    log_likelihoods: list[float] = []
    for _ in range(iterations):
        counts: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
        totals: dict[str, float] = defaultdict(float)
        dist_counts: dict[tuple[int, int], list[list[float]]] = {}
        ll = 0.0
        for src_toks, tgt_toks in pairs:
            es = (NULL_SOURCE, *src_toks)
            shape = (len(src_toks), len(tgt_toks))
            if model == "ibm2":
                a_table = distortion[shape]
                if shape not in dist_counts:
                    dist_counts[shape] = [
                        [0.0] * (shape[0] + 1) for _ in range(shape[1])
                    ]
            for j, f in enumerate(tgt_toks):
                if model == "ibm2":
                    scores = [a_table[j][i] * t[e].get(f, 0.0) for i, e in enumerate(es)]
                else:
                    scores = [t[e].get(f, 0.0) for e in es]
                denom = math.fsum(scores)
                if model == "ibm1":
                    # IBM1 alignment prior is uniform over the l+1 positions.
                    ll += math.log(max(denom, _PROB_FLOOR)) - math.log(len(es))
                else:
                    ll += math.log(max(denom, _PROB_FLOOR))
                if denom <= 0.0:
                    continue
                for i, e in enumerate(es):
                    c = scores[i] / denom
                    if c == 0.0:
                        continue
                    counts[e][f] += c
                    totals[e] += c
                    if model == "ibm2":
                        dist_counts[shape][j][i] += c
        log_likelihoods.append(ll)

        t = {
            e: {f: c / totals[e] for f, c in row.items()}
            for e, row in counts.items()
        }
        if model == "ibm2":
            for shape, rows in dist_counts.items():
                new_rows = []
                for row in rows:
                    row_total = math.fsum(row)
                    if row_total <= 0.0:
                        uniform = 1.0 / len(row)
                        new_rows.append([uniform] * len(row))
                    else:
                        new_rows.append([c / row_total for c in row])
                distortion[shape] = new_rows

    return TranslationTable(
        probs={e: dict(row) for e, row in t.items()},
        model=model,
        distortion=distortion,
        log_likelihoods=log_likelihoods,
        skipped_pairs=skipped,
    )


def _forward_links(
    table: TranslationTable, src: TokenSequence, tgt: TokenSequence
) -> set[tuple[int, int]]:
    """Best source position for each target token; NULL picks drop the link."""
    links: set[tuple[int, int]] = set()
    dist = table.distortion.get((len(src), len(tgt))) if table.model == "ibm2" else None
    src_toks = tuple(src)
    for j, f in enumerate(tgt):
        null_score = table.prob(f, NULL_SOURCE)
        if dist is not None:
            null_score *= dist[j][0]
        best_i, best_score = -1, 0.0
        for i, e in enumerate(src_toks):
            score = table.prob(f, e)
            if dist is not None:
                score *= dist[j][i + 1]
            if score > best_score:  # strict: ties keep the lowest source index
                best_i, best_score = i, score
        if best_i >= 0 and best_score > 0.0 and best_score >= null_score:
            links.add((best_i, j))
    return links


def _reverse_links(
    table: TranslationTable, src: TokenSequence, tgt: TokenSequence
) -> set[tuple[int, int]]:
    """Best target position for each source token (same table, other axis)."""
    links: set[tuple[int, int]] = set()
    for i, e in enumerate(src):
        best_j, best_score = -1, 0.0
        for j, f in enumerate(tgt):
            score = table.prob(f, e)
            if score > best_score:
                best_j, best_score = j, score
        if best_j >= 0 and best_score > 0.0:
            links.add((i, best_j))
    return links


_NEIGHBORS = (
    (-1, 0), (0, -1), (1, 0), (0, 1),
    (-1, -1), (-1, 1), (1, -1), (1, 1),
)


def _grow_diag_final(
    forward: set[tuple[int, int]],
    reverse: set[tuple[int, int]],
) -> set[tuple[int, int]]:
    union = forward | reverse
    aligned = set(forward & reverse)
    src_done = {i for i, _ in aligned}
    tgt_done = {j for _, j in aligned}

    grew = True
    while grew:
        grew = False
        for i, j in sorted(aligned):
            for di, dj in _NEIGHBORS:
                cand = (i + di, j + dj)
                if cand not in union or cand in aligned:
                    continue
                if cand[0] not in src_done or cand[1] not in tgt_done:
                    aligned.add(cand)
                    src_done.add(cand[0])
                    tgt_done.add(cand[1])
                    grew = True

    for direction in (forward, reverse):
        for cand in sorted(direction):
            if cand in aligned:
                continue
            if cand[0] not in src_done or cand[1] not in tgt_done:
                aligned.add(cand)
                src_done.add(cand[0])
                tgt_done.add(cand[1])
    return aligned


def align(
    table: TranslationTable,
    src: TokenSequence,
    tgt: TokenSequence,
    mode: Literal["argmax", "grow-diag"] = "grow-diag",
) -> AlignmentSet:
    """Align a sentence pair with a trained table.

    argmax links each target token to its best source token (NULL drops the
    link); grow-diag symmetrizes argmax picks of both directions with the
    grow-diag-final heuristic. Tokens absent from the table vocabulary
    increment the result's OOV counter.
    """
    if len(src) == 0 or len(tgt) == 0:
        raise AlignmentError("cannot align an empty sequence")
    if mode not in ("argmax", "grow-diag"):
        raise AlignmentError(f"unknown alignment mode {mode!r}")

    src_vocab = table.source_vocab()
    tgt_vocab = table.target_vocab()
    oov = sum(1 for tok in src if tok not in src_vocab)
    oov += sum(1 for tok in tgt if tok not in tgt_vocab)

    pairs = _forward_links(table, src, tgt)
    if mode == "grow-diag":
        pairs = _grow_diag_final(pairs, _reverse_links(table, src, tgt))

    src_toks, tgt_toks = tuple(src), tuple(tgt)
    links = [
        AlignmentLink(i, j, src_toks[i], tgt_toks[j]) for i, j in sorted(pairs)
    ]
    return AlignmentSet.from_links(links, len(src), len(tgt), oov=oov)


_PHARAOH_PAIR = re.compile(r"^(\d+)-(\d+)$")


def parse_pharaoh(line: str, src: TokenSequence, tgt: TokenSequence) -> AlignmentSet:
    """Parse one Pharaoh line (`i-j` pairs) against its sentence pair."""
    links = []
    for m in re.finditer(r"\S+", line):
        pair = m.group(0)
        parsed = _PHARAOH_PAIR.match(pair)
        if parsed is None:
            raise PharaohParseError(
                f"malformed pair {pair!r} at column {m.start() + 1}"
            )
        i, j = int(parsed.group(1)), int(parsed.group(2))
        if i >= len(src):
            raise PharaohParseError(
                f"pair {pair!r}: source index {i} out of range (length {len(src)})"
            )
        if j >= len(tgt):
            raise PharaohParseError(
                f"pair {pair!r}: target index {j} out of range (length {len(tgt)})"
            )
        links.append(AlignmentLink(i, j, src.tokens[i], tgt.tokens[j]))
    return AlignmentSet.from_links(links, len(src), len(tgt))


def format_pharaoh(alignments: AlignmentSet) -> str:
    """Render an AlignmentSet as a canonical Pharaoh line."""
    return " ".join(f"{l.src_idx}-{l.tgt_idx}" for l in alignments.links)


_MAGIC = b"TRWTABLE"
_VERSION = 1
_MODEL_CODES = {"ibm1": 1, "ibm2": 2}
_MODEL_NAMES = {code: name for name, code in _MODEL_CODES.items()}


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TableFormatError("truncated table file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def save_table(table: TranslationTable, path: str) -> None:
    """Write the table in the length-prefixed binary format (bit-exact floats)."""
    src_words = sorted(table.probs)
    tgt_words = sorted(table.target_vocab())
    tgt_index = {w: k for k, w in enumerate(tgt_words)}

    out = bytearray()
    out += _MAGIC
    out.append(_VERSION)
    out.append(_MODEL_CODES[table.model])
    out += struct.pack("<I", len(src_words))
    out += struct.pack("<I", len(tgt_words))
    for w in src_words:
        out += _pack_str(w)
    for w in tgt_words:
        out += _pack_str(w)
    for w in src_words:
        row = table.probs[w]
        out += struct.pack("<I", len(row))
        for f in sorted(row, key=lambda f: tgt_index[f]):
            out += struct.pack("<Id", tgt_index[f], row[f])
    if table.model == "ibm2":
        out += struct.pack("<I", len(table.distortion))
        for (l, m) in sorted(table.distortion):
            rows = table.distortion[(l, m)]
            out += struct.pack("<II", l, m)
            for row in rows:
                for value in row:
                    out += struct.pack("<d", value)
    with open(path, "wb") as fh:
        fh.write(bytes(out))


def load_table(path: str) -> TranslationTable:
    """Load a table written by save_table; round-trips bit-exactly."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) == 0:
        raise TableFormatError("empty table file")
    reader = _Reader(data)
    if reader.take(len(_MAGIC)) != _MAGIC:
        raise TableFormatError("bad magic header")
    version = reader.u8()
    if version != _VERSION:
        raise TableFormatError(f"unsupported table version {version}")
    model_code = reader.u8()
    if model_code not in _MODEL_NAMES:
        raise TableFormatError(f"unknown model code {model_code}")
    model: Model = _MODEL_NAMES[model_code]  # type: ignore[assignment]

    n_src = reader.u32()
    n_tgt = reader.u32()
    src_words = [reader.string() for _ in range(n_src)]
    tgt_words = [reader.string() for _ in range(n_tgt)]
    probs: dict[str, dict[str, float]] = {}
    for w in src_words:
        n_entries = reader.u32()
        row: dict[str, float] = {}
        for _ in range(n_entries):
            idx = reader.u32()
            prob = reader.f64()
            if idx >= n_tgt:
                raise TableFormatError(f"target index {idx} out of range")
            row[tgt_words[idx]] = prob
        probs[w] = row
    distortion: dict[tuple[int, int], list[list[float]]] = {}
    if model == "ibm2":
        n_buckets = reader.u32()
        for _ in range(n_buckets):
            l = reader.u32()
            m = reader.u32()
            rows = [[reader.f64() for _ in range(l + 1)] for _ in range(m)]
            distortion[(l, m)] = rows
    if reader.pos != len(data):
        raise TableFormatError("trailing bytes after table payload")
    return TranslationTable(probs=probs, model=model, distortion=distortion)
