"""Shared construction helpers for alignment/reward tests."""

import contextlib
import random
import socket
import threading
import time

from termreward.align import AlignmentLink, AlignmentSet
from termreward.keywords import KeywordLexicon, filter_key
from termreward.tokenizer import from_pretokenized

SRC_WORDS = ["cat", "dog", "tree", "car", "sun", "book", "fish", "rain"]
TGT_WORDS = ["Katze", "Hund", "Baum", "Auto", "Sonne", "katze", "hund", "Buch"]


def make_alignment(pairs, src_tokens, tgt_tokens) -> AlignmentSet:
    links = [
        AlignmentLink(i, j, src_tokens[i], tgt_tokens[j]) for i, j in pairs
    ]
    return AlignmentSet.from_links(links, len(src_tokens), len(tgt_tokens))


def make_key_set(pairs, src_tokens, tgt_tokens, keywords=None):
    """AlignmentSet restricted to keyword source tokens (all tokens if None)."""
    keywords = set(src_tokens) if keywords is None else set(keywords)
    full = make_alignment(pairs, src_tokens, tgt_tokens)
    return filter_key(full, KeywordLexicon.from_tokens(keywords))


def raw_links(alignment) -> list[tuple[int, int, str, str]]:
    return [(l.src_idx, l.tgt_idx, l.src_word, l.tgt_word) for l in alignment.links]


def random_reward_instance(rng: random.Random, max_len: int = 8):
    """A random source/reference/prediction triple with random alignments.

    Returns raw source/target token lists, full link lists for the oracle,
    the keyword set, and think tokens sampled from both vocabularies.
    """
    n = rng.randint(1, max_len)
    m = rng.randint(1, max_len)
    k = rng.randint(0, max_len)
    src = [rng.choice(SRC_WORDS) for _ in range(n)]
    ref = [rng.choice(TGT_WORDS) for _ in range(m)]
    pre = [rng.choice(TGT_WORDS) for _ in range(k)]

    def sample_pairs(rows, cols):
        if rows == 0 or cols == 0:
            return []
        universe = [(i, j) for i in range(rows) for j in range(cols)]
        return sorted(rng.sample(universe, rng.randint(0, min(len(universe), max_len))))

    ref_pairs = sample_pairs(n, m)
    pre_pairs = sample_pairs(n, k)
    keywords = {w for w in set(src) if rng.random() < 0.7}
    think_pool = src + ref + ["noise", "words"]
    think_tokens = [rng.choice(think_pool) for _ in range(rng.randint(0, 2 * max_len))]
    return src, ref, pre, ref_pairs, pre_pairs, keywords, think_tokens


def seqs(tokens, lang="en"):
    return from_pretokenized(tokens, lang)


@contextlib.contextmanager
def run_http_app(app):
    """Serve an ASGI app on an ephemeral local port for the test's duration."""
    import uvicorn

    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()

    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("test server failed to start")
        time.sleep(0.01)
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=5)
