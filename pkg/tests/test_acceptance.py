"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one pass/fail line
per criterion. Tolerances are pinned here and must not be loosened.
"""

import json
import random
import time
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from helpers import random_reward_instance
from oracles import aao_oracle, aaw_oracle, bleu_oracle, em_oracle, taw_oracle
from termreward.align import AlignmentLink, AlignmentSet, em_train, load_table, save_table
from termreward.cli import main as cli_main
from termreward.config import load_config
from termreward.grpo import PolicyEvalBatch, grpo_objective, kl_approx, normalize_advantages
from termreward.keywords import KeywordLexicon, filter_key
from termreward.metrics import bleu, terminology_accuracy, TermDictionary, TermEntry
from termreward.rewards import (
    ComponentScores,
    MatchPolicy,
    RewardWeights,
    combine,
    order_pairs,
    parse_output,
    reward_aao,
    reward_aaw,
    reward_taw,
)
from termreward.server import create_app
from termreward.tokenizer import from_pretokenized, tokenize

DATA = Path(__file__).parent / "data"


def passed(line: str) -> None:
    print(f"PASS: {line}")


MALFORMED_PATTERNS = [
    "{junk}",
    "<think>{junk}</think>",
    "<answer>{junk}</answer>",
    "<answer>{junk}</answer><think>{junk}</think>",
    "<think>{junk}</think><answer>{junk}</answer><answer>x</answer>",
    "<think><think>{junk}</think></think><answer>{junk}</answer>",
    "text before <think>{junk}</think> <answer>{junk}</answer>",
    "<think>{junk}</think> <answer>{junk}",
    "<THINK>{junk}</THINK><answer>{junk}</answer>",
    "<think>{junk} <answer>{junk}</answer>",
]


def test_gate_zeroes_all_malformed_outputs():
    """1,000 randomized format-violating outputs all combine to r_all = 0 in < 1 s."""
    rng = random.Random(20240)
    weights = RewardWeights()
    started = time.perf_counter()
    for i in range(1000):
        junk = "".join(rng.choice("abc xyz\n") for _ in range(rng.randint(0, 30)))
        raw = rng.choice(MALFORMED_PATTERNS).replace("{junk}", junk)
        parsed = parse_output(raw)
        assert parsed.format_ok is False
        breakdown = combine(
            parsed,
            ComponentScores(
                comet=rng.random(),
                aaw=rng.random(),
                aao=rng.random(),
                taw=rng.random(),
            ),
            weights,
        )
        assert breakdown.r_all == 0.0
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"gate check took {elapsed:.3f}s"
    passed(f"format gate: 1000/1000 malformed outputs scored 0 in {elapsed:.3f}s")


def test_overall_reward_arithmetic_matches_independent_recomputation():
    """1,000 random component tuples under defaults match recomputation to 1e-12."""
    rng = random.Random(20241)
    weights = RewardWeights(alpha=1.0, beta=0.1, gamma=0.1)
    ok = parse_output("<think>t</think> <answer>a</answer>")
    for _ in range(1000):
        comet = rng.uniform(0, 1)
        aaw = rng.uniform(0, 0.5)
        aao = rng.uniform(0, 1)
        taw = rng.uniform(0, 1)
        breakdown = combine(
            ok, ComponentScores(comet=comet, aaw=aaw, aao=aao, taw=taw), weights
        )
        rounded = float(
            Decimal(str(comet)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
        )
        expected = rounded + 1.0 * aaw + 0.1 * aao + 0.1 * taw
        assert abs(breakdown.r_all - expected) <= 1e-12
    passed("overall reward: 1000/1000 tuples match recomputation within 1e-12")


def test_alignment_rewards_equal_bruteforce_enumeration():
    """500 random instances (≤ 8 tokens/side) match the exhaustive oracle exactly."""
    # fixed case from the order-pair definition
    assert order_pairs(["a", "b", "c"]) == {("a", "b"), ("a", "c"), ("b", "c")}

    rng = random.Random(20242)
    for trial in range(500):
        fold = trial % 2 == 1
        src, ref, pre, ref_pairs, pre_pairs, keywords, think_tokens = (
            random_reward_instance(rng, max_len=8)
        )
        policy = MatchPolicy(case_fold=fold)
        lexicon = KeywordLexicon.from_tokens(keywords or {"_none_"})

        def key_set(pairs, tgt):
            links = [AlignmentLink(i, j, src[i], tgt[j]) for i, j in pairs]
            return filter_key(
                AlignmentSet.from_links(links, len(src), len(tgt)), lexicon
            )

        aref_key = key_set(ref_pairs, ref)
        apre_key = key_set(pre_pairs, pre)
        ref_links = [(i, j, src[i], ref[j]) for i, j in ref_pairs]
        pre_links = [(i, j, src[i], pre[j]) for i, j in pre_pairs]

        assert reward_aaw(aref_key, apre_key, len(src), len(pre), policy) == aaw_oracle(
            ref_links, pre_links, keywords, len(src), len(pre), fold
        )
        assert reward_aao(aref_key, apre_key, policy) == aao_oracle(
            ref_links, pre_links, keywords, fold
        )
        think = " ".join(think_tokens)
        assert reward_taw(aref_key, think, "en", "de", policy) == taw_oracle(
            ref_links, keywords, think_tokens, fold
        )
    passed("alignment rewards: 500/500 random instances equal brute-force oracle")


def test_length_padding_strictly_decreases_word_reward():
    """Padding the prediction (matches fixed) strictly lowers the reward, 100/100."""
    rng = random.Random(20243)
    decreasing = 0
    for _ in range(100):
        src, ref, pre, ref_pairs, pre_pairs, keywords, _ = random_reward_instance(rng)
        # force at least one guaranteed keyword match
        src[0] = "cat"
        keywords = set(keywords) | {"cat"}
        ref = ["Katze"] + ref
        pre = ["Katze"] + pre
        ref_pairs = [(0, 0)] + [(i, j + 1) for i, j in ref_pairs]
        pre_pairs = [(0, 0)] + [(i, j + 1) for i, j in pre_pairs]
        lexicon = KeywordLexicon.from_tokens(keywords)

        def key_set(pairs, tgt):
            links = [AlignmentLink(i, j, src[i], tgt[j]) for i, j in pairs]
            return filter_key(
                AlignmentSet.from_links(links, len(src), len(tgt)), lexicon
            )

        aref_key = key_set(ref_pairs, ref)
        apre_key = key_set(pre_pairs, pre)
        base_len = len(pre)
        padding = rng.randint(1, 10)
        before = reward_aaw(aref_key, apre_key, len(src), base_len)
        after = reward_aaw(aref_key, apre_key, len(src), base_len + padding)
        if after < before:
            decreasing += 1
    assert decreasing == 100
    passed("anti-hacking: output padding strictly decreased the reward in 100/100 trials")


def test_group_advantage_normalization():
    """Groups of 16 normalize to mean 0 ± 1e-9 and population std 1 ± 1e-9."""
    from statistics import fmean, pstdev

    rng = random.Random(20244)
    checked = 0
    for _ in range(200):
        rewards = [rng.uniform(0, 2) for _ in range(16)]
        if pstdev(rewards) <= 1e-12:
            continue
        advantages = normalize_advantages(rewards)
        assert abs(fmean(advantages)) <= 1e-9
        assert abs(pstdev(advantages) - 1.0) <= 1e-9
        checked += 1
    assert checked > 0

    fixed = normalize_advantages([1.0, 2.0, 3.0])
    assert fixed == pytest.approx([-1.2247, 0.0, 1.2247], abs=1e-4)
    passed(f"advantage normalization: {checked} groups of 16 + fixed [1,2,3] case")


def test_kl_approximation_and_clipping():
    """kl(p,p)=0 exactly; kl ≥ 0 on 10,000 pairs; clip cases give 1.2 and -2."""
    rng = random.Random(20245)
    for _ in range(10_000):
        p_theta = rng.uniform(1e-6, 1.0)
        p_ref = rng.uniform(1e-6, 1.0)
        assert kl_approx(p_theta, p_ref) >= 0.0
    for _ in range(100):
        p = rng.uniform(1e-6, 1.0)
        assert kl_approx(p, p) == 0.0

    def clip_case(advantage):
        return grpo_objective(
            PolicyEvalBatch(
                p_theta=(0.8,),
                p_old=(0.4,),  # ratio exactly 2.0
                p_ref=(0.8,),
                advantages=(advantage,),
                clip_epsilon=0.2,
                kl_coefficient=0.0,
            )
        )

    assert clip_case(1.0) == 1.2
    assert clip_case(-1.0) == -2.0
    passed("kl approximation nonnegative on 10000 pairs; clip cases exact")


def test_em_aligner_convergence_and_roundtrip(tmp_path):
    """Toy-corpus EM: monotone log-likelihood, t(book|buch) > 0.9, bit-exact IO."""
    corpus = [
        (tokenize("das haus", "de"), tokenize("the house", "en")),
        (tokenize("das buch", "de"), tokenize("the book", "en")),
        (tokenize("ein buch", "de"), tokenize("a book", "en")),
    ]
    table = em_train(corpus, iterations=10)
    lls = table.log_likelihoods
    assert len(lls) == 10
    assert all(b >= a - 1e-12 for a, b in zip(lls, lls[1:]))
    assert table.probs["buch"]["book"] > 0.9

    oracle = em_oracle([(["das", "haus"], ["the", "house"]),
                        (["das", "buch"], ["the", "book"]),
                        (["ein", "buch"], ["a", "book"])], 10)
    assert oracle["buch"]["book"] == pytest.approx(table.probs["buch"]["book"], abs=1e-9)

    path = tmp_path / "table.bin"
    save_table(table, str(path))
    loaded = load_table(str(path))
    assert loaded.probs == table.probs  # exact float equality: bit-exact round-trip
    passed(
        "EM aligner: monotone log-likelihood, t(book|buch)="
        f"{table.probs['buch']['book']:.4f} > 0.9, bit-exact table round-trip"
    )


def test_bleu_and_terminology_oracles():
    """Self-BLEU 100.0; toy corpus within 1e-4 of the oracle; TA fixture is 2/3."""
    hyps = [tokenize(s, "en") for s in [
        "the cat sat on the mat", "there is a cat on the mat", "dogs run fast",
    ]]
    refs = [tokenize(s, "en") for s in [
        "the cat sat on the mat", "the cat is on the mat", "the dogs run very fast",
    ]]
    assert bleu(hyps, hyps).value == 100.0
    engine = bleu(hyps, refs).value
    oracle = bleu_oracle([list(h) for h in hyps], [list(r) for r in refs])
    assert engine == pytest.approx(oracle, abs=1e-4)

    dictionary = TermDictionary(entries=(
        TermEntry(source=("Hund",), renderings=(("dog",),)),
        TermEntry(source=("Katze",), renderings=(("cat",), ("kitty",))),
    ))
    records = [
        (tokenize("der Hund und die Katze", "de"), tokenize("the dog and the bird", "en")),
        (tokenize("ein Hund bellt", "de"), tokenize("a dog barks", "en")),
    ]
    ta = terminology_accuracy(records, dictionary)
    assert ta.value == pytest.approx(2 / 3, abs=1e-12)
    assert ta.details["term_total"] == 3
    passed(f"BLEU self=100.0, toy corpus {engine:.4f} matches oracle; TA = 2/3")


def test_cli_score_reproduces_golden_bytes(tmp_path):
    """CLI score on the 10-record fixture is byte-identical to the golden file, < 5 s."""
    out = tmp_path / "scored.jsonl"
    started = time.perf_counter()
    code = cli_main([
        "score",
        "--records", str(DATA / "golden_records.jsonl"),
        "--config", str(DATA / "golden_config.json"),
        "--out", str(out),
    ])
    elapsed = time.perf_counter() - started
    assert code == 0
    assert out.read_bytes() == (DATA / "golden_expected.jsonl").read_bytes()
    assert elapsed < 5.0
    passed(f"end-to-end determinism: golden output byte-identical in {elapsed:.2f}s")


def test_service_and_cli_identical_breakdowns():
    """POST /v1/score returns the same breakdowns, field by field, as the CLI."""
    app = create_app(load_config(DATA / "golden_config.json"))
    app.state.service.load()
    client = TestClient(app)
    records = [
        json.loads(line)
        for line in (DATA / "golden_records.jsonl").read_text(encoding="utf-8").splitlines()
    ]
    response = client.post("/v1/score", json={"records": records})
    assert response.status_code == 200
    items = response.json()["items"]

    expected = [
        json.loads(line)
        for line in (DATA / "golden_expected.jsonl").read_text(encoding="utf-8").splitlines()
    ]
    expected_results = [l for l in expected if "summary" not in l]
    assert len(items) == len(expected_results)
    for item, want in zip(items, expected_results):
        got = dict(item)
        got.pop("latency_ms")
        assert got == want
    passed("service/CLI equivalence: identical breakdowns for the golden fixture")
