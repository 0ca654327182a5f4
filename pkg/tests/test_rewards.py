import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_key_set, random_reward_instance
from oracles import aao_oracle, aaw_oracle, bleu_oracle, taw_oracle
from termreward.keywords import KeywordLexicon, filter_key
from termreward.rewards import (
    ComponentScores,
    MatchPolicy,
    ParsedOutput,
    RewardError,
    RewardWeights,
    combine,
    order_pairs,
    parse_output,
    reward_aao,
    reward_aaw,
    reward_bleu,
    reward_taw,
    round_half_away,
)
from termreward.align import AlignmentLink, AlignmentSet
from termreward.tokenizer import from_pretokenized


class TestParseOutput:
    def test_canonical_form(self):
        parsed = parse_output("<think>plan</think> <answer>hi</answer>")
        assert parsed.format_ok is True
        assert parsed.think == "plan"
        assert parsed.answer == "hi"

    def test_missing_think(self):
        assert parse_output("<answer>hi</answer>").format_ok is False

    def test_repeated_answer_pair(self):
        raw = "<think>a</think><answer>b</answer><answer>c</answer>"
        assert parse_output(raw).format_ok is False

    def test_nested_think(self):
        raw = "<think><think>a</think></think><answer>b</answer>"
        assert parse_output(raw).format_ok is False

    def test_answer_before_think(self):
        raw = "<answer>b</answer><think>a</think>"
        assert parse_output(raw).format_ok is False
        assert parse_output(raw, mode="lenient").format_ok is False

    def test_text_outside_tags_strict_vs_lenient(self):
        raw = "Sure! <think>a</think> <answer>b</answer> Done."
        assert parse_output(raw).format_ok is False
        lenient = parse_output(raw, mode="lenient")
        assert lenient.format_ok is True
        assert lenient.think == "a"
        assert lenient.answer == "b"

    def test_whitespace_outside_tags_ok(self):
        raw = "  <think>a</think>\n\n<answer>b</answer>\t"
        assert parse_output(raw).format_ok is True

    def test_tags_case_sensitive(self):
        assert parse_output("<THINK>a</THINK><answer>b</answer>").format_ok is False

    def test_multiline_spans(self):
        raw = "<think>line1\nline2</think> <answer>x\ny</answer>"
        parsed = parse_output(raw)
        assert parsed.format_ok and parsed.think == "line1\nline2"

    def test_failure_empties_spans(self):
        parsed = parse_output("no tags at all")
        assert parsed.think == "" and parsed.answer == ""


class TestMatchPolicy:
    def test_english_target_folds(self):
        assert MatchPolicy.for_target_language("en").case_fold is True
        assert MatchPolicy.for_target_language("en-US").case_fold is True

    def test_german_and_chinese_exact(self):
        assert MatchPolicy.for_target_language("de").case_fold is False
        assert MatchPolicy.for_target_language("zh").case_fold is False


class TestRewardAaw:
    def test_two_matches_quarter(self):
        # Hand-enumerated: keyed links for cat and dog both translated
        # identically; N=4 source tokens, K=4 predicted tokens.
        src = ["big", "cat", "chased", "dog"]
        ref = ["große", "Katze", "jagte", "Hund"]
        pre = ["Katze", "jagte", "den", "Hund"]
        aref = make_key_set([(1, 1), (3, 3)], src, ref, {"cat", "dog"})
        apre = make_key_set([(1, 0), (3, 3)], src, pre, {"cat", "dog"})
        assert reward_aaw(aref, apre, 4, 4) == 0.25

    def test_empty_prediction_links(self):
        src = ["cat"]
        aref = make_key_set([(0, 0)], src, ["Katze"])
        apre = make_key_set([], src, ["Hund"])
        assert reward_aaw(aref, apre, 1, 1) == 0.0

    def test_perfect_match_ceiling_half(self):
        src = ["cat", "dog"]
        tgt = ["Katze", "Hund"]
        key = make_key_set([(0, 0), (1, 1)], src, tgt)
        assert reward_aaw(key, key, 2, 2) == 0.5

    def test_duplicate_words_consume_one_to_one(self):
        # One correct key word repeated three times must count once.
        src = ["cat"]
        ref = ["Katze"]
        pre = ["Katze", "Katze", "Katze"]
        aref = make_key_set([(0, 0)], src, ref)
        apre = make_key_set([(0, 0), (0, 1), (0, 2)], src, pre)
        assert reward_aaw(aref, apre, 1, 3) == pytest.approx(1 / 4)

    def test_target_positions_ignored(self):
        src = ["cat"]
        aref = make_key_set([(0, 3)], src, ["a", "b", "c", "Katze"])
        apre = make_key_set([(0, 0)], src, ["Katze"])
        assert reward_aaw(aref, apre, 1, 1) == 0.5

    def test_case_fold_policy(self):
        src = ["cat"]
        aref = make_key_set([(0, 0)], src, ["Katze"])
        apre = make_key_set([(0, 0)], src, ["katze"])
        assert reward_aaw(aref, apre, 1, 1, MatchPolicy(case_fold=True)) == 0.5
        assert reward_aaw(aref, apre, 1, 1, MatchPolicy(case_fold=False)) == 0.0

    def test_bad_lengths_rejected(self):
        src = ["cat"]
        key = make_key_set([(0, 0)], src, ["Katze"])
        with pytest.raises(RewardError):
            reward_aaw(key, key, 0, 1)
        with pytest.raises(RewardError):
            reward_aaw(key, key, 1, 0)  # non-empty links with pred_len 0

    def test_anti_hacking_strictly_decreasing_in_pred_len(self):
        src = ["cat", "dog"]
        tgt = ["Katze", "Hund"]
        key = make_key_set([(0, 0), (1, 1)], src, tgt)
        values = [reward_aaw(key, key, 2, k) for k in range(2, 12)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_added_match_never_decreases(self):
        src = ["cat", "dog"]
        ref = ["Katze", "Hund"]
        aref = make_key_set([(0, 0), (1, 1)], src, ref)
        one = make_key_set([(0, 0)], src, ["Katze", "x"])
        two = make_key_set([(0, 0), (1, 1)], src, ["Katze", "Hund"])
        assert reward_aaw(aref, two, 2, 2) >= reward_aaw(aref, one, 2, 2)


class TestRewardAao:
    def test_od_paper_example(self):
        assert order_pairs(["a", "b", "c"]) == {("a", "b"), ("a", "c"), ("b", "c")}

    def test_swapped_pair_two_thirds(self):
        # ref target order [a, b, c]; predicted order [a, c, b]:
        # {ab, ac, bc} ∩ {ac, ab, cb} = {ab, ac} -> 2/3.
        src = ["s0", "s1", "s2"]
        aref = make_key_set([(0, 0), (1, 1), (2, 2)], src, ["a", "b", "c"])
        apre = make_key_set([(0, 0), (1, 2), (2, 1)], src, ["a", "c", "b"])
        assert reward_aao(aref, apre) == pytest.approx(2 / 3)

    def test_identical_order_is_one(self):
        src = ["s0", "s1", "s2"]
        key = make_key_set([(0, 0), (1, 1), (2, 2)], src, ["a", "b", "c"])
        assert reward_aao(key, key) == 1.0

    def test_no_order_constraint_defaults_to_one(self):
        src = ["s0"]
        single = make_key_set([(0, 0)], src, ["a"])
        empty = make_key_set([], src, ["a"])
        assert reward_aao(single, empty) == 1.0
        assert reward_aao(empty, empty) == 1.0
        assert reward_aao(single, empty, empty_order_value=0.0) == 0.0

    def test_shared_target_position_counts_once(self):
        src = ["s0", "s1"]
        # both source keywords align to the same target word position
        aref = make_key_set([(0, 0), (1, 0)], src, ["a"])
        apre = make_key_set([(0, 0)], src, ["a"])
        assert reward_aao(aref, apre) == 1.0  # no pairs from a single position


class TestRewardTaw:
    def test_half_hits(self):
        src = ["cat", "dog"]
        ref = ["猫", "狗"]
        key = make_key_set([(0, 0), (1, 1)], src, ref)
        assert reward_taw(key, "cat is 猫", "en", "zh") == 0.5

    def test_empty_think(self):
        src = ["cat"]
        key = make_key_set([(0, 0)], src, ["猫"])
        assert reward_taw(key, "", "en", "zh") == 0.0

    def test_all_hits(self):
        src = ["cat", "dog"]
        ref = ["猫", "狗"]
        key = make_key_set([(0, 0), (1, 1)], src, ref)
        think = "translate cat to 猫 and dog to 狗"
        assert reward_taw(key, think, "en", "zh") == 1.0

    def test_empty_key_set_is_zero(self):
        src = ["cat"]
        key = make_key_set([], src, ["猫"])
        assert reward_taw(key, "cat 猫", "en", "zh") == 0.0

    def test_membership_is_token_level_not_substring(self):
        src = ["cat"]
        key = make_key_set([(0, 0)], src, ["Katze"])
        # 'cat' appears only inside 'catalogue'; not a token hit
        assert reward_taw(key, "catalogue Katze", "en", "de") == 0.0

    def test_chinese_think_without_spaces(self):
        src = ["cat"]
        key = make_key_set([(0, 0)], src, ["猫"])
        assert reward_taw(key, "翻译cat为猫", "en", "zh") == 1.0


class TestRewardBleu:
    def test_identical_is_one(self):
        seq = from_pretokenized(["the", "cat", "sat"], "en")
        assert reward_bleu(seq, seq) == 1.0

    def test_disjoint_below_floor(self):
        answer = from_pretokenized(["x", "y", "z"], "en")
        ref = from_pretokenized(["the", "cat"], "en")
        assert reward_bleu(answer, ref) < 0.05

    def test_toy_pair_matches_oracle(self):
        answer = from_pretokenized(["the", "the", "the"], "en")
        ref = from_pretokenized(["the", "cat"], "en")
        expected = bleu_oracle([["the", "the", "the"]], [["the", "cat"]], smooth=True) / 100
        # hand count: p1=1/3, p2=1/3 (add-one), p3=1/2, p4=1, BP=1
        assert expected == pytest.approx((1 / 18) ** 0.25, abs=1e-12)
        assert reward_bleu(answer, ref) == pytest.approx(expected, abs=1e-12)

    def test_empty_reference_rejected(self):
        with pytest.raises(RewardError, match="empty reference"):
            reward_bleu(from_pretokenized(["a"], "en"), from_pretokenized([], "en"))

    def test_empty_answer_is_zero(self):
        ref = from_pretokenized(["a"], "en")
        assert reward_bleu(from_pretokenized([], "en"), ref) == 0.0


class TestRounding:
    def test_round_down(self):
        assert round_half_away(0.9132) == 0.91

    def test_ties_away_from_zero(self):
        assert round_half_away(0.915) == 0.92
        assert round_half_away(0.005) == 0.01
        assert round_half_away(-0.005) == -0.01

    def test_exact_two_decimals_unchanged(self):
        assert round_half_away(0.8) == 0.8


def ok_output():
    return parse_output("<think>t</think> <answer>a</answer>")


def bad_output():
    return parse_output("<answer>a</answer>")


class TestCombine:
    def test_gate_forces_zero(self):
        breakdown = combine(
            bad_output(),
            ComponentScores(comet=0.9, aaw=0.5, aao=1.0, taw=1.0),
            RewardWeights(),
        )
        assert breakdown.r_all == 0.0
        assert breakdown.r_format == 0

    def test_derived_arithmetic(self):
        breakdown = combine(
            ok_output(),
            ComponentScores(comet=0.80, aaw=0.25, aao=2 / 3, taw=0.5),
            RewardWeights(alpha=1.0, beta=0.1, gamma=0.1),
        )
        expected = 0.80 + 1.0 * 0.25 + 0.1 * (2 / 3) + 0.1 * 0.5
        assert breakdown.r_all == pytest.approx(expected, abs=1e-9)

    def test_zero_weights_degenerate(self):
        breakdown = combine(
            ok_output(),
            ComponentScores(comet=0.73, aaw=0.4, aao=0.9, taw=0.2),
            RewardWeights(alpha=0.0, beta=0.0, gamma=0.0, bleu_weight=0.0),
        )
        assert breakdown.r_all == breakdown.r_comet == 0.73

    def test_comet_rounded_before_weighting(self):
        breakdown = combine(ok_output(), ComponentScores(comet=0.9132), RewardWeights())
        assert breakdown.r_comet == 0.91
        assert breakdown.r_all == 0.91

    def test_bleu_recipe_component(self):
        breakdown = combine(
            ok_output(),
            ComponentScores(comet=0.5, bleu=0.25),
            RewardWeights(bleu_weight=2.0),
        )
        assert breakdown.r_all == pytest.approx(0.5 + 2.0 * 0.25)

    def test_negative_weight_rejected(self):
        with pytest.raises(RewardError):
            RewardWeights(alpha=-0.1)

    def test_non_finite_component_rejected(self):
        with pytest.raises(RewardError):
            combine(ok_output(), ComponentScores(comet=float("nan")), RewardWeights())

    def test_linearity_in_each_component(self):
        weights = RewardWeights(alpha=0.7, beta=0.3, gamma=0.2, bleu_weight=0.5)
        base = ComponentScores(comet=0.5, aaw=0.1, aao=0.2, taw=0.3, bleu=0.4)
        reference = combine(ok_output(), base, weights).r_all
        for name, weight in (
            ("aaw", weights.alpha),
            ("aao", weights.beta),
            ("taw", weights.gamma),
            ("bleu", weights.bleu_weight),
        ):
            bumped = {
                "comet": base.comet, "aaw": base.aaw, "aao": base.aao,
                "taw": base.taw, "bleu": base.bleu,
            }
            bumped[name] += 1.0
            delta = combine(ok_output(), ComponentScores(**bumped), weights).r_all - reference
            assert delta == pytest.approx(weight, abs=1e-12)


class TestMonotonicity:
    def test_adding_correct_order_pair_never_decreases_aao(self):
        src = ["s0", "s1", "s2"]
        aref = make_key_set([(0, 0), (1, 1), (2, 2)], src, ["a", "b", "c"])
        # prediction starts with only pair (a, c) correct, then gains (a, b)
        worse = make_key_set([(0, 0), (2, 1), (1, 2)], src, ["a", "c", "b"])
        better = make_key_set([(0, 0), (1, 1), (2, 2)], src, ["a", "b", "c"])
        assert reward_aao(aref, better) >= reward_aao(aref, worse)

    def test_adding_think_hit_never_decreases_taw(self):
        src = ["cat", "dog"]
        key = make_key_set([(0, 0), (1, 1)], src, ["Katze", "Hund"])
        partial = reward_taw(key, "cat Katze", "en", "de")
        fuller = reward_taw(key, "cat Katze dog Hund", "en", "de")
        assert fuller >= partial


class TestOracleEquivalence:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=10**6), st.booleans())
    def test_random_instances_match_bruteforce(self, seed, fold):
        rng = random.Random(seed)
        src, ref, pre, ref_pairs, pre_pairs, keywords, think_tokens = (
            random_reward_instance(rng)
        )
        policy = MatchPolicy(case_fold=fold)
        lexicon = KeywordLexicon.from_tokens(keywords or {"_none_"})

        def key_set(pairs, tgt):
            links = [AlignmentLink(i, j, src[i], tgt[j]) for i, j in pairs]
            full = AlignmentSet.from_links(links, len(src), len(tgt))
            return filter_key(full, lexicon)

        aref_key = key_set(ref_pairs, ref)
        apre_key = key_set(pre_pairs, pre)
        ref_links = [(i, j, src[i], ref[j]) for i, j in ref_pairs]
        pre_links = [(i, j, src[i], pre[j]) for i, j in pre_pairs]

        engine_aaw = reward_aaw(aref_key, apre_key, len(src), len(pre), policy)
        oracle_aaw = aaw_oracle(ref_links, pre_links, keywords, len(src), len(pre), fold)
        assert engine_aaw == oracle_aaw
        assert 0.0 <= engine_aaw <= 0.5

        engine_aao = reward_aao(aref_key, apre_key, policy)
        oracle_aao = aao_oracle(ref_links, pre_links, keywords, fold)
        assert engine_aao == oracle_aao
        assert 0.0 <= engine_aao <= 1.0

        think = " ".join(think_tokens)
        engine_taw = reward_taw(aref_key, think, "en", "de", policy)
        oracle_taw = taw_oracle(ref_links, keywords, think_tokens, fold)
        assert engine_taw == oracle_taw
        assert 0.0 <= engine_taw <= 1.0
