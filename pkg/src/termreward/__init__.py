"""Terminology-aware machine translation reward engine.

Parses reasoning-formatted model outputs, computes word-alignment-based
terminology rewards, combines them with pluggable semantic scores behind a
format gate, and provides GRPO advantage/objective math, corpus metrics,
a batch scoring CLI, and a reward service.
"""

from .align import (
    AlignmentError,
    AlignmentLink,
    AlignmentSet,
    PharaohParseError,
    TableFormatError,
    TranslationTable,
    align,
    em_train,
    format_pharaoh,
    load_table,
    parse_pharaoh,
    save_table,
)
from .config import ConfigError, RewardConfig, load_config
from .grpo import GrpoError, PolicyEvalBatch, grpo_objective, kl_approx, normalize_advantages
from .keywords import KeyAlignmentSet, KeywordLexicon, LexiconError, filter_key, load_lexicon
from .metrics import (
    CorpusScore,
    MetricError,
    TermDictionary,
    TermEntry,
    bleu,
    load_term_dictionary,
    sentence_bleu,
    terminology_accuracy,
)
from .pipeline import Resources, load_resources, score_batch, score_record
from .rewards import (
    ComponentScores,
    MatchPolicy,
    ParsedOutput,
    RewardBreakdown,
    RewardError,
    RewardWeights,
    combine,
    parse_output,
    reward_aao,
    reward_aaw,
    reward_bleu,
    reward_taw,
)
from .scorer import ScoreItem, ScorerError, ScorerUnavailableError
from .tokenizer import TokenSequence, from_pretokenized, register_segmenter, tokenize

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "AlignmentLink",
    "AlignmentSet",
    "ComponentScores",
    "ConfigError",
    "CorpusScore",
    "GrpoError",
    "KeyAlignmentSet",
    "KeywordLexicon",
    "LexiconError",
    "MatchPolicy",
    "MetricError",
    "ParsedOutput",
    "PharaohParseError",
    "PolicyEvalBatch",
    "Resources",
    "RewardBreakdown",
    "RewardConfig",
    "RewardError",
    "RewardWeights",
    "ScoreItem",
    "ScorerError",
    "ScorerUnavailableError",
    "TableFormatError",
    "TermDictionary",
    "TermEntry",
    "TokenSequence",
    "TranslationTable",
    "align",
    "bleu",
    "combine",
    "em_train",
    "filter_key",
    "format_pharaoh",
    "from_pretokenized",
    "grpo_objective",
    "kl_approx",
    "load_config",
    "load_lexicon",
    "load_resources",
    "load_table",
    "load_term_dictionary",
    "normalize_advantages",
    "parse_output",
    "parse_pharaoh",
    "register_segmenter",
    "reward_aao",
    "reward_aaw",
    "reward_bleu",
    "reward_taw",
    "save_table",
    "score_batch",
    "score_record",
    "sentence_bleu",
    "terminology_accuracy",
    "tokenize",
]
