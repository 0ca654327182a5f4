import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from termreward.align import em_train, save_table
from termreward.config import config_from_dict
from termreward.tokenizer import tokenize

TOY_CORPUS = [
    ("das haus", "the house"),
    ("das buch", "the book"),
    ("ein buch", "a book"),
]


@pytest.fixture
def make_config(tmp_path):
    """Config factory with sane record-source defaults; kwargs override keys."""

    def _make(**overrides):
        raw = {
            "version": 1,
            "recipe": "all",
            "weights": {"alpha": 1.0, "beta": 0.1, "gamma": 0.1},
            "match_policy": "exact",
            "format_mode": "strict",
            "lang_src": "en",
            "lang_tgt": "de",
            "alignment": {"source": "record"},
            "scorer": {"binding": "mock:0.8"},
        }
        raw.update(overrides)
        return config_from_dict(raw, base_dir=tmp_path)

    return _make


@pytest.fixture
def toy_table_path(tmp_path):
    pairs = [(tokenize(s, "de"), tokenize(t, "en")) for s, t in TOY_CORPUS]
    table = em_train(pairs, iterations=10)
    path = tmp_path / "toy.table"
    save_table(table, str(path))
    return path
