#!/usr/bin/env python3
"""Fit the shipped lexical quality model and write data/weights.json.

Trains a logistic regressor on synthetic positive/negative hypothesis pairs
built from a fixed seed, so the resulting weights are reproducible. Run from
the package root:

    python scripts/train_model.py
"""

import json
import math
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from comet_bridge.model import DEFAULT_MODEL_ID, FEATURE_NAMES, WEIGHTS_VERSION, extract_features

VOCAB = (
    "the cat dog house tree server network user database backup system "
    "runs sleeps crashed restarted quickly slowly green blue old new "
    "der die das Katze Hund Haus Baum läuft schläft schnell langsam"
).split()

SEED = 13
EPOCHS = 3000
LEARNING_RATE = 0.4


def sentence(rng, low=3, high=10):
    return " ".join(rng.choice(VOCAB) for _ in range(rng.randint(low, high)))


def perturb(rng, text):
    tokens = text.split()
    op = rng.random()
    if op < 0.4 and len(tokens) > 3:
        tokens.pop(rng.randrange(len(tokens)))
    elif op < 0.7 and len(tokens) > 2:
        i, j = rng.sample(range(len(tokens)), 2)
        tokens[i], tokens[j] = tokens[j], tokens[i]
    else:
        tokens.insert(rng.randrange(len(tokens) + 1), rng.choice(VOCAB))
    return " ".join(tokens)


def build_examples(rng):
    examples = []
    for _ in range(400):
        src = sentence(rng)
        ref = sentence(rng)
        # exact and near duplicates are good hypotheses
        examples.append((extract_features(src, ref, ref), 1.0))
        examples.append((extract_features(src, ref, perturb(rng, ref)), 1.0))
        # unrelated or empty hypotheses are bad ones
        examples.append((extract_features(src, ref, sentence(rng)), 0.0))
        examples.append((extract_features(src, ref, ""), 0.0))
    return examples


def train(examples):
    bias = 0.0
    weights = [0.0] * len(FEATURE_NAMES)
    n = len(examples)
    for _ in range(EPOCHS):
        grad_b = 0.0
        grad_w = [0.0] * len(weights)
        for features, label in examples:
            z = bias + sum(w * f for w, f in zip(weights, features))
            prob = 1.0 / (1.0 + math.exp(-z))
            delta = prob - label
            grad_b += delta
            for k, f in enumerate(features):
                grad_w[k] += delta * f
        bias -= LEARNING_RATE * grad_b / n
        for k in range(len(weights)):
            weights[k] -= LEARNING_RATE * grad_w[k] / n
    return bias, weights


def main():
    rng = random.Random(SEED)
    examples = build_examples(rng)
    bias, weights = train(examples)

    def score(features):
        z = bias + sum(w * f for w, f in zip(weights, features))
        return 1.0 / (1.0 + math.exp(-z))

    identical = score([1.0, 1.0, 1.0, 1.0])
    empty = score(extract_features("the cat", "die Katze", ""))
    print(f"bias={bias:.6f} weights={[round(w, 6) for w in weights]}")
    print(f"score(identical)={identical:.4f} score(empty hyp)={empty:.4f}")

    out = Path(__file__).resolve().parent.parent / "src" / "comet_bridge" / "data" / "weights.json"
    out.write_text(
        json.dumps(
            {
                "version": WEIGHTS_VERSION,
                "model_id": DEFAULT_MODEL_ID,
                "features": list(FEATURE_NAMES),
                "bias": bias,
                "weights": weights,
                "training": {"seed": SEED, "examples": len(examples), "epochs": EPOCHS},
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
