#!/usr/bin/env python3
"""Regenerate the golden batch-scoring fixture under tests/data/.

The records are hand-constructed so their reward components can be verified
by hand; the expected output is the frozen result of running the batch CLI
over them. Re-run this script only when an intentional behavior change
invalidates the golden output, and re-verify the spot-check values below.

Spot checks (recipe "all", weights alpha=1.0 beta=0.1 gamma=0.1, mock:0.8):
  record 0: r_aaw=1/7, r_aao=1.0, r_taw=1.0 -> r_all = 0.8 + 1/7 + 0.2
  record 1: r_aaw=0.2,  r_aao=1.0, r_taw=1.0 -> r_all = 1.2
  record 4: r_aaw=0.2,  r_aao=0.0, r_taw=0.5 -> r_all = 1.05
  records 2 and 6 violate the format -> r_all = 0
"""

import json
import sys
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"

LEXICON = ["server", "database", "user", "cat", "dog", "backup", "firewall", "network"]

RECORDS = [
    {
        "src": "the server restarted",
        "ref": "der Server startete neu",
        "output": "<think>translate server to Server</think> <answer>der Server startete neu</answer>",
        "align_ref": "0-0 1-1 2-2 2-3",
        "align_pre": "0-0 1-1 2-2 2-3",
    },
    {
        "src": "the cat chased the dog",
        "ref": "die Katze jagte den Hund",
        "output": "<think>cat Katze dog Hund</think> <answer>die Katze jagte den Hund</answer>",
        "align_ref": "0-0 1-1 2-2 3-3 4-4",
        "align_pre": "0-0 1-1 2-2 3-3 4-4",
    },
    {
        "src": "the cat sleeps",
        "ref": "die Katze schläft",
        "output": "<answer>die Katze</answer>",
    },
    {
        "src": "the database crashed",
        "ref": "die Datenbank stürzte ab",
        "output": "<think>database is Datenbank</think> <answer>die Datenbank ist abgestürzt</answer>",
        "align_ref": "0-0 1-1 2-2 2-3",
        "align_pre": "0-0 1-1 2-3",
    },
    {
        "src": "the cat saw the dog",
        "ref": "die Katze sah den Hund",
        "output": "<think>Hund dog</think> <answer>den Hund sah die Katze</answer>",
        "align_ref": "0-0 1-1 2-2 3-3 4-4",
        "align_pre": "0-3 1-4 2-2 3-0 4-1",
    },
    {
        "src": "the backup failed",
        "ref": "das Backup schlug fehl",
        "output": "<think>backup Backup</think> <answer></answer>",
        "align_ref": "0-0 1-1 2-2 2-3",
        "align_pre": "",
    },
    {
        "src": "try again later",
        "ref": "versuch es später",
        "output": "<think>a</think><answer>b</answer><answer>c</answer>",
    },
    {
        "src": "it works well",
        "ref": "es funktioniert gut",
        "output": "<think>simple</think> <answer>es funktioniert gut</answer>",
        "align_ref": "0-0 1-1 2-2",
        "align_pre": "0-0 1-1 2-2",
    },
    {
        "src": "the user opened the firewall",
        "ref": "der Benutzer öffnete die Firewall",
        "output": "<think>user Benutzer firewall</think> <answer>der Benutzer öffnete die Mauer</answer>",
        "align_ref": "0-0 1-1 2-2 3-3 4-4",
        "align_pre": "0-0 1-1 2-2 3-3 4-4",
    },
    {
        "src": "the network and the server",
        "ref": "das Netzwerk und der Server",
        "output": "<think>network Netzwerk server Server</think> <answer>das Netzwerk und der Server</answer>",
        "align_ref": "0-0 1-1 2-2 3-3 4-4",
        "align_pre": "0-0 1-1 2-2 3-3 4-4",
    },
]

CONFIG = {
    "version": 1,
    "recipe": "all",
    "weights": {"alpha": 1.0, "beta": 0.1, "gamma": 0.1},
    "match_policy": "exact",
    "format_mode": "strict",
    "lang_src": "en",
    "lang_tgt": "de",
    "alignment": {"source": "record"},
    "lexicon": {"path": "golden_lexicon.txt", "case_fold": False},
    "scorer": {"binding": "mock:0.8"},
}


def main() -> int:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    (DATA_DIR / "golden_lexicon.txt").write_text(
        "\n".join(LEXICON) + "\n", encoding="utf-8"
    )
    (DATA_DIR / "golden_records.jsonl").write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in RECORDS),
        encoding="utf-8",
    )
    (DATA_DIR / "golden_config.json").write_text(
        json.dumps(CONFIG, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )

    from termreward.cli import main as cli_main

    out_path = DATA_DIR / "golden_expected.jsonl"
    code = cli_main(
        [
            "score",
            "--records", str(DATA_DIR / "golden_records.jsonl"),
            "--config", str(DATA_DIR / "golden_config.json"),
            "--out", str(out_path),
        ]
    )
    if code != 0:
        print(f"score failed with exit code {code}", file=sys.stderr)
        return code
    print(f"wrote {out_path}")
    for line in out_path.read_text(encoding="utf-8").splitlines():
        row = json.loads(line)
        if "r_all" in row:
            print(f"  record {row['index']}: r_all={row['r_all']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
