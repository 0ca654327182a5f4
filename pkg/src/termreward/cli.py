"""Command-line surface: aligner training, batch scoring, evaluation,
advantage checking, and the reward service launcher.

Exit codes: 0 on success (per-record scoring failures are valid results),
2 for usage/configuration errors, 1 for I/O and transport errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import nullcontext
from pathlib import Path

from .align import AlignmentError, em_train, save_table
from .config import ConfigError, load_config, resolve_config_path
from .grpo import GrpoError, normalize_advantages
from .metrics import (
    MetricError,
    bleu,
    format_report,
    load_term_dictionary,
    mean_external_scores,
    report_json,
    terminology_accuracy,
)
from .pipeline import load_resources, score_batch
from .scorer import ScorerError
from .tokenizer import from_pretokenized, tokenize

JSON_KWARGS = dict(ensure_ascii=False, separators=(",", ":"))


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _positive_int(value: str) -> int:
    try:
        parsed = int(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer") from exc
    if parsed < 1:
        raise argparse.ArgumentTypeError(f"{value!r} must be >= 1")
    return parsed


def _read_lines(path: str) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _read_jsonl(path: str) -> list:
    rows = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            rows.append({"_parse_error": f"{path}:{lineno}: {exc}"})
    return rows


def _open_out(path: str):
    if path == "-":
        return nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8")


def _load_parallel_corpus(path: str, fmt: str, lang_src: str, lang_tgt: str):
    if fmt == "auto":
        fmt = "jsonl" if path.endswith(".jsonl") else "tsv"
    pairs = []
    if fmt == "tsv":
        for lineno, line in enumerate(_read_lines(path), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CliError(f"{path}:{lineno}: expected src<TAB>tgt")
            pairs.append((tokenize(parts[0], lang_src), tokenize(parts[1], lang_tgt)))
    else:
        for lineno, row in enumerate(_read_jsonl(path), start=1):
            if not isinstance(row, dict) or "_parse_error" in row:
                detail = row.get("_parse_error", "not an object") if isinstance(row, dict) else "not an object"
                raise CliError(f"{path}: bad corpus row: {detail}")
            if "src_tokens" in row:
                src = from_pretokenized(row["src_tokens"], row.get("lang_src", lang_src))
            else:
                src = tokenize(row.get("src", ""), row.get("lang_src", lang_src))
            if "tgt_tokens" in row:
                tgt = from_pretokenized(row["tgt_tokens"], row.get("lang_tgt", lang_tgt))
            else:
                tgt = tokenize(row.get("tgt", ""), row.get("lang_tgt", lang_tgt))
            pairs.append((src, tgt))
    if not pairs:
        raise CliError(f"corpus {path} is empty")
    return pairs


def cmd_train_aligner(args: argparse.Namespace) -> int:
    pairs = _load_parallel_corpus(args.corpus, args.format, args.lang_src, args.lang_tgt)
    try:
        table = em_train(pairs, iterations=args.iterations, model=args.model)
    except AlignmentError as exc:
        raise CliError(str(exc)) from exc
    for i, ll in enumerate(table.log_likelihoods, start=1):
        print(f"iteration {i:3d}  log-likelihood {ll:.6f}")
    if table.skipped_pairs:
        print(f"skipped {table.skipped_pairs} pair(s) with an empty side", file=sys.stderr)
    try:
        save_table(table, args.out)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}") from exc
    print(f"wrote {args.out} ({len(table.probs)} source rows, model {table.model})")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    try:
        config = load_config(resolve_config_path(args.config))
        resources = load_resources(config)
    except (ConfigError, ValueError) as exc:
        raise CliError(str(exc), code=2) from exc
    except OSError as exc:
        raise CliError(str(exc)) from exc

    records = []
    for row in _read_jsonl(args.records):
        if isinstance(row, dict) and "_parse_error" in row:
            records.append({"_invalid": row["_parse_error"]})
        else:
            records.append(row)

    try:
        batch = score_batch(records, config, resources)
    except ScorerError as exc:
        raise CliError(f"scorer failure: {exc}") from exc

    with _open_out(args.out) as out:
        for i, result in enumerate(batch.results):
            out.write(json.dumps({"index": i, **result}, **JSON_KWARGS) + "\n")
        out.write(json.dumps({"summary": batch.summary}, **JSON_KWARGS) + "\n")
    return 0


def _eval_rows(path: str, field: str) -> tuple[list[str], dict[str, list[float]]]:
    """Sentences plus any extra numeric per-line fields (JSONL inputs only)."""
    lines = _read_lines(path)
    if not path.endswith(".jsonl"):
        return lines, {}
    sentences = []
    extras: dict[str, list[float]] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}:{lineno}: {exc}") from exc
        if not isinstance(row, dict) or field not in row:
            raise CliError(f"{path}:{lineno}: expected an object with {field!r}")
        sentences.append(row[field])
        for key, value in row.items():
            if key != field and isinstance(value, (int, float)) and not isinstance(value, bool):
                extras.setdefault(key, []).append(float(value))
    return sentences, extras


def cmd_evaluate(args: argparse.Namespace) -> int:
    hyp_lines, extras = _eval_rows(args.hyp, "hyp")
    ref_lines, _ = _eval_rows(args.ref, "ref")
    src_lines, _ = _eval_rows(args.src, "src")

    counts = {args.hyp: len(hyp_lines), args.ref: len(ref_lines), args.src: len(src_lines)}
    if len(set(counts.values())) != 1:
        shortest = min(counts, key=counts.get)
        raise CliError(
            f"line-count mismatch: {shortest} has {counts[shortest]} lines "
            f"({', '.join(f'{p}={n}' for p, n in counts.items())})",
            code=2,
        )

    hyps = [tokenize(line, args.lang_tgt) for line in hyp_lines]
    refs = [tokenize(line, args.lang_tgt) for line in ref_lines]
    srcs = [tokenize(line, args.lang_src) for line in src_lines]

    try:
        scores = [bleu(hyps, refs)]
        if args.terms:
            term_dict = load_term_dictionary(args.terms, args.lang_src, args.lang_tgt)
            scores.append(
                terminology_accuracy(
                    list(zip(srcs, hyps)), term_dict, case_fold=args.case_fold
                )
            )
        for name, values in sorted(extras.items()):
            if len(values) == len(hyps):
                scores.append(mean_external_scores(values, name, len(hyps)))
    except MetricError as exc:
        raise CliError(str(exc), code=2) from exc

    print(format_report(scores))
    if args.json:
        Path(args.json).write_text(
            json.dumps(report_json(scores), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
    return 0


def cmd_grpo_check(args: argparse.Namespace) -> int:
    rows = _read_jsonl(args.groups)
    with _open_out(args.out) as out:
        for i, row in enumerate(rows):
            entry: dict = {"index": i}
            if not isinstance(row, dict) or "_parse_error" in row:
                entry["error"] = row.get("_parse_error", "not an object") if isinstance(row, dict) else "not an object"
            else:
                if "group_id" in row:
                    entry["group_id"] = row["group_id"]
                rewards = row.get("rewards")
                if not isinstance(rewards, list):
                    entry["error"] = "missing 'rewards' list"
                else:
                    try:
                        entry["advantages"] = normalize_advantages(
                            [float(r) for r in rewards], sample_std=args.sample_std
                        )
                    except (GrpoError, TypeError, ValueError) as exc:
                        entry["error"] = str(exc)
            out.write(json.dumps(entry, **JSON_KWARGS) + "\n")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    try:
        config = load_config(resolve_config_path(args.config))
    except ConfigError as exc:
        raise CliError(str(exc), code=2) from exc
    app = create_app(config)
    app.state.service.load()
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_mock_scorer(args: argparse.Namespace) -> int:
    import uvicorn

    from .scorer import mock_scorer_app

    app = mock_scorer_app(constant=args.constant)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="termreward",
        description="Terminology-aware translation reward engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-aligner", help="EM-train a translation table")
    p.add_argument("--corpus", required=True, help="parallel corpus (TSV or JSONL)")
    p.add_argument("--format", choices=["auto", "tsv", "jsonl"], default="auto")
    p.add_argument("--iterations", type=_positive_int, required=True)
    p.add_argument("--model", choices=["ibm1", "ibm2"], default="ibm1")
    p.add_argument("--out", required=True, help="output table file")
    p.add_argument("--lang-src", default="en")
    p.add_argument("--lang-tgt", default="en")
    p.set_defaults(func=cmd_train_aligner)

    p = sub.add_parser("score", help="score a JSONL batch of records")
    p.add_argument("--records", required=True)
    p.add_argument("--config", default=None, help="falls back to $TERMREWARD_CONFIG")
    p.add_argument("--out", default="-", help="output path or - for stdout")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="corpus BLEU / terminology accuracy report")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--terms", default=None, help="term dictionary TSV")
    p.add_argument("--lang-src", default="en")
    p.add_argument("--lang-tgt", default="en")
    p.add_argument("--case-fold", action="store_true")
    p.add_argument("--json", default=None, help="also write a JSON report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grpo-check", help="normalize reward groups to advantages")
    p.add_argument("--groups", required=True, help="JSONL with a 'rewards' list per line")
    p.add_argument("--out", default="-")
    p.add_argument("--sample-std", action="store_true")
    p.set_defaults(func=cmd_grpo_check)

    p = sub.add_parser("serve", help="run the reward service")
    p.add_argument("--config", default=None, help="falls back to $TERMREWARD_CONFIG")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("mock-scorer", help="serve constant scores on the scorer protocol")
    p.add_argument("--constant", type=float, default=0.8)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8401)
    p.set_defaults(func=cmd_mock_scorer)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ScorerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
