"""``redactkit`` command line: redact, stats, sample, curve, score, impact, validate.

Exit codes: 0 success, 1 validation/data failure (diagnostics on stderr),
2 usage error. Artifacts are written to a temp file and renamed into place.
Settings come from defaults < ``--config`` file < flags.
"""

from __future__ import annotations

import argparse
import csv
import functools
import json
import logging
import multiprocessing
import os
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Iterator

from redactkit import evalkit, sample, stats
from redactkit.core import (
    CorpusFormatError,
    Document,
    QARecord,
    dumps_record,
    iter_jsonl,
    load_raw_annotations,
    parse_record,
    read_corpus,
    validate_corpus,
    record_violation,
)
from redactkit.recognize import AnnotationError, RecognizerConfig, annotate, load_toml
from redactkit.redact import AnswerRedacted, adjust_qa_record, build_policy, load_policy, redact_document

log = logging.getLogger("redactkit")

NO_REDACTION = build_policy("none")
SUBCOMMANDS = ("redact", "stats", "sample", "curve", "score", "impact", "validate")


class DataError(Exception):
    """Bad input data; reported on stderr with exit code 1."""


class UsageError(Exception):
    """Conflicting or missing flags; exit code 2."""


@contextmanager
def atomic_writer(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_atomic(path, text: str) -> None:
    with atomic_writer(path) as fh:
        fh.write(text)


# --- shared option groups -------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON file with defaults for this subcommand")
    p.add_argument("--dry-run", action="store_true", help="print the resolved configuration and exit")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_policy(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", default="full", help="full | limited | none")
    p.add_argument("--labels", help="comma-separated labels for --policy limited")
    p.add_argument("--policy-file", help="JSON/TOML policy file (mode, labels, tokens)")


def _add_recognizer(p: argparse.ArgumentParser) -> None:
    p.add_argument("--recognizer-config", help="JSON/TOML with enabled_patterns, label_priority")
    p.add_argument("--no-patterns", action="store_true", help="use external annotations only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="redactkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("redact", help="substitute placeholders for PII spans")
    _add_common(p)
    _add_policy(p)
    _add_recognizer(p)
    p.add_argument("--input", required=True)
    p.add_argument("--annotations")
    p.add_argument("--format", choices=("plain", "qa"), default="plain")
    p.add_argument("--output", required=True)
    p.add_argument("--emit-map", action="store_true", help="include offset_map and applied arrays")
    p.add_argument("--split", choices=("eval", "train"), default="eval",
                   help="train drops records whose answer was redacted; eval keeps them unanswerable")
    p.add_argument("--plan", help="plan JSONL from `sample`: redact only 'redact' ids / emit only 'keep' ids")
    p.set_defaults(func=cmd_redact)

    p = sub.add_parser("stats", help="redaction statistics and inclusion decision")
    _add_common(p)
    _add_policy(p)
    _add_recognizer(p)
    p.add_argument("--input", required=True)
    p.add_argument("--annotations")
    p.add_argument("--format", choices=("plain", "qa"), default="plain")
    p.add_argument("--output", help="JSON report path (stdout if omitted)")
    p.add_argument("--csv", help="also write per-record scores as CSV")
    p.add_argument("--score", choices=("count", "coverage"), default="count")
    p.add_argument("--threshold", type=float, default=stats.DEFAULT_DOMINANCE_THRESHOLD)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sample", help="progressive-redaction or repair plans")
    _add_common(p)
    p.add_argument("--scores", required=True, help="stats JSON report or id,score CSV")
    p.add_argument("--fraction", type=float, help="fraction of records to redact")
    p.add_argument("--keep-fraction", type=float, help="fraction of records to keep (repair)")
    p.add_argument("--strategy", required=True, help="random | content-low | content-high | content")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", "--output", dest="output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("curve", help="merge (fraction, score, strategy) points into CSV")
    _add_common(p)
    p.add_argument("--points", nargs="+", required=True,
                   help="JSONL files of {fraction, score[, strategy]}; strategy defaults to the file stem")
    p.add_argument("--output", help="CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("score", help="score a prediction file against a gold corpus")
    _add_common(p)
    p.add_argument("--gold", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--format", choices=("plain", "qa"), default="qa")
    p.add_argument("--metric", choices=("accuracy", "f1"))
    p.add_argument("--label-key", default="label", help="meta key holding the gold label (plain format)")
    p.add_argument("--output")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("impact", help="relative impact of redaction and severity class")
    _add_common(p)
    p.add_argument("--none", type=float, help="score on original data")
    p.add_argument("--redact", type=float, help="score on redacted data")
    p.add_argument("--dataset", default="dataset")
    p.add_argument("--model", default="model")
    p.add_argument("--scores", help="JSON {dataset, models: {name: {none, redact}}, pairings?}")
    p.add_argument("--output")
    p.set_defaults(func=cmd_impact)

    p = sub.add_parser("validate", help="check a corpus (and annotations) against the data model")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("plain", "qa"), default="plain")
    p.add_argument("--annotations")
    p.set_defaults(func=cmd_validate)
    return parser


def _load_config(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    obj = load_toml(path) if path.suffix == ".toml" else json.loads(path.read_text(encoding="utf-8"))
    return obj


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _load_config(args.config)
    if cfg:
        section = cfg.get(args.command, {})
        flat = {k: v for k, v in cfg.items() if k not in SUBCOMMANDS}
        flat.update(section)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in flat.items() if k.replace("-", "_") in known})
        args = parser.parse_args(argv)
    return args


def resolved_config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "dry_run")}


def _policy(args):
    if args.policy_file:
        return load_policy(args.policy_file)
    labels = [x for x in (args.labels or "").split(",") if x.strip()]
    if args.policy.lower() == "limited" and not labels:
        raise UsageError("--policy limited requires --labels")
    if args.policy.lower() != "limited" and labels:
        raise UsageError("--labels only applies to --policy limited")
    try:
        return build_policy(args.policy, labels)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _recognizer(args) -> RecognizerConfig:
    if args.recognizer_config:
        return RecognizerConfig.from_file(args.recognizer_config)
    return RecognizerConfig()


def _check_inputs(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).exists():
            raise DataError(f"file not found: {p}")


# --- redact ---------------------------------------------------------------


def _read_plan(path) -> tuple[set[str] | None, set[str] | None]:
    redact, keep = set(), set()
    for obj in iter_jsonl(path):
        action = obj.get("action")
        if action == "redact":
            redact.add(obj["id"])
        elif action == "keep":
            keep.add(obj["id"])
        else:
            raise DataError(f"plan line has unknown action {action!r}")
    return (redact or None), (keep or None)


def _redact_one(rec, *, raw, policy, identity, cfg, patterns, emit_map, split):
    """Redact one record; returns the output JSON line or None to drop it."""
    pol = policy
    if identity is not None and rec.id not in identity:
        pol = NO_REDACTION
    if isinstance(rec, QARecord):
        ctx = annotate(rec.context, raw.get(rec.context.id, ()), cfg, patterns)
        q = annotate(rec.question, raw.get(rec.question.id, ()), cfg, patterns)
        res = adjust_qa_record(rec, ctx, pol, q)
        if isinstance(res, AnswerRedacted) and split == "train":
            return None
        out = res.record.to_json()
        if isinstance(res, AnswerRedacted):
            out["answer_redacted"] = res.label.value
        if emit_map:
            out["offset_map"] = {"context": res.context.map.to_json(), "question": res.question.map.to_json()}
            out["applied"] = {
                "context": [a.to_json() for a in res.context.applied],
                "question": [a.to_json() for a in res.question.applied],
            }
        return dumps_record(out)
    ad = annotate(rec, raw.get(rec.id, ()), cfg, patterns)
    rd = redact_document(ad, pol)
    out = Document(rec.id, rd.text, rec.meta).to_json()
    if emit_map:
        out["offset_map"] = rd.map.to_json()
        out["applied"] = [a.to_json() for a in rd.applied]
    return dumps_record(out)


def _checked_records(path, fmt) -> Iterator:
    seen = set()
    for i, obj in enumerate(iter_jsonl(path)):
        rec = parse_record(obj, fmt)
        violation = record_violation(rec)
        if violation is None and rec.id in seen:
            violation = f"duplicate id {rec.id}"
        if violation:
            raise DataError(f"record {i} ({rec.id!r}): {violation}")
        seen.add(rec.id)
        yield rec


def _ordered_map(fn, items: Iterable, jobs: int) -> Iterator:
    if jobs <= 1:
        for x in items:
            yield fn(x)
        return
    with multiprocessing.get_context("spawn").Pool(jobs) as pool:
        yield from pool.imap(fn, items, chunksize=64)


def cmd_redact(args) -> int:
    _check_inputs(args.input, args.annotations, args.plan)
    policy = _policy(args)
    cfg = _recognizer(args)
    raw = load_raw_annotations(args.annotations) if args.annotations else {}
    identity = keep = None
    if args.plan:
        identity, keep = _read_plan(args.plan)
    fn = functools.partial(
        _redact_one, raw=raw, policy=policy, identity=identity, cfg=cfg,
        patterns=not args.no_patterns, emit_map=args.emit_map, split=args.split,
    )
    records = (r for r in _checked_records(args.input, args.format) if keep is None or r.id in keep)
    n_in = n_out = 0
    with atomic_writer(args.output) as fh:
        for line in _ordered_map(fn, records, args.jobs):
            n_in += 1
            if line is not None:
                fh.write(line + "\n")
                n_out += 1
    log.info("redacted %d records, wrote %d", n_in, n_out)
    if args.json:
        print(json.dumps({"records_in": n_in, "records_out": n_out, "output": args.output}))
    return 0


# --- stats ----------------------------------------------------------------


def _annotated_corpus(args):
    _check_inputs(args.input, args.annotations)
    cfg = _recognizer(args)
    raw = load_raw_annotations(args.annotations) if args.annotations else {}
    corpus = list(_checked_records(args.input, args.format))
    annotations = {}
    for rec in corpus:
        docs = (rec.context, rec.question) if isinstance(rec, QARecord) else (rec,)
        for d in docs:
            annotations[d.id] = annotate(d, raw.get(d.id, ()), cfg, not args.no_patterns)
    return corpus, annotations


def cmd_stats(args) -> int:
    policy = _policy(args)
    corpus, annotations = _annotated_corpus(args)
    if not corpus:
        raise DataError("empty corpus")
    cs = stats.corpus_stats(corpus, annotations, policy)
    report = stats.stats_report(cs, args.threshold, args.score)
    text = evalkit.dumps(report)
    if args.output:
        write_atomic(args.output, text)
    if args.json or not args.output:
        sys.stdout.write(text)
    if args.csv:
        write_atomic(args.csv, stats.per_record_csv(cs, args.score))
    return 0


# --- sample / curve -------------------------------------------------------


def load_scores(path) -> dict[str, float]:
    path = Path(path)
    if path.suffix == ".csv":
        with open(path, encoding="utf-8", newline="") as fh:
            return {row["id"]: float(row["score"]) for row in csv.DictReader(fh)}
    obj = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(obj, dict) and "per_record" in obj:
        return {r["id"]: r["score"] for r in obj["per_record"]}
    if isinstance(obj, dict):
        return {k: float(v) for k, v in obj.items()}
    raise DataError(f"cannot read scores from {path}")


def cmd_sample(args) -> int:
    if (args.fraction is None) == (args.keep_fraction is None):
        raise UsageError("give exactly one of --fraction (progressive) or --keep-fraction (repair)")
    repair = args.keep_fraction is not None
    frac = args.keep_fraction if repair else args.fraction
    if not 0 <= frac <= 1:
        raise UsageError("fractions must lie within [0, 1]")
    allowed = ("random", "content") if repair else ("random", "content-low", "content-high")
    if args.strategy not in allowed:
        raise UsageError(f"--strategy must be one of {', '.join(allowed)}")
    if args.strategy == "random" and args.seed is None:
        raise UsageError("--strategy random requires --seed")
    _check_inputs(args.scores)
    scores = load_scores(args.scores)
    strategy = sample.parse_strategy(args.strategy, args.seed)
    if repair:
        plan, action = sample.repair_subsample(scores, frac, strategy), "keep"
    else:
        plan, action = sample.progressive_plan(scores, frac, strategy), "redact"
    write_atomic(args.output, "".join(json.dumps({"id": rid, "action": action}) + "\n" for rid in plan.selected))
    if args.json:
        print(json.dumps({"n_selected": len(plan.selected), "n_records": len(scores), "action": action,
                          "strategy": sample.strategy_tag(strategy), "fraction": frac}))
    return 0


def cmd_curve(args) -> int:
    _check_inputs(*args.points)
    points = []
    for path in args.points:
        for obj in iter_jsonl(path):
            tag = obj.get("strategy", Path(path).stem)
            points.append((float(obj["fraction"]), float(obj["score"]), tag))
    text = sample.emit_curve(points)
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


# --- score / impact -------------------------------------------------------


def cmd_score(args) -> int:
    _check_inputs(args.gold, args.predictions)
    golds_raw = list(_checked_records(args.gold, args.format))
    metric = args.metric or ("f1" if args.format == "qa" else "accuracy")
    preds = evalkit.load_predictions(args.predictions)
    if args.format == "qa":
        golds = {r.id: [a.text for a in r.answers] for r in golds_raw}
        if metric == "accuracy":
            golds = {k: (v[0] if v else "") for k, v in golds.items()}
    else:
        try:
            golds = {r.id: (r.meta or {})[args.label_key] for r in golds_raw}
        except KeyError:
            raise DataError(f"plain gold records need meta[{args.label_key!r}]") from None
        if metric == "f1":
            golds = {k: [v] for k, v in golds.items()}
    fn = evalkit.score_token_f1 if metric == "f1" else evalkit.score_accuracy
    value = fn(preds, golds)
    report = {"metric": metric, "score": round(value, 4), "n": len(golds)}
    if args.output:
        write_atomic(args.output, evalkit.dumps(report))
    print(json.dumps(report) if args.json else f"{value:.1f}")
    return 0


def cmd_impact(args) -> int:
    if args.scores:
        if args.none is not None or args.redact is not None:
            raise UsageError("--scores cannot be combined with --none/--redact")
        _check_inputs(args.scores)
        obj = json.loads(Path(args.scores).read_text(encoding="utf-8"))
        report = evalkit.impact_report(obj.get("dataset", args.dataset), obj["models"], obj.get("pairings"))
        text = evalkit.dumps(report)
        if args.output:
            write_atomic(args.output, text)
        sys.stdout.write(text if args.json or not args.output else f"{report['severity']}\n")
        return 0
    if args.none is None or args.redact is None:
        raise UsageError("impact needs --none and --redact, or --scores")
    rec = evalkit.ImpactRecord.compute(args.dataset, args.model, args.none, args.redact)
    if args.output:
        write_atomic(args.output, evalkit.dumps(rec.to_json()))
    print(json.dumps(rec.to_json()) if args.json else f"{rec.impact_pct:.1f}")
    return 0


# --- validate -------------------------------------------------------------


def cmd_validate(args) -> int:
    _check_inputs(args.input, args.annotations)
    records = [parse_record(obj, args.format) for obj in iter_jsonl(args.input)]
    report = validate_corpus(records).to_json()
    if args.annotations:
        raw = load_raw_annotations(args.annotations)
        docs = {}
        for rec in records:
            for d in ((rec.context, rec.question) if isinstance(rec, QARecord) else (rec,)):
                docs[d.id] = d
        errs = []
        for doc_id, spans in raw.items():
            if doc_id not in docs:
                errs.append(f"annotations for unknown doc_id {doc_id}")
                continue
            try:
                annotate(docs[doc_id], spans, patterns=False)
            except AnnotationError as e:
                errs.append(str(e))
        report["annotation_errors"] = errs
    ok = report["n_violations"] == 0 and not report.get("annotation_errors")
    if args.json:
        print(json.dumps(report, ensure_ascii=False))
    else:
        print(f"{report['n_records']} records, {report['n_violations']} violations")
    for v in report["violations"]:
        print(f"record {v['index']} ({v['id']}): {v['violation']}", file=sys.stderr)
    for e in report.get("annotation_errors", ()):
        print(e, file=sys.stderr)
    return 0 if ok else 1


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    except UsageError as e:
        print(f"redactkit: error: {e}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.dry_run:
        print(json.dumps(resolved_config(args), sort_keys=True, default=str))
        return 0
    try:
        return args.func(args)
    except UsageError as e:
        print(f"redactkit {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (DataError, CorpusFormatError, AnnotationError, evalkit.ScoringError, UnicodeDecodeError, ValueError) as e:
        print(f"redactkit {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
