"""Command-line entry points: itemize | train | eval | gen-corpus | serve."""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from tenq import __version__
from tenq.benchmark import BenchmarkConfig, run_benchmark
from tenq.classifiers import (
    DegenerateData,
    ModelKind,
    TooFewExamples,
    evaluate,
    load_labeled_jsonl,
    load_model,
    save_model,
    split_dataset,
    train,
)
from tenq.corpusgen import (
    PERTURB_KEYS,
    SyntheticSpec,
    generate_corpus,
    make_labeled_dataset,
    write_labeled_files,
)
from tenq.ingest import fetch_filing, select_document, strip_sgml_envelope
from tenq.pipeline import FallbackConfig, process_filing
from tenq.server import PortInUse, serve_forever
from tenq.store import write_items

CACHE_ENV = "TENQ_CACHE_DIR"


class ConfigError(Exception):
    pass


def _fallback_from_args(args: argparse.Namespace) -> FallbackConfig | None:
    mode = getattr(args, "fallback", "off")
    if mode == "off":
        return None
    model = None
    if getattr(args, "model", None):
        model = load_model(args.model)
    if mode == "classical":
        if model is None:
            raise ConfigError("--fallback classical requires --model")
        return FallbackConfig(model=model)
    if mode == "external":
        cmd = getattr(args, "backend_cmd", None)
        if not cmd:
            raise ConfigError("--fallback external requires --backend-cmd")
        return FallbackConfig(model=model, backend_command=shlex.split(cmd))
    raise ConfigError(f"unknown fallback mode: {mode}")


def _gather_inputs(input_path: Path, cache_dir: Path) -> list[tuple[str, Path | str]]:
    """Resolve the input argument to (filing_id, source) pairs.

    A directory yields its .html/.htm/.txt/.raw files; a payload file
    yields itself; any other file is read as an accession list (one per
    line) resolved through the fetch cache.
    """
    if input_path.is_dir():
        files = sorted(
            p for p in input_path.iterdir() if p.suffix in (".html", ".htm", ".txt", ".raw")
        )
        return [(p.stem, p) for p in files]
    if not input_path.exists():
        raise ConfigError(f"input does not exist: {input_path}")
    if input_path.suffix in (".html", ".htm", ".txt", ".raw"):
        return [(input_path.stem, input_path)]
    accessions = [
        line.strip() for line in input_path.read_text().splitlines() if line.strip() and not line.startswith("#")
    ]
    return [(acc, acc) for acc in accessions]


def cmd_itemize(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    if not out_dir.parent.exists():
        print(f"error: parent of output directory does not exist: {out_dir.parent}", file=sys.stderr)
        return 1
    try:
        fallback = _fallback_from_args(args)
        cache_dir = Path(args.cache or os.environ.get(CACHE_ENV, "cache"))
        inputs = _gather_inputs(Path(args.input), cache_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not inputs:
        print("error: no input filings found", file=sys.stderr)
        return 1
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(item: tuple[str, Path | str]) -> dict:
        filing_id, source = item
        try:
            if isinstance(source, Path):
                raw = source.read_bytes()
            else:
                raw = fetch_filing(source, cache_dir).payload
            body = select_document(strip_sgml_envelope(raw))
            if body is None:
                raise ValueError("no 10-Q document in envelope")
            result = process_filing(body, filing_id, budget_s=args.budget, fallback=fallback)
            if result.records and result.doc is not None:
                write_items(
                    result.doc, result.records, out_dir,
                    split_source=result.split_source, outcomes=result.outcomes,
                )
            if result.pending_candidates:
                doc_id = filing_id.replace("-", "")
                queue = [
                    {
                        "block_index": c.block_index,
                        "part": c.part,
                        "item_id": c.item_id,
                        "matched_text": c.matched_text,
                        "snippet": c.context.to_dict(),
                        "source_filing": filing_id,
                    }
                    for c in result.pending_candidates
                ]
                (out_dir / f"{doc_id}.candidates.json").write_text(
                    json.dumps(queue, indent=1) + "\n", encoding="utf-8"
                )
            return {
                "filing_id": filing_id,
                "ok": result.ok,
                "records": len(result.records),
                "fallback_used": result.fallback_used,
                "outcomes": result.outcomes,
                "error": result.error,
            }
        except Exception as exc:  # batch isolation: one filing never sinks the run
            return {"filing_id": filing_id, "ok": False, "records": 0, "error": f"{type(exc).__name__}: {exc}"}

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(one, inputs))
    else:
        rows = [one(item) for item in inputs]

    n_with_records = sum(1 for r in rows if r["records"] > 0)
    n_rule = sum(1 for r in rows if r["ok"] and not r.get("fallback_used"))
    n_fb = sum(1 for r in rows if r["ok"] and r.get("fallback_used"))
    report = {
        "n_filings": len(rows),
        "n_with_records": n_with_records,
        "rule_based_success_rate": n_rule / len(rows),
        "fallback_rate": n_fb / len(rows),
        "failures": [r for r in rows if not r["ok"]],
        "tool_version": __version__,
    }
    (out_dir / "run_report.json").write_text(json.dumps(report, indent=1) + "\n", encoding="utf-8")
    print(json.dumps({k: v for k, v in report.items() if k != "failures"}, indent=1))
    return 0 if n_with_records > 0 else 2


def cmd_train(args: argparse.Namespace) -> int:
    try:
        data = load_labeled_jsonl(args.labels)
        kind = ModelKind(args.kind)
        train_set, val_set, test_set = split_dataset(data, args.seed)
        model = train(train_set, kind, args.seed)
    except (DegenerateData, TooFewExamples, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    save_model(model, args.model_out)
    for name, subset in (("validation", val_set), ("test", test_set)):
        if not subset:
            continue
        m = evaluate(model, subset)
        vals = m.rounded()
        print(
            f"{name}: accuracy={vals['accuracy']:.4f} precision={vals['precision']:.4f} "
            f"recall={vals['recall']:.4f} f1={vals['f1']:.4f} (n={len(subset)})"
        )
    print(f"model written to {args.model_out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        fallback = _fallback_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    config = BenchmarkConfig(
        fallback=fallback,
        budget_s=args.budget,
        workers=args.workers,
        out_dir=Path(args.work_dir) if args.work_dir else None,
    )
    report, details = run_benchmark(args.corpus, config)
    payload = {
        "coverage": report.to_dict(),
        "timing_median_s": details["timing_median_s"],
        "timing_p95_s": details["timing_p95_s"],
        "n_failed": details["n_failed"],
        "correct_total": details["correct_total"],
        "expected_total": details["expected_total"],
    }
    print(json.dumps(payload, indent=1))
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return 0


def _parse_perturb(pairs: list[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--perturb expects key=prob, got {pair!r}")
        key, _, val = pair.partition("=")
        if key not in PERTURB_KEYS:
            raise ConfigError(f"unknown perturbation {key!r} (known: {', '.join(PERTURB_KEYS)})")
        out[key] = float(val)
    return out


def cmd_gen_corpus(args: argparse.Namespace) -> int:
    try:
        perturb = _parse_perturb(args.perturb or [])
        lo, _, hi = args.paragraphs.partition(",")
        spec = SyntheticSpec(
            seed=args.seed,
            n_filings=args.n,
            perturb=perturb,
            paragraphs_per_item=(int(lo), int(hi)),
        )
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.n > 0:
        entries = generate_corpus(spec, args.out)
        print(f"wrote {len(entries)} filings to {args.out}")
    if args.labels_out:
        pairs = make_labeled_dataset(args.seed, args.labels_pos, args.labels_neg, hard=args.labels_hard)
        write_labeled_files(pairs, args.labels_out, args.snippets_out)
        where = f" and snippets to {args.snippets_out}" if args.snippets_out else ""
        print(f"wrote {len(pairs)} labeled examples to {args.labels_out}{where}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        serve_forever(args.out_dir, args.port, args.ui_dir)
    except (PortInUse, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tenq", description="10-Q itemization pipeline")
    parser.add_argument("--version", action="version", version=f"tenq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("itemize", help="run the pipeline over filings")
    p.add_argument("--input", required=True, help="corpus dir, payload file, or accession list file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cache", default=None, help=f"fetch cache dir (or ${CACHE_ENV})")
    p.add_argument("--fallback", choices=("off", "classical", "external"), default="off")
    p.add_argument("--model", default=None, help="trained model file for the classical fallback")
    p.add_argument("--backend-cmd", default=None, help="external backend command line")
    p.add_argument("--budget", type=float, default=5.0, help="per-filing partition budget (s)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_itemize)

    p = sub.add_parser("train", help="train a title classifier")
    p.add_argument("--labels", required=True, help="labeled examples JSONL")
    p.add_argument("--kind", required=True, choices=[k.value for k in ModelKind])
    p.add_argument("--model-out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="benchmark the pipeline against a ground-truth corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.add_argument("--work-dir", default=None, help="where benchmark item files go")
    p.add_argument("--fallback", choices=("off", "classical", "external"), default="off")
    p.add_argument("--model", default=None)
    p.add_argument("--backend-cmd", default=None)
    p.add_argument("--budget", type=float, default=5.0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-corpus", help="generate a synthetic ground-truth corpus")
    p.add_argument("--out", default="corpus", help="corpus directory")
    p.add_argument("--n", type=int, default=0, help="number of filings")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--perturb", action="append", metavar="KEY=PROB")
    p.add_argument("--paragraphs", default="2,4", help="min,max paragraphs per item")
    p.add_argument("--labels-out", default=None, help="also write labeled examples JSONL")
    p.add_argument("--snippets-out", default=None, help="also write context snippets JSONL")
    p.add_argument("--labels-pos", type=int, default=450)
    p.add_argument("--labels-neg", type=int, default=550)
    p.add_argument("--labels-hard", action="store_true", help="challenging-set flavor")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("serve", help="HTTP service for the review interface")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--port", type=int, default=8640)
    p.add_argument("--ui-dir", default=None, help="serve this static UI bundle at /")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
