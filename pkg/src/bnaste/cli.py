"""Command-line surface: ingest, stats, validate, train, extract, eval, crossval.

Exit codes: 0 success, 1 validation failure, 2 runtime failure. Every
command is deterministic given its inputs, configuration, and seed; the
configuration digest is stamped into each artifact.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import evalkit
from .config import PipelineConfig, apply_overrides, load_config, render_config
from .corpus import (
    AnnotatedReview,
    check_manifest,
    corpus_stats,
    load_manifest,
    parse_corpus,
    serialize_corpus,
    validate_corpus,
    write_corpus,
)
from .errors import AsteError, ValidationError, log_kv
from .ingest import filter_reviews, read_platform_export
from .pipeline import (
    evaluate_pipeline,
    extract_review_triplets,
    load_bundle,
    normalize_text_id,
    save_bundle,
    train_pipeline,
)


def _effective_config(args) -> PipelineConfig:
    config = load_config(getattr(args, "config", None))
    overrides = list(getattr(args, "set", None) or [])
    if overrides:
        config = apply_overrides(config, overrides)
    seed = getattr(args, "seed", None)
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    return config


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", None) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(
        json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def _corpus_path(args, config: PipelineConfig) -> Path:
    corpus = getattr(args, "corpus", None) or config.paths.corpus
    if not corpus:
        raise ValidationError("no corpus file given (positional argument or paths.corpus)")
    return Path(corpus)


def _check_digest(config: PipelineConfig, bundle_digest: str, allow_mismatch: bool) -> None:
    if config.digest() != bundle_digest and not allow_mismatch:
        raise ValidationError(
            "configuration digest does not match the bundle "
            f"({config.digest()[:12]}… vs {bundle_digest[:12]}…); "
            "pass --allow-config-mismatch to override"
        )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    config = _effective_config(args)
    column_map = {"text": args.text_column}
    if args.collected_at_column:
        column_map["collected_at"] = args.collected_at_column
    if args.category_column:
        column_map["product_category"] = args.category_column

    reviews = []
    skipped: dict[str, int] = {}
    for source in args.inputs:
        file_reviews, file_skipped = read_platform_export(source, args.platform, column_map)
        reviews.extend(file_reviews)
        for reason, count in file_skipped.items():
            skipped[reason] = skipped.get(reason, 0) + count

    kept, report = filter_reviews(reviews, config.filter_policy())
    for reason, count in skipped.items():
        report.rejected[reason] = report.rejected.get(reason, 0) + count

    out = _out_dir(args)
    corpus_file = out / "corpus.jsonl"
    write_corpus([AnnotatedReview(r) for r in kept], corpus_file)
    report_obj = report.to_dict() | {"config_digest": config.digest()}
    _write_json(out / "ingest_report.json", report_obj)
    log_kv(
        "ingest",
        inputs=len(args.inputs),
        accepted=report.accepted,
        rejected=sum(report.rejected.values()),
        duplicates_removed=report.duplicates_removed,
        corpus=corpus_file,
    )
    return 0


def _render_stats(stats) -> str:
    lines = [f"{'Platform':<12} {'Reviews':>8}", "-" * 21]
    for platform in sorted(stats.per_platform):
        lines.append(f"{platform:<12} {stats.per_platform[platform]:>8}")
    lines.append(f"{'total':<12} {stats.total_reviews:>8}")
    if stats.per_category:
        lines.append("")
        lines.append(f"{'Aspect Category':<20} {'Total':>6} {'Positive':>9} {'Negative':>9} {'Neutral':>8}")
        lines.append("-" * 55)
        for cat in sorted(stats.per_category):
            c = stats.per_category[cat]
            lines.append(f"{cat:<20} {c.total:>6} {c.positive:>9} {c.negative:>9} {c.neutral:>8}")
    return "\n".join(lines)


def cmd_stats(args) -> int:
    config = _effective_config(args)
    corpus = parse_corpus(_corpus_path(args, config))
    stats = corpus_stats(corpus)
    print(_render_stats(stats))
    out = _out_dir(args)
    _write_json(
        out / "stats.json",
        {
            "total_reviews": stats.total_reviews,
            "per_platform": dict(sorted(stats.per_platform.items())),
            "per_category": {
                cat: dataclasses.asdict(counts)
                for cat, counts in sorted(stats.per_category.items())
            },
        },
    )
    if args.manifest:
        problems = check_manifest(stats, load_manifest(args.manifest))
        if problems:
            raise ValidationError("manifest mismatch: " + "; ".join(problems))
        print(f"manifest {args.manifest}: counts match")
    return 0


def cmd_validate(args) -> int:
    config = _effective_config(args)
    corpus = parse_corpus(_corpus_path(args, config))
    problems = validate_corpus(corpus)
    for problem in problems:
        print(problem, file=sys.stderr)
    if problems:
        print(f"{len(problems)} problem(s) in {len(corpus)} record(s)", file=sys.stderr)
        return 1
    print(f"ok: {len(corpus)} record(s) pass all invariants")
    return 0


def cmd_train(args) -> int:
    config = _effective_config(args)
    corpus = parse_corpus(_corpus_path(args, config))
    model = train_pipeline(corpus, config)
    bundle_dir = Path(args.bundle or config.paths.model_bundle or (_out_dir(args) / "bundle"))
    save_bundle(model, bundle_dir)
    print(f"bundle written to {bundle_dir} (config digest {model.digest[:12]}…)")
    return 0


def cmd_extract(args) -> int:
    model = load_bundle(args.bundle)
    if args.config or args.set or args.seed is not None:
        _check_digest(_effective_config(args), model.digest, args.allow_config_mismatch)

    outputs = []
    if args.text is not None:
        if not args.text.strip():
            outputs.append({"id": "adhoc-empty", "triplets": []})
        else:
            from .corpus import Review

            review = Review(
                id=normalize_text_id(args.text), platform="other", raw_text=args.text
            )
            extracted = extract_review_triplets(model, review)
            outputs.append(
                {"id": review.id, "triplets": [e.to_dict() for e in extracted]}
            )
    else:
        if not args.corpus:
            raise ValidationError("extract needs --text or a corpus file")
        for record in parse_corpus(args.corpus):
            extracted = extract_review_triplets(model, record.review)
            outputs.append(
                {"id": record.review.id, "triplets": [e.to_dict() for e in extracted]}
            )

    lines = [json.dumps(obj, ensure_ascii=False, sort_keys=True) for obj in outputs]
    for line in lines:
        print(line)
    out = _out_dir(args)
    (out / "triplets.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_eval(args) -> int:
    model = load_bundle(args.bundle)
    if args.config or args.set or args.seed is not None:
        _check_digest(_effective_config(args), model.digest, args.allow_config_mismatch)
    corpus = parse_corpus(args.corpus)
    report = evaluate_pipeline(model, corpus)
    rendered = evalkit.render_report(report)
    print(rendered)
    out = _out_dir(args)
    evalkit.write_report(report, out / "report.json")
    (out / "report.txt").write_text(rendered + "\n", encoding="utf-8")
    return 0


def cmd_crossval(args) -> int:
    config = _effective_config(args)
    corpus = parse_corpus(_corpus_path(args, config))
    report = evalkit.cross_validate(corpus, config, k=args.k, seed=None)
    rendered = evalkit.render_report(report)
    print(rendered)
    out = _out_dir(args)
    evalkit.write_report(report, out / "crossval_report.json")
    (out / "crossval_report.txt").write_text(rendered + "\n", encoding="utf-8")
    return 0


def cmd_config_show(args) -> int:
    config = _effective_config(args)
    print(render_config(config), end="")
    print(f"# digest: {config.digest()}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML configuration file")
    parser.add_argument(
        "--set",
        action="append",
        metavar="K=V",
        help="override a config key (repeatable), e.g. --set spanex.top_k=5",
    )
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--out", help="output directory (default: current directory)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bnaste",
        description="Aspect-opinion-sentiment triplet extraction for Bangla reviews",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert platform export files into a corpus")
    p.add_argument("inputs", nargs="+", help="CSV/TSV/JSONL export files")
    p.add_argument("--platform", required=True, help="source platform tag")
    p.add_argument("--text-column", required=True, help="column holding the review text")
    p.add_argument("--collected-at-column")
    p.add_argument("--category-column")
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="corpus statistics over gold triplets")
    p.add_argument("corpus", nargs="?", help="corpus file (or paths.corpus)")
    p.add_argument("--manifest", help="sidecar manifest to verify counts against")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("validate", help="check corpus invariants")
    p.add_argument("corpus", nargs="?", help="corpus file (or paths.corpus)")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", help="train a pipeline model bundle")
    p.add_argument("corpus", nargs="?", help="adjudicated corpus file (or paths.corpus)")
    p.add_argument("--bundle", help="bundle output directory")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract", help="extract triplets with a trained bundle")
    p.add_argument("corpus", nargs="?", help="corpus file to extract from")
    p.add_argument("--bundle", required=True, help="trained bundle directory")
    p.add_argument("--text", help="extract from one ad-hoc review text")
    p.add_argument("--allow-config-mismatch", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("eval", help="evaluate a bundle against an adjudicated corpus")
    p.add_argument("corpus", help="adjudicated corpus file")
    p.add_argument("--bundle", required=True)
    p.add_argument("--allow-config-mismatch", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("crossval", help="k-fold cross-validated evaluation")
    p.add_argument("corpus", nargs="?", help="adjudicated corpus file (or paths.corpus)")
    p.add_argument("-k", type=int, help="fold count (default: eval.k)")
    _add_common(p)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("config", help="configuration utilities")
    config_sub = p.add_subparsers(dest="config_command", required=True)
    show = config_sub.add_parser("show", help="print the effective configuration")
    _add_common(show)
    show.set_defaults(func=cmd_config_show)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except AsteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
