"""Command-line pipeline: features | eval | causal | viz | taxonomy | validate.

Every command echoes its full effective configuration (defaults included,
plus grammar and taxonomy versions) into its output, exits 0 only when no
snippet failed, and drives all randomness from the user-supplied seed.
Per-snippet work can fan out over processes; results merge in corpus order,
so outputs are byte-stable regardless of worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import SCHEMA_VERSION, __version__
from .alignment import align
from .asceval import (
    AggMode,
    AggregationStatistic,
    AnnotatedTree,
    StatKind,
    cross_entropy,
    global_eval,
    snippet_scores,
)
from .causal import run_causal_suite
from .corpus import (
    CorpusError,
    SnippetRecord,
    load_corpus,
    save_corpus,
    validate,
)
from .syntax import GRAMMAR_VERSION, compute_features, parse
from .taxonomy import Taxonomy, default_taxonomy, load_taxonomy, save_taxonomy
from .viz import OutputFormat, RenderConfig, RenderMode, render

DEFAULT_TREATMENTS = (
    "for_statement",
    "while_statement",
    "identifier",
    "string",
    "]",
    ")",
    "if_statement",
    "comparison_operator",
    "boolean_operator",
    "for_in_clause",
    "if_clause",
    "lambda",
)

_WORK_STATE: dict = {}


def _resolve_taxonomy(path: str | None) -> Taxonomy:
    if path is None:
        path = os.environ.get("ASC_TAXONOMY")
    if path is None:
        return default_taxonomy()
    return load_taxonomy(path)


def _stat_from_args(args) -> AggregationStatistic:
    return AggregationStatistic(kind=StatKind(args.stat), mode=AggMode(args.agg_mode))


def _config_echo(args, taxonomy: Taxonomy, extra: dict | None = None) -> dict:
    echo = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": args.command,
        "input": str(args.input),
        "output": str(args.output) if getattr(args, "output", None) else None,
        "grammar_version": GRAMMAR_VERSION,
        "taxonomy_version": taxonomy.version,
        "stat": getattr(args, "stat", None),
        "agg_mode": getattr(args, "agg_mode", None),
        "resamples": getattr(args, "resamples", None),
        "seed": getattr(args, "seed", None),
        "pool": getattr(args, "pool", None),
        "workers": getattr(args, "workers", None),
    }
    if extra:
        echo.update(extra)
    return echo


def _init_worker(taxonomy: Taxonomy, stat: AggregationStatistic) -> None:
    _WORK_STATE["taxonomy"] = taxonomy
    _WORK_STATE["stat"] = stat


def _annotate_one(snippet: SnippetRecord) -> AnnotatedTree:
    return snippet_scores(snippet, _WORK_STATE["taxonomy"], _WORK_STATE["stat"])


def _annotate_corpus(
    corpus: list[SnippetRecord],
    taxonomy: Taxonomy,
    stat: AggregationStatistic,
    workers: int,
) -> list[AnnotatedTree]:
    """Annotate every snippet, in corpus order regardless of scheduling."""
    if workers <= 1 or len(corpus) < 2:
        _init_worker(taxonomy, stat)
        return [_annotate_one(s) for s in corpus]
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker, initargs=(taxonomy, stat)
    ) as pool:
        return list(pool.map(_annotate_one, corpus, chunksize=8))


def _ensure_output(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_features(args) -> int:
    taxonomy = _resolve_taxonomy(args.taxonomy)
    corpus = load_corpus(args.input)
    out_dir = _ensure_output(args)
    failures: list[str] = []
    enriched: list[SnippetRecord] = []
    for snippet in corpus:
        try:
            tree = parse(snippet.source)
            features = compute_features(snippet.source, tree, snippet.tokens)
            loss = snippet.loss
            if loss is None and any(t.ntp is not None for t in snippet.tokens):
                loss = cross_entropy(snippet.tokens)
            enriched.append(
                SnippetRecord(
                    id=snippet.id,
                    source=snippet.source,
                    tokens=snippet.tokens,
                    loss=loss,
                    features=features,
                    metadata=snippet.metadata,
                    extra=snippet.extra,
                )
            )
        except Exception as exc:  # noqa: BLE001 - report and keep going
            failures.append(f"{snippet.id}: {exc}")
    save_corpus(enriched, out_dir / "corpus.jsonl")
    header = _config_echo(args, taxonomy, {"snippets": len(enriched), "failures": failures})
    (out_dir / "features.json").write_text(json.dumps(header, indent=2) + "\n")
    print(json.dumps(header, indent=2))
    return 1 if failures else 0


def cmd_eval(args) -> int:
    taxonomy = _resolve_taxonomy(args.taxonomy)
    stat = _stat_from_args(args)
    corpus = load_corpus(args.input)
    if not corpus:
        print("error: empty corpus", file=sys.stderr)
        return 1
    if args.seed is None:
        print("error: --seed is required for the bootstrap", file=sys.stderr)
        return 1
    out_dir = _ensure_output(args)
    annotated = _annotate_corpus(corpus, taxonomy, stat, args.workers)
    report = global_eval(
        corpus,
        taxonomy,
        stat,
        resamples=args.resamples,
        seed=args.seed,
        pool=args.pool,
        annotated=annotated,
    )
    obj = report.to_obj()
    obj["config"] = _config_echo(args, taxonomy)
    (out_dir / "eval.json").write_text(json.dumps(obj, indent=2) + "\n")
    (out_dir / "eval.csv").write_text(report.to_csv())
    print(json.dumps(obj["config"], indent=2))
    for entry in report.entries:
        print(f"{entry.kind:8s} {entry.key:30s} {entry.score:.4f} n={entry.count} {entry.flag}")
    return 0


def cmd_causal(args) -> int:
    taxonomy = _resolve_taxonomy(args.taxonomy)
    stat = _stat_from_args(args)
    corpus = load_corpus(args.input)
    if not corpus:
        print("error: empty corpus", file=sys.stderr)
        return 1
    out_dir = _ensure_output(args)
    treatments = (
        [t for t in args.treatments.split(",") if t]
        if args.treatments
        else list(DEFAULT_TREATMENTS)
    )
    results, warnings = run_causal_suite(corpus, taxonomy, treatments, stat)
    obj = {
        "config": _config_echo(args, taxonomy, {"treatments": treatments}),
        "results": [r.to_obj() for r in results],
        "warnings": warnings,
    }
    (out_dir / "causal.json").write_text(json.dumps(obj, indent=2) + "\n")
    lines = ["treatment,pearson_rho,ate,n,dropped," + ",".join(
        f"rho_{c}" for c in (results[0].confounders if results else ())
    )]
    for r in results:
        rho = "" if r.pearson_rho is None else f"{r.pearson_rho:.6f}"
        confs = ",".join(f"{r.confounder_correlations[c]:.6f}" for c in r.confounders)
        lines.append(f"{r.treatment},{rho},{r.ate:.6f},{r.n},{r.dropped},{confs}")
    (out_dir / "causal.csv").write_text("\n".join(lines) + "\n")
    print(json.dumps(obj["config"], indent=2))
    for r in results:
        rho = "n/a" if r.pearson_rho is None else f"{r.pearson_rho:+.3f}"
        print(f"{r.treatment:24s} rho={rho} ate={r.ate:+.4f} n={r.n}")
    for w in warnings:
        print(f"warning: {w}")
    return 0


def cmd_viz(args) -> int:
    taxonomy = _resolve_taxonomy(args.taxonomy)
    stat = _stat_from_args(args)
    corpus = load_corpus(args.input)
    out_dir = _ensure_output(args)
    modes = [RenderMode(m) for m in args.render.split(",") if m]
    fmt = OutputFormat(args.format)
    manifest = {
        "config": _config_echo(args, taxonomy, {"render": [m.value for m in modes],
                                                "format": fmt.value}),
        "outputs": [],
        "failures": [],
    }
    for snippet in corpus:
        try:
            annotated = snippet_scores(snippet, taxonomy, stat)
            for mode in modes:
                config = RenderConfig(mode=mode, fmt=fmt, precision=args.precision)
                name = f"{snippet.id}.{mode.value}.{fmt.value}"
                (out_dir / name).write_bytes(render(annotated, snippet.tokens, config))
                manifest["outputs"].append(name)
            if args.dump_alignment:
                alignment = align(parse(snippet.source), snippet.tokens)
                name = f"{snippet.id}.alignment.json"
                (out_dir / name).write_text(
                    json.dumps(alignment.to_obj(), indent=2) + "\n"
                )
                manifest["outputs"].append(name)
        except Exception as exc:  # noqa: BLE001 - collect, keep rendering
            manifest["failures"].append(f"{snippet.id}: {exc}")
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(json.dumps(manifest["config"], indent=2))
    print(f"wrote {len(manifest['outputs'])} files to {out_dir}")
    for failure in manifest["failures"]:
        print(f"error: {failure}", file=sys.stderr)
    return 1 if manifest["failures"] else 0


def cmd_taxonomy(args) -> int:
    taxonomy = _resolve_taxonomy(args.taxonomy)
    if args.action == "export":
        out = Path(args.output)
        if out.is_dir():
            out = out / "taxonomy.json"
        save_taxonomy(taxonomy, out)
        print(f"wrote {out} (version {taxonomy.version}, {len(taxonomy.mapping)} node types)")
        return 0
    print(f"taxonomy version {taxonomy.version}: {len(taxonomy.mapping)} node types")
    return 0


def cmd_validate(args) -> int:
    try:
        corpus = load_corpus(args.input)
    except CorpusError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    bad = 0
    for snippet in corpus:
        for violation in validate(snippet):
            print(str(violation), file=sys.stderr)
            bad += 1
    print(f"{len(corpus)} records, {bad} violations")
    return 1 if bad else 0


def _add_common(p: argparse.ArgumentParser, *, output: bool = True) -> None:
    p.add_argument("--input", required=True, help="corpus JSONL file")
    if output:
        p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--taxonomy", default=None,
                   help="taxonomy config (default: built-in or $ASC_TAXONOMY)")
    p.add_argument("--stat", choices=[s.value for s in StatKind], default="median")
    p.add_argument("--agg-mode", choices=[m.value for m in AggMode], default="token")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asctk",
        description="Score and explain language-model predictions on syntax trees",
    )
    parser.add_argument("--version", action="version", version=f"asctk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="compute code features and loss per snippet")
    _add_common(p)

    p = sub.add_parser("eval", help="corpus-level concept scores (bootstrapped)")
    _add_common(p)
    p.add_argument("--resamples", type=int, default=500)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pool", choices=["node", "snippet"], default="node")

    p = sub.add_parser("causal", help="correlations and treatment effects on loss")
    _add_common(p)
    p.add_argument("--treatments", default=None, help="comma-separated node types/categories")

    p = sub.add_parser("viz", help="render annotated trees per snippet")
    _add_common(p)
    p.add_argument("--render", default="partial,complete,sequence",
                   help="comma-separated modes")
    p.add_argument("--format", choices=[f.value for f in OutputFormat], default="dot")
    p.add_argument("--precision", type=int, default=2)
    p.add_argument("--dump-alignment", action="store_true",
                   help="also write <id>.alignment.json (node id -> token indices)")

    p = sub.add_parser("taxonomy", help="inspect or export the taxonomy")
    p.add_argument("action", choices=["show", "export"])
    p.add_argument("--taxonomy", default=None)
    p.add_argument("--output", default=".")

    p = sub.add_parser("validate", help="validate a corpus file")
    p.add_argument("--input", required=True)

    return parser


_COMMANDS = {
    "features": cmd_features,
    "eval": cmd_eval,
    "causal": cmd_causal,
    "viz": cmd_viz,
    "taxonomy": cmd_taxonomy,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
