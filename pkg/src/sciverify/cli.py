"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
Data goes to ``--out`` or stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from . import __version__, DATA_FORMAT_VERSION
from .core import DataError, validate
from .corpus_builder import assemble_corpus, load_graph, load_seed_ids, write_manifest
from .io import (
    load_claims,
    load_corpus,
    load_label_probs,
    load_predictions,
    load_sentence_scores,
    open_text,
    prediction_rows,
    write_corpus,
    write_predictions,
)
from .metrics import (
    CAP_MODES,
    dataset_stats,
    evaluate_abstract_level,
    evaluate_sentence_level,
)
from .pipeline import (
    PipelineConfig,
    PipelineError,
    ablation_grid,
    ablation_json,
    ablation_tsv,
    run_pipeline,
)
from .retrieval import FIELD_MODES, build_index, load_index, retrieve_many, save_index
from .stages import ScoreTable, StageSpecError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

log = logging.getLogger("sciverify")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ngrams(text: str) -> tuple[int, int]:
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH, got {text!r}") from None
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or not 1 <= parts[0] <= parts[1] <= 2:
        raise argparse.ArgumentTypeError("n-gram range must be LOW,HIGH with 1<=LOW<=HIGH<=2")
    return parts[0], parts[1]


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("tsv", "json"), default="tsv")
    common.add_argument("--threads", type=_positive, default=1)
    common.add_argument("--seed", type=_nonneg, default=0)

    retrieval_opts = argparse.ArgumentParser(add_help=False)
    retrieval_opts.add_argument("--ngrams", type=_ngrams, default=(1, 2),
                                help="n-gram range LOW,HIGH (default 1,2)")
    retrieval_opts.add_argument("--fields", choices=FIELD_MODES, default="title+abstract")
    retrieval_opts.add_argument("--index", help="load a saved TF-IDF index instead of building one")

    stage_opts = argparse.ArgumentParser(add_help=False)
    stage_opts.add_argument("--retrieval", default="tfidf:3", help="tfidf:<k> or oracle")
    stage_opts.add_argument("--selector", default="tfidf-topk:3",
                            help="oracle, threshold:<t>, topk:<k>, tfidf-topk:<k>, "
                                 "tfidf-threshold:<t>, first, last, external:<scorefile>")
    stage_opts.add_argument("--labeler", default="always:SUPPORTS",
                            help="oracle, external:<probfile>, always:<LABEL>")
    stage_opts.add_argument("--scores", help="sentence score file for threshold:/topk: selectors")

    parser = _Parser(prog="sciverify", description="Scientific claim verification harness.")
    parser.add_argument("--version", action="version",
                        version=f"sciverify {__version__} (data format {DATA_FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check dataset invariants")
    p.add_argument("--corpus", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--out")

    p = sub.add_parser("retrieve", parents=[common, retrieval_opts], help="TF-IDF retrieval")
    p.add_argument("--corpus", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--k", type=_positive, default=3)
    p.add_argument("--save-index")
    p.add_argument("--out")

    p = sub.add_parser("run", parents=[common, retrieval_opts, stage_opts],
                       help="run the verification pipeline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--claims", required=True)
    p.add_argument("--gold", help="claims file with gold evidence (needed by oracle stages)")
    p.add_argument("--out")

    p = sub.add_parser("ablate", parents=[common, retrieval_opts, stage_opts],
                       help="oracle ablation table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--claims", help="claims file (defaults to --gold)")
    p.add_argument("--cap", type=_positive, default=3)
    p.add_argument("--cap-mode", choices=CAP_MODES, default="strict")
    p.add_argument("--out")

    p = sub.add_parser("evaluate", parents=[common], help="score predictions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--preds", required=True)
    p.add_argument("--cap", type=_positive, default=3)
    p.add_argument("--cap-mode", choices=CAP_MODES, default="strict")
    p.add_argument("--level", choices=("abstract", "sentence", "both"), default="both")
    p.add_argument("--out")

    p = sub.add_parser("stats", parents=[common], help="dataset statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--claims", required=True, action="append",
                   help="[NAME=]PATH; repeat once per split")
    p.add_argument("--out")

    p = sub.add_parser("build-corpus", parents=[common], help="assemble a corpus with distractors")
    p.add_argument("--graph", required=True)
    p.add_argument("--abstracts", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--n-distractors", type=_nonneg, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", required=True)

    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open_text(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _index_for(args, corpus):
    if getattr(args, "index", None):
        return load_index(args.index)
    return build_index(corpus, args.ngrams, args.fields)


# -- subcommands ---------------------------------------------------------------

def cmd_validate(args) -> int:
    corpus = load_corpus(args.corpus)
    claims, gold = load_claims(args.claims, corpus, strict=False)
    report = validate(corpus, claims, gold)
    if args.format == "json":
        text = _dumps({
            "errors": len(report.errors),
            "warnings": len(report.warnings),
            "issues": [
                {"severity": i.severity, "message": i.message, "claim_id": i.claim_id,
                 "doc_id": i.doc_id, "sentence": i.sentence}
                for i in report.issues
            ],
        })
    else:
        text = "".join(i.render() + "\n" for i in report.issues)
    _emit(text, args.out)
    print(f"{len(report.errors)} errors, {len(report.warnings)} warnings", file=sys.stderr)
    return EXIT_DATA if report.errors else EXIT_OK


def cmd_retrieve(args) -> int:
    corpus = load_corpus(args.corpus)
    claims, _ = load_claims(args.claims, corpus, strict=False)
    index = _index_for(args, corpus)
    if args.save_index:
        save_index(index, args.save_index)
    claims = sorted(claims, key=lambda c: c.id)
    results = retrieve_many(index, [c.text for c in claims], args.k, args.threads)
    lines = []
    if args.format == "json":
        for claim, ranked in zip(claims, results):
            lines.append(json.dumps({
                "claim_id": claim.id,
                "doc_ids": [d for d, _ in ranked],
                "scores": [s for _, s in ranked],
            }))
    else:
        lines.append("claim_id\trank\tdoc_id\tscore")
        for claim, ranked in zip(claims, results):
            for rank, (doc_id, score) in enumerate(ranked, start=1):
                lines.append(f"{claim.id}\t{rank}\t{doc_id}\t{score:.6f}")
    _emit("".join(line + "\n" for line in lines), args.out)
    return EXIT_OK


def _stage_inputs(args, corpus) -> dict:
    return {
        "scores": ScoreTable(load_sentence_scores(args.scores, corpus)) if args.scores else None,
        "score_loader": lambda path: load_sentence_scores(path, corpus),
        "probs_loader": load_label_probs,
    }


def _config(args) -> PipelineConfig:
    return PipelineConfig(
        retrieval=args.retrieval,
        selector=args.selector,
        labeler=args.labeler,
        seed=args.seed,
        ngram_range=args.ngrams,
        field_mode=args.fields,
    )


def cmd_run(args) -> int:
    config = _config(args)
    if config.uses_oracle and not args.gold:
        raise UsageError("oracle stages require --gold")
    corpus = load_corpus(args.corpus)
    claims, _ = load_claims(args.claims, corpus, strict=False)
    gold = load_claims(args.gold, corpus)[1] if args.gold else None
    index = _index_for(args, corpus) if (args.index or config.retrieval_k is not None) else None
    preds = run_pipeline(corpus, claims, gold, config, index=index, threads=args.threads,
                         **_stage_inputs(args, corpus))
    if args.out:
        write_predictions(preds, args.out)
    else:
        for row in prediction_rows(preds):
            sys.stdout.write(json.dumps(row, ensure_ascii=False) + "\n")
    return EXIT_OK


def cmd_ablate(args) -> int:
    config = _config(args)
    corpus = load_corpus(args.corpus)
    _, gold = load_claims(args.gold, corpus)
    claims = load_claims(args.claims or args.gold, corpus, strict=False)[0]
    rows = ablation_grid(corpus, claims, gold, config, cap=args.cap, cap_mode=args.cap_mode,
                         index=_index_for(args, corpus), threads=args.threads,
                         **_stage_inputs(args, corpus))
    text = _dumps(ablation_json(rows)) if args.format == "json" else ablation_tsv(rows)
    _emit(text, args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    corpus = load_corpus(args.corpus)
    _, gold = load_claims(args.gold, corpus)
    preds = load_predictions(args.preds, corpus)
    reports = []
    if args.level in ("sentence", "both"):
        reports.append(evaluate_sentence_level(gold, preds, corpus))
    if args.level in ("abstract", "both"):
        reports.append(evaluate_abstract_level(gold, preds, corpus, args.cap, args.cap_mode))
    if args.format == "json":
        text = _dumps({r.level: r.to_json() for r in reports})
    else:
        lines = ["level\tP\tR\tF1"]
        lines += ["\t".join((r.level, *r.percentages())) for r in reports]
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _split_name(spec: str) -> tuple[str, str]:
    if "=" in spec and not os.path.exists(spec):
        name, path = spec.split("=", 1)
        return name, path
    base = os.path.basename(spec)
    for suffix in (".gz", ".jsonl", ".json"):
        if base.endswith(suffix):
            base = base[: -len(suffix)]
    if base.startswith("claims_"):
        base = base[len("claims_"):]
    return base, spec


def cmd_stats(args) -> int:
    corpus = load_corpus(args.corpus)
    splits = {}
    for spec in args.claims:
        name, path = _split_name(spec)
        if name in splits:
            raise UsageError(f"split {name!r} given twice")
        splits[name] = load_claims(path, corpus)
    report = dataset_stats(corpus, splits)
    text = _dumps(report.to_json()) if args.format == "json" else report.to_tsv()
    _emit(text, args.out)
    return EXIT_OK


def cmd_build_corpus(args) -> int:
    abstracts = load_corpus(args.abstracts)
    graph = load_graph(args.graph, abstracts.doc_ids())
    for citance_id, doc_id in graph.missing_abstracts():
        log.warning("citance %d cites doc %d with no available abstract", citance_id, doc_id)
    seeds = load_seed_ids(args.seeds)
    corpus, manifest = assemble_corpus(graph, seeds, abstracts, args.n_distractors,
                                       args.seed, threads=args.threads)
    write_corpus(corpus, args.out)
    write_manifest(manifest, args.manifest)
    print(f"{len(corpus)} abstracts written", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "retrieve": cmd_retrieve,
    "run": cmd_run,
    "ablate": cmd_ablate,
    "evaluate": cmd_evaluate,
    "stats": cmd_stats,
    "build-corpus": cmd_build_corpus,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, PipelineError, StageSpecError) as e:
        print(f"sciverify {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, ValueError) as e:
        print(f"sciverify {args.command}: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
