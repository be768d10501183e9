"""Command-line surface wiring corpus files into the evaluation library.

Subcommands: partition, gen-subtopics, validate, generate, evaluate,
report, and the audit group (sample, serve, report). A judge comes from
either ``--mock-fixtures`` (a JSON fixture file, hermetic) or
``--judge-endpoint`` plus the JUDGE_API_KEY environment variable; an
embedder from ``--embeddings`` (precomputed store), ``--embed-endpoint``
with EMBED_API_KEY, or ``--mock-embedder``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audit import AuditStore, audit_report, audit_sample
from .corpus import (
    DEFAULT_MAX_GRADE,
    load_embeddings,
    load_passages,
    load_qrels,
    load_queries,
    load_responses,
    partition_categories,
)
from .geneval import (
    PerQueryScore,
    ScoreSet,
    build_report,
    generate_responses,
    report_to_csv,
    report_to_json,
    score_embedding_vs_best,
    score_preference_vs_exemplar,
    score_responses_pointwise,
)
from .judge import (
    HttpEmbeddingBackend,
    HttpJudgeBackend,
    Judge,
    JudgmentLog,
    MockEmbeddingBackend,
    MockJudgeBackend,
    StoreEmbeddingBackend,
)
from .methods import SubtopicStore, generate_subtopics
from .validation import run_validation

POINTWISE = ("binary", "graded", "subtopic")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--qrels", help="TREC qrels file")
    parser.add_argument("--queries", help="TSV file of query_id<TAB>text")
    parser.add_argument("--responses", help="JSON Lines generated responses")
    parser.add_argument("--passages", help="JSON Lines {id, text} passage texts")
    parser.add_argument("--embeddings", help="JSON Lines {id, vector} store")
    parser.add_argument("--model", default="gpt-4", help="judge model id")
    parser.add_argument("--max-grade", type=int, default=DEFAULT_MAX_GRADE)
    parser.add_argument("--cache-dir", help="directory for the judgment log")
    parser.add_argument("--mock-fixtures", help="JSON fixture file for a mock judge")
    parser.add_argument("--judge-endpoint", help="chat-completion endpoint URL")
    parser.add_argument("--embed-endpoint", help="embedding endpoint URL")
    parser.add_argument("--embed-model", default="text-embedding", help="embedder model id")
    parser.add_argument(
        "--mock-embedder",
        type=int,
        metavar="DIM",
        help="use a deterministic hash embedder of this dimension",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="output file (default: stdout)")


def _judgment_log(args) -> JudgmentLog:
    if args.cache_dir:
        return JudgmentLog(Path(args.cache_dir) / "judgments.jsonl")
    return JudgmentLog()


def _judge(args) -> Judge:
    if args.mock_fixtures:
        backend = MockJudgeBackend.from_file(args.mock_fixtures)
    elif args.judge_endpoint:
        backend = HttpJudgeBackend(args.judge_endpoint)
    else:
        raise SystemExit("need --mock-fixtures or --judge-endpoint to build a judge")
    return Judge(
        backend, model_id=args.model, log=_judgment_log(args), max_grade=args.max_grade
    )


def _embedder(args):
    if args.embeddings:
        return StoreEmbeddingBackend(load_embeddings(args.embeddings))
    if args.mock_embedder:
        return MockEmbeddingBackend(dim=args.mock_embedder)
    if args.embed_endpoint:
        return HttpEmbeddingBackend(args.embed_endpoint, model_id=args.embed_model)
    raise SystemExit("need --embeddings, --mock-embedder or --embed-endpoint")


def _load_corpus(args, need_passages: bool = False):
    if not args.qrels:
        raise SystemExit("--qrels is required")
    passages = load_passages(args.passages) if args.passages else None
    if need_passages and passages is None:
        raise SystemExit("--passages is required for this command")
    qrels = load_qrels(args.qrels, max_grade=args.max_grade, passages=passages)
    return qrels


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_partition(args) -> int:
    qrels = _load_corpus(args)
    partition = partition_categories(qrels, drop_unpartitionable=args.drop_unpartitionable)
    summary = {
        "n_queries": len(partition),
        "n_qrels": len(qrels),
        "queries": partition.to_dict(),
    }
    _emit(args, json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_gen_subtopics(args) -> int:
    if not args.queries:
        raise SystemExit("--queries is required")
    queries = load_queries(args.queries)
    judge = _judge(args)
    store = SubtopicStore(args.subtopics_out)
    counts = {}
    for query in queries:
        subtopics = generate_subtopics(query, judge, store=store, regenerate=args.regenerate)
        counts[query.query_id] = len(subtopics)
    _emit(args, json.dumps({"model_id": judge.model_id, "counts": counts}, indent=2, sort_keys=True))
    return 0


def cmd_validate(args) -> int:
    qrels = _load_corpus(args, need_passages=args.method != "embedding" or not args.embeddings)
    partition = partition_categories(qrels, drop_unpartitionable=True)
    queries = load_queries(args.queries) if args.queries else None
    kwargs = dict(
        queries=queries,
        k=args.k,
        seed=args.seed,
        max_grade=args.max_grade,
        dataset_id=args.dataset or Path(args.qrels).name,
    )
    if args.method == "embedding":
        summary = run_validation(args.method, partition, embedder=_embedder(args), **kwargs)
    else:
        subtopic_store = SubtopicStore(args.subtopics) if args.subtopics else SubtopicStore()
        summary = run_validation(
            args.method, partition, _judge(args), subtopic_store=subtopic_store, **kwargs
        )
    _emit(args, summary.to_json())
    return 0


def cmd_generate(args) -> int:
    if not args.queries:
        raise SystemExit("--queries is required")
    queries = load_queries(args.queries)
    judge = _judge(args)
    result = generate_responses(queries, judge, mode=args.mode, out_path=args.out)
    status = {
        "system_id": result.responses.system_ids()[0] if len(result.responses) else None,
        "n_responses": len(result.responses),
        "skipped": list(result.skipped),
    }
    print(json.dumps(status, indent=2, sort_keys=True))
    return 0


def cmd_evaluate(args) -> int:
    if not (args.responses and args.queries):
        raise SystemExit("--responses and --queries are required")
    responses = load_responses(args.responses)
    queries = load_queries(args.queries)
    if args.method in POINTWISE:
        store = SubtopicStore(args.subtopics) if args.subtopics else SubtopicStore()
        score_sets = score_responses_pointwise(
            args.method, responses, queries, _judge(args),
            subtopic_store=store, max_grade=args.max_grade,
        )
    elif args.method == "preference":
        qrels = _load_corpus(args, need_passages=True)
        partition = partition_categories(qrels, drop_unpartitionable=True)
        score_sets = score_preference_vs_exemplar(
            responses, queries, partition, _judge(args),
            seed=args.seed, all_best=args.all_best,
        )
    else:
        qrels = _load_corpus(args, need_passages=not args.embeddings)
        partition = partition_categories(qrels, drop_unpartitionable=True)
        score_sets = score_embedding_vs_best(responses, partition, _embedder(args))
    payload = {
        "method": args.method,
        "systems": {
            s.system_id: {
                "scores": [
                    {"query_id": score.query_id, "value": score.value} for score in s.scores
                ],
                "failed": list(s.failed),
            }
            for s in score_sets
        },
    }
    _emit(args, json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    score_sets = []
    for path in args.scores:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        for system_id, body in data["systems"].items():
            score_sets.append(
                ScoreSet(
                    system_id=system_id,
                    method_id=data["method"],
                    scores=tuple(
                        PerQueryScore(system_id, s["query_id"], data["method"], s["value"])
                        for s in body["scores"]
                    ),
                    failed=tuple(body["failed"]),
                )
            )
    report = build_report(
        score_sets,
        dataset_id=args.dataset or "unknown",
        n_resamples=args.bootstrap,
        level=args.level,
        seed=args.seed,
    )
    if args.csv:
        Path(args.csv).write_text(report_to_csv(report), encoding="utf-8")
    _emit(args, report_to_json(report))
    return 0


def cmd_audit_sample(args) -> int:
    log = _judgment_log(args)
    if len(log) == 0:
        raise SystemExit(f"no judgments found under --cache-dir {args.cache_dir!r}")
    batch = audit_sample(log, n=args.n, seed=args.seed)
    store = AuditStore(args.audit_store)
    store.add_batch(batch)
    status = {
        "sampled": len(batch),
        "requested": batch.requested_n,
        "warning_fewer_than_requested": batch.warning,
        "methods": sorted({item.method_id for item in batch.items}),
    }
    print(json.dumps(status, indent=2, sort_keys=True))
    return 0


def cmd_audit_serve(args) -> int:
    import uvicorn

    from .service import create_app

    store = AuditStore(args.audit_store)
    embedder = None
    if args.mock_embedder or args.embeddings or args.embed_endpoint:
        embedder = _embedder(args)
    app = create_app(
        store, reveal=not args.no_reveal, embedder=embedder, ui_dir=args.ui_dir
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_audit_report(args) -> int:
    store = AuditStore(args.audit_store)
    embedder = None
    if args.mock_embedder or args.embeddings or args.embed_endpoint:
        embedder = _embedder(args)
    _emit(args, audit_report(store, embedder=embedder).to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gireval",
        description="Offline evaluation of generative IR with LLM judges.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="split qrels into Best/Acceptable/Unacceptable")
    _add_common_flags(p)
    p.add_argument("--drop-unpartitionable", action="store_true")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("gen-subtopics", help="generate subtopic lists for queries")
    _add_common_flags(p)
    p.add_argument("--subtopics-out", required=True, help="subtopic JSON Lines file")
    p.add_argument("--regenerate", action="store_true")
    p.set_defaults(func=cmd_gen_subtopics)

    p = sub.add_parser("validate", help="measure agreement with qrel category order")
    _add_common_flags(p)
    p.add_argument(
        "--method",
        required=True,
        choices=["binary", "graded", "subtopic", "preference", "embedding"],
    )
    p.add_argument("--k", type=int, default=5, help="preference triples per stratum")
    p.add_argument("--subtopics", help="subtopic JSON Lines file")
    p.add_argument("--dataset", help="dataset id echoed into the summary")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="generate responses for queries")
    _add_common_flags(p)
    p.add_argument("--mode", choices=["normal", "liar"], default="normal")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score generated responses per query")
    _add_common_flags(p)
    p.add_argument(
        "--method",
        required=True,
        choices=["binary", "graded", "subtopic", "preference", "embedding"],
    )
    p.add_argument("--subtopics", help="subtopic JSON Lines file")
    p.add_argument("--all-best", action="store_true", help="average preference over all Best")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="bootstrap per-system means from score files")
    _add_common_flags(p)
    p.add_argument("--scores", nargs="+", required=True, help="evaluate output files")
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--csv", help="also write a CSV table here")
    p.add_argument("--dataset", help="dataset id echoed into the report")
    p.set_defaults(func=cmd_report)

    audit = sub.add_parser("audit", help="human audit workflow")
    audit_sub = audit.add_subparsers(dest="audit_command", required=True)

    p = audit_sub.add_parser("sample", help="draw a stratified audit batch")
    _add_common_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--audit-store", required=True, help="audit JSON Lines file")
    p.set_defaults(func=cmd_audit_sample)

    p = audit_sub.add_parser("serve", help="run the audit HTTP service")
    _add_common_flags(p)
    p.add_argument("--audit-store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--ui-dir", help="static assets directory for the audit UI")
    p.add_argument("--no-reveal", action="store_true", help="never echo judge outcomes")
    p.set_defaults(func=cmd_audit_serve)

    p = audit_sub.add_parser("report", help="print the human agreement report")
    _add_common_flags(p)
    p.add_argument("--audit-store", required=True)
    p.set_defaults(func=cmd_audit_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
