"""Command-line gateway: one subcommand per pipeline stage.

Each command prints a machine-readable JSON result line on stdout and a
human summary on stderr; exit codes follow the error taxonomy (2 config,
3 data, 4 store state, 5 adapter).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus, embedding, evalbench, forge, kgraph, stores, vindex
from .adapters import build_extractor, build_judge
from .chunking import chunk_document
from .config import EngineConfig, load_config
from .errors import AdapterError, ConfigError, GrgError
from .stores import StoreLayout, answer_query, context_to_wire, load_snapshot


def _emit(result: dict, summary: str) -> None:
    print(json.dumps(result, ensure_ascii=False))
    print(summary, file=sys.stderr)


def _load_config(args) -> EngineConfig:
    if not args.config:
        raise ConfigError("--config is required")
    return load_config(args.config)


def cmd_ingest(args) -> int:
    config = _load_config(args)
    layout = StoreLayout(config.store_root)
    layout.ensure()
    manifest = corpus.load_manifest(args.manifest)
    pipeline = corpus.PipelineConfig(
        keywords=corpus.load_term_file(config.keywords_path) if config.keywords_path else set(),
        denylist=corpus.load_term_file(config.denylist_path) if config.denylist_path else set(),
        use_keyword_filter=config.use_keyword_filter and config.keywords_path is not None,
        use_judge_filter=config.use_judge_filter,
        judge=build_judge(config.adapters["judge"], config.judge_topics, config.judge_min_ttr),
    )
    docs, report = corpus.preprocess(manifest, pipeline)
    corpus.write_clean_corpus(docs, layout.path("clean_corpus"))
    layout.path("filter_report").write_text(
        json.dumps(report.to_json(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    result = {"command": "ingest", **report.to_json()}
    _emit(result, f"ingested {report.kept_count}/{report.input_count} documents")
    return 0


def cmd_index(args) -> int:
    config = _load_config(args)
    layout = StoreLayout(config.store_root)
    layout.check()
    docs = corpus.load_clean_corpus(layout.path("clean_corpus"))
    chunks = []
    for doc in docs:
        chunks.extend(chunk_document(doc, config.chunking))
    embedding.write_chunks(chunks, layout.path("chunks"))
    embedder = stores.build_embedder(config)
    pairs = [(c.chunk_id, embedding.embed_text(c.text, embedder)) for c in chunks]
    index = vindex.build_index(pairs, mode=config.index_mode, params=config.index_params)
    vindex.persist(index, layout.path("index"))
    result = {
        "command": "index",
        "documents": len(docs),
        "chunks": len(chunks),
        "mode": config.index_mode,
        "dim": config.embedder_dim,
    }
    _emit(result, f"indexed {len(chunks)} chunks from {len(docs)} documents ({config.index_mode})")
    return 0


def cmd_graph(args) -> int:
    config = _load_config(args)
    layout = StoreLayout(config.store_root)
    layout.check()
    chunks = embedding.load_chunks(layout.path("chunks"))
    extractor = build_extractor(config.adapters["extractor"])
    graph = kgraph.build_graph(chunks, extractor)
    kgraph.export_graph(graph, layout.path("graph"))
    statements = kgraph.export_statements(graph, layout.path("statements"))
    result = {
        "command": "graph",
        "entities": len(graph.entities),
        "relations": len(graph.relations),
        "warnings": graph.warnings,
        "statements": statements,
    }
    _emit(result, f"graph: {len(graph.entities)} entities, {len(graph.relations)} relations")
    return 0


def cmd_forge(args) -> int:
    config = _load_config(args)
    layout = StoreLayout(config.store_root)
    layout.check()
    chunks = embedding.load_chunks(layout.path("chunks"))
    generator = forge.ClozeStubGenerator()
    pairs = []
    for chunk in chunks:
        pairs.extend(forge.generate_qa(chunk, generator, args.instruction))
    records = forge.build_records(pairs, args.instruction)
    sources = {i: pairs[i].chunk.text for i in range(len(pairs))}
    kept, rejected = forge.assess_quality(
        records, forge.StubQualityJudge(), min_score=args.min_score, sources=sources
    )
    out_dir = Path(args.out) if args.out else layout.path("forge")
    paths = forge.export_training_bundle(kept, None, out_dir)
    result = {
        "command": "forge",
        "generated": len(records),
        "kept": len(kept),
        "rejected": len(rejected),
        **paths,
    }
    _emit(result, f"forged {len(kept)} records ({len(rejected)} rejected) into {out_dir}")
    return 0


def _require_for_mode(mode: str) -> tuple[str, ...]:
    if mode == "base":
        return ()
    if mode == "rag":
        return ("index", "chunks")
    return ("index", "chunks", "graph")


def cmd_query(args) -> int:
    config = _load_config(args)
    mode = args.mode or config.default_mode
    snapshot = load_snapshot(config, require=_require_for_mode(mode))
    result = answer_query(snapshot, text=args.text, image_ids=args.image or [], mode=mode)
    payload = {
        "answer": result.answer,
        "context": context_to_wire(result, snapshot.chunks),
        "diagnostics": result.diagnostics,
    }
    _emit({"command": "query", **payload}, f"[{mode}] {result.answer}")
    return 0


def cmd_eval(args) -> int:
    config = _load_config(args)
    mode = args.mode or config.default_mode
    snapshot = load_snapshot(config, require=_require_for_mode(mode))
    questions = evalbench.load_benchmark(args.benchmark)

    def answer_fn(query_text: str) -> tuple[str, int]:
        result = answer_query(snapshot, text=query_text, mode=mode)
        return result.answer, result.context.total_chars

    report = evalbench.run_eval(questions, answer_fn, mode)
    out_path = Path(args.out) if args.out else snapshot.layout.path("reports") / f"eval_{mode}.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(
        json.dumps(report.to_json(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    result = {
        "command": "eval",
        "mode": mode,
        "total": report.total,
        "correct": report.correct,
        "accuracy": report.accuracy,
        "report_path": str(out_path),
    }
    _emit(result, report.summary_table())
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    config = _load_config(args)
    app = build_app(config)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grg",
        description="Graph and retrieval augmented generation engine",
    )
    parser.add_argument("--config", help="path to the engine config JSON file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="preprocess a manifest into the clean corpus store")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="chunk, embed, and build the vector index")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("graph", help="extract triples and build the knowledge graph")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("forge", help="generate instruction-tuning records")
    p.add_argument("--instruction", default=forge.DEFAULT_INSTRUCTION)
    p.add_argument("--min-score", type=float, default=0.5, dest="min_score")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_forge)

    p = sub.add_parser("query", help="answer one query through the pipeline")
    p.add_argument("--text", required=True)
    p.add_argument("--mode", choices=["base", "rag", "grg"], default=None)
    p.add_argument("--image", action="append", help="fixture image id (repeatable)")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="run an MCQ benchmark and write a report")
    p.add_argument("--benchmark", required=True)
    p.add_argument("--mode", choices=["base", "rag", "grg"], default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="serve the HTTP API over the built stores")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as exc:
        print(json.dumps({"error": {"category": "adapter", "message": str(exc)}}), file=sys.stderr)
        return exc.exit_code
    except GrgError as exc:
        category = type(exc).__name__.replace("Error", "").lower()
        print(json.dumps({"error": {"category": category, "message": str(exc)}}), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
