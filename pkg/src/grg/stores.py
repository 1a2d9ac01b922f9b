"""Store layout under store_root and read-only engine snapshots.

Builders write whole files and move them into place; readers load an
immutable snapshot at startup, so concurrent readers never observe a
partially rebuilt store.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import adapters, corpus, embedding, engine, kgraph, vindex
from .chunking import Chunk
from .config import EngineConfig
from .corpus import CleanDocument
from .errors import StoreStateError
from .generation import GeneratorClient
from .mmio import Caption, ImageInput, caption_image, filter_by_confidence, ocr_image

LAYOUT_VERSION = 1
LAYOUT_MARKER = "layout.json"

RELATIVE_PATHS = {
    "clean_corpus": "corpus/clean.jsonl",
    "filter_report": "corpus/filter_report.json",
    "chunks": "chunks/chunks.jsonl",
    "index": "vectors/index.grgv",
    "graph": "graph/graph.json",
    "statements": "graph/statements.cypher",
    "benchmarks": "benchmarks",
    "reports": "reports",
    "forge": "forge",
}


@dataclass
class StoreLayout:
    root: Path

    def path(self, name: str) -> Path:
        return self.root / RELATIVE_PATHS[name]

    def ensure(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        marker = self.root / LAYOUT_MARKER
        if marker.exists():
            version = json.loads(marker.read_text(encoding="utf-8")).get("layout_version")
            if version != LAYOUT_VERSION:
                raise StoreStateError(
                    f"store layout version {version} incompatible with {LAYOUT_VERSION}"
                )
        else:
            marker.write_text(
                json.dumps({"layout_version": LAYOUT_VERSION}) + "\n", encoding="utf-8"
            )
        for rel in RELATIVE_PATHS.values():
            target = self.root / rel
            (target if not target.suffix else target.parent).mkdir(parents=True, exist_ok=True)

    def check(self) -> None:
        marker = self.root / LAYOUT_MARKER
        if not marker.exists():
            raise StoreStateError(f"store root {self.root} not initialized (missing {LAYOUT_MARKER})")
        version = json.loads(marker.read_text(encoding="utf-8")).get("layout_version")
        if version != LAYOUT_VERSION:
            raise StoreStateError(f"store layout version {version} incompatible with {LAYOUT_VERSION}")

    def versions(self) -> dict[str, str]:
        out = {"layout": str(LAYOUT_VERSION)}
        out["vectors"] = "built" if self.path("index").exists() else "missing"
        out["graph"] = "built" if self.path("graph").exists() else "missing"
        out["corpus"] = "built" if self.path("clean_corpus").exists() else "missing"
        out["chunks"] = "built" if self.path("chunks").exists() else "missing"
        return out


@dataclass
class EngineSnapshot:
    """Everything the query path needs, loaded once and never mutated."""

    config: EngineConfig
    layout: StoreLayout
    docs: dict[str, CleanDocument]
    chunks: dict[str, Chunk]
    index: vindex.VectorIndex | None
    graph: kgraph.KnowledgeGraph | None
    embedder: embedding.EmbedderContract
    extractor: object
    generator: GeneratorClient
    captioner: object
    ocr: object
    chunk_texts: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.chunk_texts = {cid: c.text for cid, c in self.chunks.items()}


def build_embedder(config: EngineConfig) -> embedding.EmbedderContract:
    # only the deterministic reference embedder ships in-repo; hosted
    # embedders would register here by name
    return embedding.HashedTrigramEmbedder(dim=config.embedder_dim)


def load_snapshot(config: EngineConfig, require: tuple[str, ...] = ()) -> EngineSnapshot:
    """Load read-only stores; missing required ones raise StoreStateError."""
    layout = StoreLayout(config.store_root)
    layout.check()

    docs: dict[str, CleanDocument] = {}
    if layout.path("clean_corpus").exists():
        docs = {d.doc_id: d for d in corpus.load_clean_corpus(layout.path("clean_corpus"))}
    chunks: dict[str, Chunk] = {}
    if layout.path("chunks").exists():
        chunks = {c.chunk_id: c for c in embedding.load_chunks(layout.path("chunks"))}
    index = None
    if layout.path("index").exists():
        index = vindex.load(layout.path("index"))
    graph = None
    if layout.path("graph").exists():
        graph = kgraph.import_graph(layout.path("graph"))

    missing = []
    if "index" in require and index is None:
        missing.append("vector index")
    if "graph" in require and graph is None:
        missing.append("knowledge graph")
    if "chunks" in require and not chunks:
        missing.append("chunk store")
    if missing:
        raise StoreStateError("stores not built: " + ", ".join(missing))

    return EngineSnapshot(
        config=config,
        layout=layout,
        docs=docs,
        chunks=chunks,
        index=index,
        graph=graph,
        embedder=build_embedder(config),
        extractor=adapters.build_extractor(config.adapters["extractor"]),
        generator=adapters.build_generator(config.adapters["generator"]),
        captioner=adapters.build_captioner(config.adapters["captioner"], config.mmio_fixtures_path),
        ocr=adapters.build_ocr(config.adapters["ocr"], config.mmio_fixtures_path),
    )


def answer_query(
    snapshot: EngineSnapshot,
    text: str,
    image_ids: list[str] | None = None,
    mode: str | None = None,
) -> engine.AnswerResult:
    """Gateway-level answer: attach image fixtures, then run the pipeline."""
    mode = mode or snapshot.config.default_mode
    caption: Caption | None = None
    tokens = []
    notices = []
    for image_id in image_ids or []:
        img = ImageInput(image_id=image_id)
        try:
            caption = caption_image(img, snapshot.captioner)
        except Exception as exc:  # noqa: BLE001 - caption loss degrades, not fails
            notices.append(f"caption unavailable for {image_id}: {exc}")
        try:
            raw_tokens = ocr_image(img, snapshot.ocr)
            tokens.extend(
                filter_by_confidence(raw_tokens, snapshot.config.confidence_threshold)
            )
        except Exception as exc:  # noqa: BLE001
            notices.append(f"ocr unavailable for {image_id}: {exc}")

    result = engine.answer(
        engine.QueryInput(text=text, caption=caption, ocr_tokens=tokens),
        mode=mode,
        embedder=snapshot.embedder,
        index=snapshot.index,
        chunk_texts=snapshot.chunk_texts,
        graph=snapshot.graph,
        extractor=snapshot.extractor,
        generator=snapshot.generator,
        k=snapshot.config.k,
        depth=snapshot.config.depth,
        budget_chars=snapshot.config.budget_chars,
        facts_first=snapshot.config.facts_first,
    )
    if notices:
        result.diagnostics["mmio_notices"] = notices
    return result


def context_to_wire(result: engine.AnswerResult, chunks: dict[str, Chunk]) -> dict:
    """The one serialization of answer context used by CLI and HTTP alike."""
    surviving_fact_lines: set[str] = set()
    for block in result.context.blocks:
        if block.kind == "facts":
            surviving_fact_lines.update(block.text.split("\n"))
    return {
        "facts": [
            {
                "text": f.text,
                "subject_id": f.subject_id,
                "subject_name": f.subject_name,
                "predicate": f.predicate,
                "object_id": f.object_id,
                "object_name": f.object_name,
                "sources": f.sources,
            }
            for f in result.global_.facts
            # only facts that survived assembly are reported
            if f.text in surviving_fact_lines
        ],
        "chunks": [
            {
                "chunk_id": hit.chunk_id,
                "doc_id": chunks[hit.chunk_id].doc_id if hit.chunk_id in chunks else "",
                "span": list(chunks[hit.chunk_id].span) if hit.chunk_id in chunks else [0, 0],
                "score": hit.score,
                "rank": hit.rank,
                "text": result.local.texts[hit.chunk_id],
            }
            for hit in result.local.hits
            if any(b.kind == "chunk" and b.ref == hit.chunk_id for b in result.context.blocks)
        ],
        "total_chars": result.context.total_chars,
        "budget_chars": result.context.budget_chars,
        "truncation_report": result.context.truncation_report,
    }
