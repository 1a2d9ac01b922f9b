"""The retrieval head: local chunk hits plus global graph facts, merged
under a character budget, then handed to a pluggable generator.

Local and global retrieval are independent reads of immutable snapshots;
running them concurrently must give results identical to this sequential
composition, so sequential is the reference implementation.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .embedding import EmbedderContract, embed_text
from .errors import AdapterError, ContractError
from .extract import ExtractorClient
from .generation import (
    DEFAULT_SYSTEM_PREAMBLE,
    ContextBlock,
    GenerationRequest,
    GeneratorClient,
)
from .kgraph import KnowledgeGraph, neighborhood, normalize_surface
from .mmio import Caption, OcrToken, fuse_query
from .vindex import SearchHit, VectorIndex, search

logger = logging.getLogger(__name__)

MODES = ("base", "rag", "grg")
MIN_BUDGET_CHARS = 256

DEFAULT_K = 8
DEFAULT_DEPTH = 1
DEFAULT_BUDGET_CHARS = 6000

FACTS_HEADER = "[facts]"


@dataclass
class LocalContext:
    hits: list[SearchHit] = field(default_factory=list)
    texts: dict[str, str] = field(default_factory=dict)


@dataclass
class RenderedFact:
    text: str
    subject_id: str
    subject_name: str
    predicate: str
    object_id: str
    object_name: str
    sources: list[str]


@dataclass
class GlobalContext:
    subgraph: KnowledgeGraph = field(default_factory=KnowledgeGraph)
    facts: list[RenderedFact] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)


@dataclass
class AssembledContext:
    blocks: list[ContextBlock] = field(default_factory=list)
    total_chars: int = 0
    budget_chars: int = DEFAULT_BUDGET_CHARS
    truncation_report: list[str] = field(default_factory=list)


@dataclass
class AnswerResult:
    answer: str
    context: AssembledContext
    local: LocalContext
    global_: GlobalContext
    diagnostics: dict = field(default_factory=dict)


def retrieve_local(
    query_text: str,
    embedder: EmbedderContract,
    index: VectorIndex,
    chunk_texts: dict[str, str],
    k: int = DEFAULT_K,
) -> LocalContext:
    """embed, search, hydrate; fails fast on an empty query."""
    if not query_text.strip():
        raise ContractError("retrieve_local requires a non-empty query")
    hits = search(index, embed_text(query_text, embedder), k)
    texts = {}
    for hit in hits:
        if hit.chunk_id not in chunk_texts:
            raise ContractError(f"hit {hit.chunk_id} missing from chunk store")
        texts[hit.chunk_id] = chunk_texts[hit.chunk_id]
    return LocalContext(hits=hits, texts=texts)


_EDGE_PUNCT_RE = re.compile(r"^[^\w]+|[^\w]+$")


def _candidate_phrases(query_text: str, max_words: int = 3) -> list[str]:
    words = [_EDGE_PUNCT_RE.sub("", w) for w in query_text.split()]
    words = [w for w in words if w]
    phrases = []
    for n in range(1, max_words + 1):
        for i in range(len(words) - n + 1):
            phrases.append(" ".join(words[i : i + n]))
    return phrases


def extract_query_entities(
    query_text: str, extractor: ExtractorClient, graph: KnowledgeGraph
) -> tuple[list[str], list[str]]:
    """Resolve query mentions against the graph's normalized name index.

    Candidates come from the extractor plus raw query phrases, normalized
    the same way alignment normalizes entity surfaces.  Unresolved
    candidates are dropped; returns (entity_ids, notices).
    """
    candidates = [m for m, _ in extractor.extract_mentions(query_text)]
    candidates += _candidate_phrases(query_text)
    resolved: list[str] = []
    seen = set()
    for candidate in candidates:
        eid = graph.norm_index.get(normalize_surface(candidate))
        if eid is not None and eid not in seen:
            seen.add(eid)
            resolved.append(eid)
    notices = [] if resolved else ["no query entities resolved against the graph"]
    return resolved, notices


def render_fact(graph: KnowledgeGraph, rel) -> RenderedFact:
    subject = graph.entities[rel.subject_id]
    obj = graph.entities[rel.object_id]
    sources = sorted(rel.provenance)
    text = (
        f"{subject.canonical_name} —{rel.predicate}→ {obj.canonical_name}"
        f" [source: {','.join(sources)}]"
    )
    return RenderedFact(
        text=text,
        subject_id=rel.subject_id,
        subject_name=subject.canonical_name,
        predicate=rel.predicate,
        object_id=rel.object_id,
        object_name=obj.canonical_name,
        sources=sources,
    )


def retrieve_global(
    entity_ids: list[str], graph: KnowledgeGraph, depth: int = DEFAULT_DEPTH
) -> GlobalContext:
    """Neighborhood slice rendered as one fact line per relation."""
    if not entity_ids:
        return GlobalContext(notices=["no seed entities; empty global context"])
    subgraph, notices = neighborhood(graph, entity_ids, depth)
    ordered = sorted(subgraph.relations, key=lambda r: (r.subject_id, r.predicate, r.object_id))
    facts = [render_fact(subgraph, rel) for rel in ordered]
    return GlobalContext(subgraph=subgraph, facts=facts, notices=notices)


def _facts_block_text(facts: list[RenderedFact]) -> str:
    return FACTS_HEADER + "\n" + "\n".join(f.text for f in facts)


def _chunk_block(chunk_id: str, text: str) -> ContextBlock:
    return ContextBlock(kind="chunk", ref=chunk_id, text=f"[chunk {chunk_id}]\n{text}")


def assemble_context(
    local: LocalContext,
    global_: GlobalContext,
    budget_chars: int = DEFAULT_BUDGET_CHARS,
    facts_first: bool = True,
) -> AssembledContext:
    """Facts block first (configurable), then chunks in rank order.

    Over budget, whole chunks drop from the lowest rank upward; the facts
    block is truncated line by line only as a last resort.  Every drop is
    listed in the truncation report.
    """
    if budget_chars < MIN_BUDGET_CHARS:
        raise ContractError(f"budget_chars must be >= {MIN_BUDGET_CHARS}, got {budget_chars}")
    blocks: list[ContextBlock] = []
    facts_block = (
        ContextBlock(kind="facts", ref=None, text=_facts_block_text(global_.facts))
        if global_.facts
        else None
    )
    if facts_block is not None and facts_first:
        blocks.append(facts_block)
    for hit in sorted(local.hits, key=lambda h: h.rank):
        blocks.append(_chunk_block(hit.chunk_id, local.texts[hit.chunk_id]))
    if facts_block is not None and not facts_first:
        blocks.append(facts_block)

    report: list[str] = []
    total = sum(len(b.text) for b in blocks)
    while total > budget_chars:
        chunk_positions = [i for i, b in enumerate(blocks) if b.kind == "chunk"]
        if chunk_positions:
            victim = blocks.pop(chunk_positions[-1])
            report.append(f"dropped chunk {victim.ref} ({len(victim.text)} chars)")
            total = sum(len(b.text) for b in blocks)
            continue
        # only the facts block remains: shed fact lines from the end
        lines = blocks[0].text.split("\n")
        if len(lines) <= 2:
            raise ContractError(
                f"budget {budget_chars} cannot fit a single fact line ({total} chars)"
            )
        dropped = lines.pop()
        report.append(f"truncated fact line: {dropped[:60]}")
        blocks[0] = ContextBlock(kind="facts", ref=None, text="\n".join(lines))
        total = sum(len(b.text) for b in blocks)
    return AssembledContext(
        blocks=blocks, total_chars=total, budget_chars=budget_chars, truncation_report=report
    )


@dataclass
class QueryInput:
    text: str
    caption: Caption | None = None
    ocr_tokens: list[OcrToken] = field(default_factory=list)


def answer(
    query: QueryInput,
    *,
    mode: str,
    embedder: EmbedderContract,
    index: VectorIndex | None,
    chunk_texts: dict[str, str],
    graph: KnowledgeGraph | None,
    extractor: ExtractorClient,
    generator: GeneratorClient,
    k: int = DEFAULT_K,
    depth: int = DEFAULT_DEPTH,
    budget_chars: int = DEFAULT_BUDGET_CHARS,
    facts_first: bool = True,
    system_preamble: str = DEFAULT_SYSTEM_PREAMBLE,
) -> AnswerResult:
    """Full pipeline: fuse, retrieve per mode, assemble, generate.

    mode=base skips retrieval entirely, rag adds local chunk hits, grg
    adds the graph facts block on top.  The assembled context rides along
    in the result so callers can display provenance.
    """
    if mode not in MODES:
        raise ContractError(f"mode must be one of {MODES}, got {mode!r}")
    fused = fuse_query(query.text, query.caption, query.ocr_tokens)

    diagnostics: dict = {"mode": mode, "fused_query_chars": len(fused)}
    local = LocalContext()
    global_ = GlobalContext()
    if mode in ("rag", "grg"):
        if index is None:
            raise ContractError("retrieval mode requires a built vector index")
        local = retrieve_local(fused, embedder, index, chunk_texts, k)
        diagnostics["local_hits"] = len(local.hits)
    if mode == "grg":
        if graph is None:
            raise ContractError("grg mode requires a built knowledge graph")
        entity_ids, notices = extract_query_entities(fused, extractor, graph)
        global_ = retrieve_global(entity_ids, graph, depth)
        global_.notices = notices + global_.notices
        diagnostics["resolved_entities"] = entity_ids
        diagnostics["global_facts"] = len(global_.facts)

    context = assemble_context(local, global_, budget_chars, facts_first=facts_first)
    request = GenerationRequest(system=system_preamble, blocks=context.blocks, query=fused)
    try:
        response = generator.generate(request)
    except AdapterError as exc:
        # context is preserved for the caller to retry with
        exc.context = context  # type: ignore[attr-defined]
        raise
    if not response.answer:
        raise AdapterError(f"generator {generator.name} returned an empty answer")
    diagnostics["generator"] = response.generator
    diagnostics["usage"] = response.usage
    diagnostics["truncations"] = len(context.truncation_report)
    return AnswerResult(
        answer=response.answer,
        context=context,
        local=local,
        global_=global_,
        diagnostics=diagnostics,
    )
