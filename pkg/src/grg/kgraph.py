"""Provenance-tracked knowledge graph built from extracted chunk triples.

Entity identity is a stable 64-bit hash of the normalized canonical name
plus type, so rebuilding from the same chunks reproduces identical ids.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path

from .chunking import Chunk
from .errors import BuildError, DataError, LoadError
from .extract import ExtractorClient, RawTriple

logger = logging.getLogger(__name__)

GRAPH_SCHEMA_VERSION = 1

# predicates allowed as self-loops; alias_of must never appear here
REFLEXIVE_ALLOWED: frozenset[str] = frozenset()


@dataclass(frozen=True)
class EntityMention:
    surface: str
    type_hint: str
    chunk_id: str

    def __post_init__(self):
        if not self.surface.strip():
            raise DataError("entity mention with empty surface")


@dataclass
class Entity:
    entity_id: str
    canonical_name: str
    type: str
    aliases: set[str] = field(default_factory=set)
    provenance: set[str] = field(default_factory=set)


@dataclass
class Relation:
    subject_id: str
    predicate: str
    object_id: str
    confidence: float
    provenance: set[str] = field(default_factory=set)


@dataclass
class KnowledgeGraph:
    entities: dict[str, Entity] = field(default_factory=dict)
    relations: list[Relation] = field(default_factory=list)
    adjacency: dict[str, dict[str, list[int]]] = field(default_factory=dict)
    norm_index: dict[str, str] = field(default_factory=dict)  # normalized name -> entity_id
    warnings: int = 0

    def rebuild_adjacency(self) -> None:
        self.adjacency = {eid: {"out": [], "in": []} for eid in self.entities}
        for idx, rel in enumerate(self.relations):
            self.adjacency[rel.subject_id]["out"].append(idx)
            self.adjacency[rel.object_id]["in"].append(idx)

    def rebuild_norm_index(self) -> None:
        self.norm_index = {}
        for eid, entity in self.entities.items():
            for alias in entity.aliases | {entity.canonical_name}:
                self.norm_index[normalize_surface(alias)] = eid

    def check_integrity(self) -> None:
        """Referential integrity is a checked invariant, not an assumption."""
        for rel in self.relations:
            if rel.subject_id not in self.entities or rel.object_id not in self.entities:
                raise BuildError(
                    f"relation {rel.subject_id} -{rel.predicate}-> {rel.object_id} has unknown endpoint"
                )
            if not rel.provenance:
                raise BuildError("relation without provenance")
        for entity in self.entities.values():
            if not entity.provenance:
                raise BuildError(f"entity {entity.canonical_name} without provenance")


def normalize_surface(surface: str) -> str:
    """lowercase, trim, collapse whitespace, strip trailing s on long words."""
    norm = " ".join(surface.strip().lower().split())
    if len(norm) > 3 and norm.endswith("s"):
        norm = norm[:-1]
    return norm


def entity_id_for(normalized_name: str, entity_type: str) -> str:
    digest = hashlib.blake2b(
        f"{normalized_name}|{entity_type}".encode("utf-8"), digest_size=8
    ).hexdigest()
    return f"e{digest}"


def extract_triples(
    chunk: Chunk, extractor: ExtractorClient
) -> tuple[list[RawTriple], int]:
    """Run the extractor on one chunk, dropping malformed output.

    Returns the usable triples and a count of dropped malformed ones.
    """
    dropped = 0
    usable = []
    for triple in extractor.extract_triples(chunk.text):
        if (
            not triple.subject.strip()
            or not triple.object.strip()
            or not triple.predicate.strip()
            or not (0.0 <= triple.confidence <= 1.0)
        ):
            logger.warning("dropping malformed triple from %s: %r", chunk.chunk_id, triple)
            dropped += 1
            continue
        usable.append(triple)
    return usable, dropped


def align_entities(
    mentions: list[EntityMention],
) -> tuple[list[Entity], dict[str, str]]:
    """Merge mentions whose normalized surfaces match into entities.

    Canonical name is the most frequent raw surface, ties broken
    lexicographically.  Every mention surface maps to exactly one id.
    """
    groups: dict[str, list[EntityMention]] = {}
    for mention in mentions:
        groups.setdefault(normalize_surface(mention.surface), []).append(mention)

    entities = []
    surface_to_id: dict[str, str] = {}
    for norm in sorted(groups):
        group = groups[norm]
        surface_counts = Counter(m.surface.strip() for m in group)
        top = max(surface_counts.values())
        canonical = min(s for s, c in surface_counts.items() if c == top)
        type_counts = Counter(m.type_hint for m in group)
        top_type = max(type_counts.values())
        entity_type = min(t for t, c in type_counts.items() if c == top_type)
        entity = Entity(
            entity_id=entity_id_for(norm, entity_type),
            canonical_name=canonical,
            type=entity_type,
            aliases=set(surface_counts),
            provenance={m.chunk_id for m in group},
        )
        entities.append(entity)
        for m in group:
            surface_to_id[m.surface] = entity.entity_id
    return entities, surface_to_id


def build_graph(chunks: list[Chunk], extractor: ExtractorClient) -> KnowledgeGraph:
    """Extract, align, and merge into a graph satisfying all invariants.

    Identical triples from different chunks merge into one relation with
    unioned provenance and max confidence.  Deterministic for a fixed
    extractor.
    """
    if not chunks:
        raise BuildError("build_graph requires at least one chunk")
    mentions: list[EntityMention] = []
    triple_rows: list[tuple[RawTriple, str]] = []
    warnings = 0
    for chunk in chunks:
        triples, dropped = extract_triples(chunk, extractor)
        warnings += dropped
        for t in triples:
            mentions.append(EntityMention(t.subject, t.subject_type, chunk.chunk_id))
            mentions.append(EntityMention(t.object, t.object_type, chunk.chunk_id))
            triple_rows.append((t, chunk.chunk_id))

    graph = KnowledgeGraph(warnings=warnings)
    if not triple_rows:
        logger.warning("no triples extracted from %d chunks; graph is empty", len(chunks))
        return graph

    entities, surface_to_id = align_entities(mentions)
    graph.entities = {e.entity_id: e for e in entities}

    merged: dict[tuple[str, str, str], Relation] = {}
    for triple, chunk_id in triple_rows:
        sid = surface_to_id[triple.subject]
        oid = surface_to_id[triple.object]
        if sid == oid and triple.predicate not in REFLEXIVE_ALLOWED:
            logger.warning("dropping self-loop %s -%s-> itself", triple.subject, triple.predicate)
            graph.warnings += 1
            continue
        key = (sid, triple.predicate, oid)
        if key in merged:
            merged[key].provenance.add(chunk_id)
            merged[key].confidence = max(merged[key].confidence, triple.confidence)
        else:
            merged[key] = Relation(
                subject_id=sid,
                predicate=triple.predicate,
                object_id=oid,
                confidence=triple.confidence,
                provenance={chunk_id},
            )
    graph.relations = [merged[key] for key in sorted(merged)]
    graph.rebuild_adjacency()
    graph.rebuild_norm_index()
    graph.check_integrity()
    return graph


def neighborhood(
    graph: KnowledgeGraph, entity_ids: list[str], depth: int
) -> tuple[KnowledgeGraph, list[str]]:
    """Undirected expansion to depth hops plus all relations inside the slice.

    Unknown seed ids are skipped and reported in the returned notices.
    """
    if depth not in (1, 2):
        raise DataError(f"neighborhood depth must be 1 or 2, got {depth}")
    notices = []
    seeds = []
    for eid in entity_ids:
        if eid in graph.entities:
            seeds.append(eid)
        else:
            notices.append(f"unknown entity id skipped: {eid}")
    if not seeds:
        if entity_ids:
            notices.append("no known entity ids; empty subgraph")
        return KnowledgeGraph(), notices

    reached = set(seeds)
    frontier = deque((eid, 0) for eid in seeds)
    while frontier:
        eid, dist = frontier.popleft()
        if dist >= depth:
            continue
        adj = graph.adjacency.get(eid, {"out": [], "in": []})
        for idx in adj["out"] + adj["in"]:
            rel = graph.relations[idx]
            for other in (rel.subject_id, rel.object_id):
                if other not in reached:
                    reached.add(other)
                    frontier.append((other, dist + 1))

    sub = KnowledgeGraph(
        entities={eid: graph.entities[eid] for eid in sorted(reached)},
        relations=[
            rel
            for rel in graph.relations
            if rel.subject_id in reached and rel.object_id in reached
        ],
    )
    sub.rebuild_adjacency()
    sub.rebuild_norm_index()
    return sub, notices


# ---------------------------------------------------------------------------
# persistence and statement export


def graph_to_json(graph: KnowledgeGraph) -> dict:
    return {
        "schema_version": GRAPH_SCHEMA_VERSION,
        "entities": [
            {
                "entity_id": e.entity_id,
                "canonical_name": e.canonical_name,
                "type": e.type,
                "aliases": sorted(e.aliases),
                "provenance": sorted(e.provenance),
            }
            for e in sorted(graph.entities.values(), key=lambda e: e.entity_id)
        ],
        "relations": [
            {
                "subject_id": r.subject_id,
                "predicate": r.predicate,
                "object_id": r.object_id,
                "confidence": r.confidence,
                "provenance": sorted(r.provenance),
            }
            for r in graph.relations
        ],
    }


def export_graph(graph: KnowledgeGraph, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(graph_to_json(graph), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def import_graph(path: str | Path) -> KnowledgeGraph:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema_version") != GRAPH_SCHEMA_VERSION:
        raise LoadError(
            f"graph schema version {data.get('schema_version')} unsupported, want {GRAPH_SCHEMA_VERSION}"
        )
    graph = KnowledgeGraph()
    for row in data["entities"]:
        graph.entities[row["entity_id"]] = Entity(
            entity_id=row["entity_id"],
            canonical_name=row["canonical_name"],
            type=row["type"],
            aliases=set(row["aliases"]),
            provenance=set(row["provenance"]),
        )
    for row in data["relations"]:
        graph.relations.append(
            Relation(
                subject_id=row["subject_id"],
                predicate=row["predicate"],
                object_id=row["object_id"],
                confidence=row["confidence"],
                provenance=set(row["provenance"]),
            )
        )
    graph.rebuild_adjacency()
    graph.rebuild_norm_index()
    graph.check_integrity()
    return graph


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _relation_type(predicate: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", predicate).strip("_").upper()


def export_statements(graph: KnowledgeGraph, path: str | Path) -> int:
    """Write one property-graph upsert statement per line, nodes first.

    The dialect is openCypher MERGE, loadable by common graph stores.
    Returns the number of statements written.
    """
    lines = []
    for entity in sorted(graph.entities.values(), key=lambda e: e.entity_id):
        lines.append(
            "MERGE (:Entity {id: %s, name: %s, type: %s});"
            % (_quote(entity.entity_id), _quote(entity.canonical_name), _quote(entity.type))
        )
    for rel in sorted(graph.relations, key=lambda r: (r.subject_id, r.predicate, r.object_id)):
        lines.append(
            "MATCH (a:Entity {id: %s}), (b:Entity {id: %s}) "
            "MERGE (a)-[:%s {confidence: %s, sources: %s}]->(b);"
            % (
                _quote(rel.subject_id),
                _quote(rel.object_id),
                _relation_type(rel.predicate),
                format(rel.confidence, "g"),
                _quote(",".join(sorted(rel.provenance))),
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return len(lines)
