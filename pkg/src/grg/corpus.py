"""Corpus loading and the preprocessing pipeline.

Raw documents come in through a JSON Lines manifest and pass through a
fixed stage order: load, markup stripping, keyword filtering, judge
filtering, dedup, harmful-content screening.  Every per-document decision
is recorded in the document's filter trace and aggregated into a
FilterReport so that input = kept + dropped + quarantined always holds.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

SOURCE_KINDS = (
    "standard_3gpp",
    "standard_ieee",
    "patent",
    "paper",
    "code",
    "wiki",
    "other",
)

STAGES = (
    "load",
    "strip_markup",
    "keyword_filter",
    "judge_filter",
    "dedup",
    "harmful_screen",
)


@dataclass
class Attachment:
    path: str
    alt: str = ""


@dataclass
class RawDocument:
    doc_id: str
    source_kind: str
    title: str
    body: str
    attachments: list[Attachment] = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.doc_id:
            raise DataError("document with empty doc_id")
        if self.source_kind not in SOURCE_KINDS:
            raise DataError(f"unknown source_kind {self.source_kind!r} for {self.doc_id}")
        if not self.body and not self.attachments:
            raise DataError(f"document {self.doc_id} has empty body and no attachments")


@dataclass
class CleanDocument:
    """A document after markup stripping, carrying its per-stage trace."""

    doc_id: str
    source_kind: str
    title: str
    body: str
    attachments: list[Attachment] = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)
    filter_trace: list[tuple[str, str, str]] = field(default_factory=list)

    def record(self, stage: str, decision: str, detail: str = "") -> None:
        if any(s == stage for s, _, _ in self.filter_trace):
            raise DataError(f"stage {stage} recorded twice for {self.doc_id}")
        self.filter_trace.append((stage, decision, detail))


@dataclass
class ManifestEntry:
    doc_id: str
    source_kind: str
    locator: str
    meta: dict[str, str] = field(default_factory=dict)
    attachments: list[Attachment] = field(default_factory=list)


@dataclass
class CorpusManifest:
    """Parsed manifest; per-kind counts are derived from the entries."""

    entries: list[ManifestEntry]
    base_dir: Path | None = None

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.doc_id in seen:
                raise DataError(f"duplicate doc_id in manifest: {e.doc_id}")
            seen.add(e.doc_id)
            if e.source_kind not in SOURCE_KINDS:
                raise DataError(f"unknown source_kind {e.source_kind!r} for {e.doc_id}")

    @property
    def counts_by_kind(self) -> dict[str, int]:
        return dict(Counter(e.source_kind for e in self.entries))


@dataclass
class FilterReport:
    input_count: int = 0
    kept_count: int = 0
    dropped_by_stage: dict[str, int] = field(default_factory=dict)
    duplicate_clusters: list[list[str]] = field(default_factory=list)
    quarantined: list[dict[str, str]] = field(default_factory=list)
    load_errors: list[dict[str, str]] = field(default_factory=list)

    def drop(self, stage: str, n: int = 1) -> None:
        self.dropped_by_stage[stage] = self.dropped_by_stage.get(stage, 0) + n

    def conserved(self) -> bool:
        dropped = sum(self.dropped_by_stage.values())
        return self.input_count == self.kept_count + dropped + len(self.quarantined)

    def to_json(self) -> dict:
        return {
            "input_count": self.input_count,
            "kept_count": self.kept_count,
            "dropped_by_stage": dict(sorted(self.dropped_by_stage.items())),
            "duplicate_clusters": self.duplicate_clusters,
            "quarantined": self.quarantined,
            "load_errors": self.load_errors,
        }


# ---------------------------------------------------------------------------
# markup stripping


_SCRIPT_STYLE_RE = re.compile(r"<(script|style)\b[^>]*>.*?</\1\s*>", re.IGNORECASE | re.DOTALL)
_TAG_RE = re.compile(r"</?[A-Za-z!][^>]*>")
_TEMPLATE_RE = re.compile(r"\{\{[^{}]*\}\}")
_URL_RE = re.compile(r"\b[a-zA-Z][a-zA-Z0-9+.-]*://\S+")
_ENTITY_MAP = {"&amp;": "&", "&lt;": " ", "&gt;": " ", "&quot;": '"', "&#39;": "'", "&nbsp;": " "}


def strip_markup(body: str) -> str:
    """Remove tags, hyperlink URLs, and template blocks; keep the visible text.

    Whitespace runs collapse to single spaces and paragraph breaks survive
    as single newlines.  Idempotent.
    """
    text = _SCRIPT_STYLE_RE.sub(" ", body)
    # block-level tags imply a paragraph break, inline tags do not
    text = re.sub(r"</?(p|div|br|li|ul|ol|tr|table|h[1-6])\b[^>]*>", "\n", text, flags=re.IGNORECASE)
    text = _TAG_RE.sub(" ", text)
    # nested templates collapse layer by layer
    while _TEMPLATE_RE.search(text):
        text = _TEMPLATE_RE.sub(" ", text)
    text = text.replace("{{", " ").replace("}}", " ")
    text = _URL_RE.sub(" ", text)
    for entity, char in _ENTITY_MAP.items():
        text = text.replace(entity, char)
    # the clean-body contract bans tag delimiters outright
    text = re.sub(r"<[^<>]*>", " ", text)
    text = text.replace("<", " ").replace(">", " ")
    # collapse whitespace but keep paragraph structure
    paragraphs = []
    for para in re.split(r"\n\s*\n|\n", text):
        collapsed = " ".join(para.split())
        if collapsed:
            paragraphs.append(collapsed)
    return "\n".join(paragraphs)


# ---------------------------------------------------------------------------
# keyword filter


@dataclass
class KeywordDecision:
    keep: bool
    matched: list[str] = field(default_factory=list)


def _keyword_pattern(term: str) -> re.Pattern:
    return re.compile(r"\b" + re.escape(term) + r"\b", re.IGNORECASE)


def keyword_filter(doc: CleanDocument, keywords: set[str]) -> KeywordDecision:
    """Keep iff any keyword matches title or body on word boundaries."""
    if not keywords:
        raise ConfigError("keyword_filter requires a non-empty keyword set")
    haystack = doc.title + "\n" + doc.body
    matched = sorted({k.lower() for k in keywords if _keyword_pattern(k).search(haystack)})
    return KeywordDecision(keep=bool(matched), matched=matched)


# ---------------------------------------------------------------------------
# judge filter


@dataclass
class JudgeVerdict:
    decision: str  # "keep" | "drop"
    reason: str = ""


class JudgeClient(Protocol):
    def judge_document(self, doc: CleanDocument) -> JudgeVerdict: ...


class StubJudge:
    """Deterministic offline judge.

    Drops low-quality text (type-token ratio below min_ttr) and, when an
    allowlist is configured, anything matching none of its topics.
    """

    def __init__(self, topics: Iterable[str] = (), min_ttr: float = 0.25):
        self.topics = {t.lower() for t in topics}
        self.min_ttr = min_ttr

    def judge_document(self, doc: CleanDocument) -> JudgeVerdict:
        tokens = re.findall(r"[a-z0-9]+", (doc.title + " " + doc.body).lower())
        if tokens:
            ttr = len(set(tokens)) / len(tokens)
            if ttr < self.min_ttr:
                return JudgeVerdict("drop", "low-quality")
        if self.topics:
            haystack = (doc.title + "\n" + doc.body).lower()
            hit = sorted(t for t in self.topics if _keyword_pattern(t).search(haystack))
            if not hit:
                return JudgeVerdict("drop", "off-topic")
            return JudgeVerdict("keep", "topic:" + ",".join(hit))
        return JudgeVerdict("keep", "no-allowlist")


@dataclass
class JudgeDecision:
    keep: bool
    reason: str = ""
    quarantined: bool = False


def judge_filter(doc: CleanDocument, judge: JudgeClient) -> JudgeDecision:
    """Apply the judge; protocol or transport failures quarantine the doc."""
    try:
        verdict = judge.judge_document(doc)
        if verdict.decision not in ("keep", "drop"):
            raise ValueError(f"malformed judge verdict {verdict.decision!r}")
    except Exception as exc:  # noqa: BLE001 - any judge fault routes to quarantine
        logger.warning("judge failed on %s: %s", doc.doc_id, exc)
        return JudgeDecision(keep=False, reason=str(exc), quarantined=True)
    return JudgeDecision(keep=verdict.decision == "keep", reason=verdict.reason)


# ---------------------------------------------------------------------------
# dedup

SHINGLE_WORDS = 8
NEAR_DUP_JACCARD = 0.9


def shingles(body: str, width: int = SHINGLE_WORDS) -> frozenset[tuple[str, ...]]:
    words = body.lower().split()
    if not words:
        return frozenset()
    if len(words) <= width:
        return frozenset({tuple(words)})
    return frozenset(tuple(words[i : i + width]) for i in range(len(words) - width + 1))


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {i: i for i in items}

    def find(self, x: str) -> str:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller id wins the root so representatives are deterministic
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def dedup(docs: list[CleanDocument]) -> tuple[list[CleanDocument], FilterReport]:
    """Collapse exact and near duplicates, keeping the smallest doc_id.

    Exact duplicates share an identical normalized body; near duplicates
    have shingle-set Jaccard >= 0.9 on 8-word shingles.  Idempotent and
    insensitive to input order up to the representative choice.
    """
    report = FilterReport(input_count=len(docs))
    by_id = {d.doc_id: d for d in docs}
    if len(by_id) != len(docs):
        raise DataError("dedup requires unique doc_ids")
    ids = sorted(by_id)
    uf = _UnionFind(ids)

    body_groups: dict[str, list[str]] = {}
    for doc_id in ids:
        body_groups.setdefault(by_id[doc_id].body, []).append(doc_id)
    for group in body_groups.values():
        for other in group[1:]:
            uf.union(group[0], other)

    shingle_map = {doc_id: shingles(by_id[doc_id].body) for doc_id in ids}
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if uf.find(a) == uf.find(b):
                continue
            if jaccard(shingle_map[a], shingle_map[b]) >= NEAR_DUP_JACCARD:
                uf.union(a, b)

    clusters: dict[str, list[str]] = {}
    for doc_id in ids:
        clusters.setdefault(uf.find(doc_id), []).append(doc_id)

    kept: list[CleanDocument] = []
    for doc in docs:
        root = uf.find(doc.doc_id)
        members = clusters[root]
        representative = min(members)
        if doc.doc_id == representative:
            kept.append(doc)
        else:
            report.drop("dedup")
    for root in sorted(clusters):
        members = sorted(clusters[root])
        if len(members) >= 2:
            report.duplicate_clusters.append(members)
    report.kept_count = len(kept)
    return kept, report


# ---------------------------------------------------------------------------
# term files and manifests


def load_term_file(path: str | Path) -> set[str]:
    """One term per line, '#' starts a comment, blanks ignored."""
    terms = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        term = line.split("#", 1)[0].strip()
        if term:
            terms.add(term)
    return terms


def load_manifest(path: str | Path) -> CorpusManifest:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest file not found: {path}")
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            entry = ManifestEntry(
                doc_id=row["doc_id"],
                source_kind=row["source_kind"],
                locator=row["locator"],
                meta={str(k): str(v) for k, v in row.get("meta", {}).items()},
                attachments=[Attachment(**a) for a in row.get("attachments", [])],
            )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}:{lineno}: bad manifest entry: {exc}") from exc
        entries.append(entry)
    return CorpusManifest(entries=entries, base_dir=path.parent)


def write_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    lines = []
    for e in manifest.entries:
        row: dict = {"doc_id": e.doc_id, "source_kind": e.source_kind, "locator": e.locator, "meta": e.meta}
        if e.attachments:
            row["attachments"] = [{"path": a.path, "alt": a.alt} for a in e.attachments]
        lines.append(json.dumps(row, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_inventory(path: str | Path) -> dict[str, int]:
    """Declared corpus inventory: source_kind to document count.

    Large source collections are described by this sidecar rather than by
    materialized manifest entries.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    counts = data["counts_by_kind"]
    for kind, count in counts.items():
        if kind not in SOURCE_KINDS:
            raise DataError(f"inventory names unknown source_kind {kind!r}")
        if not isinstance(count, int) or count < 0:
            raise DataError(f"inventory count for {kind} must be a non-negative integer")
    return dict(counts)


def write_inventory(counts: dict[str, int], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps({"counts_by_kind": counts}, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def resolve_locator(entry: ManifestEntry, base_dir: Path | None) -> str:
    """Fetch a document body.  'inline:' carries the body in the manifest."""
    if entry.locator.startswith("inline:"):
        return entry.locator[len("inline:") :]
    path = Path(entry.locator)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    if not path.exists():
        raise DataError(f"locator not resolvable: {entry.locator}")
    return path.read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# full pipeline


@dataclass
class PipelineConfig:
    keywords: set[str] = field(default_factory=set)
    denylist: set[str] = field(default_factory=set)
    use_keyword_filter: bool = True
    use_judge_filter: bool = True
    judge: JudgeClient | None = None


def preprocess(manifest: CorpusManifest, config: PipelineConfig) -> tuple[list[CleanDocument], FilterReport]:
    """Run the full preprocessing pipeline in its fixed stage order.

    Per-document load failures are recorded and skipped; more than 50%
    load failures abort the run.
    """
    report = FilterReport(input_count=len(manifest.entries))
    docs: list[CleanDocument] = []

    for entry in manifest.entries:
        try:
            body = resolve_locator(entry, manifest.base_dir)
            raw = RawDocument(
                doc_id=entry.doc_id,
                source_kind=entry.source_kind,
                title=entry.meta.get("title", ""),
                body=body,
                attachments=entry.attachments,
                meta=entry.meta,
            )
        except DataError as exc:
            report.drop("load")
            report.load_errors.append({"doc_id": entry.doc_id, "error": str(exc)})
            continue
        doc = CleanDocument(
            doc_id=raw.doc_id,
            source_kind=raw.source_kind,
            title=raw.title,
            body=strip_markup(raw.body),
            attachments=raw.attachments,
            meta=raw.meta,
        )
        doc.record("load", "ok")
        doc.record("strip_markup", "ok")
        docs.append(doc)

    if manifest.entries and len(report.load_errors) * 2 > len(manifest.entries):
        raise DataError(
            f"{len(report.load_errors)} of {len(manifest.entries)} documents failed to load"
        )

    if config.use_keyword_filter and docs:
        survivors = []
        for doc in docs:
            decision = keyword_filter(doc, config.keywords)
            if decision.keep:
                doc.record("keyword_filter", "keep", ",".join(decision.matched))
                survivors.append(doc)
            else:
                doc.record("keyword_filter", "drop", "no keyword match")
                report.drop("keyword_filter")
        docs = survivors

    if config.use_judge_filter and docs:
        if config.judge is None:
            raise ConfigError("judge_filter enabled but no judge configured")
        survivors = []
        for doc in docs:
            decision = judge_filter(doc, config.judge)
            if decision.quarantined:
                report.quarantined.append({"doc_id": doc.doc_id, "error": decision.reason})
            elif decision.keep:
                doc.record("judge_filter", "keep", decision.reason)
                survivors.append(doc)
            else:
                doc.record("judge_filter", "drop", decision.reason)
                report.drop("judge_filter")
        docs = survivors

    docs, dedup_report = dedup(docs)
    for stage, count in dedup_report.dropped_by_stage.items():
        report.drop(stage, count)
    report.duplicate_clusters = dedup_report.duplicate_clusters
    for doc in docs:
        doc.record("dedup", "keep")

    survivors = []
    for doc in docs:
        hits = sorted(
            {t.lower() for t in config.denylist if _keyword_pattern(t).search(doc.title + "\n" + doc.body)}
        )
        if hits:
            doc.record("harmful_screen", "drop", ",".join(hits))
            report.drop("harmful_screen")
        else:
            doc.record("harmful_screen", "keep")
            survivors.append(doc)
    docs = survivors

    report.kept_count = len(docs)
    return docs, report


# ---------------------------------------------------------------------------
# clean corpus serialization


def write_clean_corpus(docs: list[CleanDocument], path: str | Path) -> None:
    lines = []
    for d in docs:
        lines.append(
            json.dumps(
                {
                    "doc_id": d.doc_id,
                    "source_kind": d.source_kind,
                    "title": d.title,
                    "body": d.body,
                    "attachments": [{"path": a.path, "alt": a.alt} for a in d.attachments],
                    "meta": d.meta,
                    "filter_trace": [list(t) for t in d.filter_trace],
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_clean_corpus(path: str | Path) -> list[CleanDocument]:
    docs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        docs.append(
            CleanDocument(
                doc_id=row["doc_id"],
                source_kind=row["source_kind"],
                title=row["title"],
                body=row["body"],
                attachments=[Attachment(**a) for a in row.get("attachments", [])],
                meta=row.get("meta", {}),
                filter_trace=[tuple(t) for t in row.get("filter_trace", [])],
            )
        )
    return docs
