"""Entity and relation extraction contracts with a deterministic stub.

The pattern stub recognizes simple subject-verb-object sentences over
entity-like tokens (acronyms, capitalized names, code-style identifiers),
which keeps graph construction fully testable offline.  LLM-backed
extraction plugs in behind the same contract.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol


@dataclass(frozen=True)
class RawTriple:
    subject: str
    predicate: str
    object: str
    confidence: float
    subject_type: str = "component"
    object_type: str = "component"


class ExtractorClient(Protocol):
    name: str

    def extract_triples(self, text: str) -> list[RawTriple]: ...

    def extract_mentions(self, text: str) -> list[tuple[str, str]]: ...


STUB_PREDICATES = (
    "connects to",
    "routes to",
    "selects",
    "uses",
    "manages",
    "requires",
    "contains",
    "serves",
    "binds",
)

_ARTICLES = {"the", "a", "an"}
# accepts ALLCAPS, Capitalized, digit-led, and mixed-case names like gNB
_ENTITY_TOKEN_RE = re.compile(r"^(?=.*[A-Z0-9])[A-Za-z0-9_-]+$")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


def _is_entity_token(word: str) -> bool:
    stripped = word.strip(".,;:!?()[]\"'")
    if not stripped or stripped.lower() in _ARTICLES:
        return False
    return bool(_ENTITY_TOKEN_RE.match(stripped))


def _clean(word: str) -> str:
    return word.strip(".,;:!?()[]\"'")


def entity_runs(text: str) -> list[str]:
    """Maximal runs of entity-like tokens, in order of first appearance."""
    runs: list[str] = []
    current: list[str] = []
    for word in text.split():
        if _is_entity_token(word):
            current.append(_clean(word))
        elif current:
            runs.append(" ".join(current))
            current = []
    if current:
        runs.append(" ".join(current))
    return runs


class PatternStubExtractor:
    """Rule-based extractor over 'X <verb> Y' sentences."""

    name = "pattern-stub"

    def __init__(self, predicates: tuple[str, ...] = STUB_PREDICATES):
        # longest first so "connects to" wins over a bare "connects"
        ordered = sorted(predicates, key=len, reverse=True)
        self._pred_re = re.compile(
            r"\b(" + "|".join(re.escape(p) for p in ordered) + r")\b"
        )

    def extract_triples(self, text: str) -> list[RawTriple]:
        triples = []
        for sentence in _SENTENCE_SPLIT_RE.split(text):
            match = self._pred_re.search(sentence)
            if not match:
                continue
            before = entity_runs(sentence[: match.start()])
            after = entity_runs(sentence[match.end() :])
            if not before or not after:
                continue
            # subject is the run nearest the verb, object the first run after
            triples.append(
                RawTriple(
                    subject=before[-1],
                    predicate=match.group(1),
                    object=after[0],
                    confidence=1.0,
                )
            )
        return triples

    def extract_mentions(self, text: str) -> list[tuple[str, str]]:
        return [(run, "component") for run in entity_runs(text)]
