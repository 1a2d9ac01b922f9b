"""Answer generator contract plus the deterministic needle mock.

The mock stands in for a hosted model during tests and ablations: it
answers correctly exactly when a designated needle string is visible in
the request, scanning the user query first and then the context blocks in
order.  That makes retrieval quality directly observable in accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

from .errors import AdapterError

DEFAULT_SYSTEM_PREAMBLE = (
    "Answer the question using the provided context; cite nothing outside it."
)


@dataclass(frozen=True)
class ContextBlock:
    kind: str  # "facts" | "chunk"
    ref: str | None  # chunk_id for chunk blocks
    text: str


@dataclass
class GenerationRequest:
    system: str
    blocks: list[ContextBlock]
    query: str


@dataclass
class GenerationResponse:
    answer: str
    generator: str
    usage: dict[str, int] = field(default_factory=dict)


class GeneratorClient(Protocol):
    name: str

    def generate(self, request: GenerationRequest) -> GenerationResponse: ...


class NeedleMockGenerator:
    """Deterministic mock keyed on needle strings.

    Scan order is the query text, then each context block in order.  The
    earliest-positioned configured needle wins; ties at the same position
    resolve by configuration order.  No needle means the default answer.
    """

    name = "needle-mock"

    def __init__(self, needle_answers: list[tuple[str, str]], default_answer: str = "none of these options can be confirmed"):
        self.needle_answers = list(needle_answers)
        self.default_answer = default_answer

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        segments = [request.query] + [b.text for b in request.blocks]
        best: tuple[int, int, str] | None = None
        for order, (needle, answer) in enumerate(self.needle_answers):
            for seg_idx, segment in enumerate(segments):
                pos = segment.find(needle)
                if pos < 0:
                    continue
                candidate = (seg_idx * 10**9 + pos, order, answer)
                if best is None or candidate < best:
                    best = candidate
                break
        answer = best[2] if best else self.default_answer
        usage = {"request_chars": sum(len(s) for s in segments)}
        return GenerationResponse(answer=answer, generator=self.name, usage=usage)


class FailingGenerator:
    """Test double that always fails at transport level."""

    name = "failing"

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        raise AdapterError("generator unavailable", retryable=True)
