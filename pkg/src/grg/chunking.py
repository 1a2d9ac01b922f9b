"""Character-window document chunking with overlap and whitespace snapping."""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import CleanDocument
from .errors import ContractError

SNAP_WINDOW = 40


@dataclass(frozen=True)
class ChunkPolicy:
    target_chars: int = 1200
    overlap_chars: int = 200

    def validate(self) -> None:
        if not (self.target_chars > self.overlap_chars >= 0):
            raise ContractError(
                f"require target_chars > overlap_chars >= 0, got {self.target_chars}/{self.overlap_chars}"
            )


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    span: tuple[int, int]  # half-open [start, end)
    text: str


def _snap_backward(body: str, raw_end: int, min_end: int) -> int:
    """Move a split point back to just after the nearest whitespace.

    Searches at most SNAP_WINDOW characters; falls back to the hard split
    when no whitespace is found or the snap would stall progress.
    """
    lo = max(raw_end - SNAP_WINDOW, min_end)
    for i in range(raw_end - 1, lo - 1, -1):
        if body[i].isspace():
            if i + 1 > min_end:
                return i + 1
            break
    return raw_end


def chunk_document(doc: CleanDocument, policy: ChunkPolicy = ChunkPolicy()) -> list[Chunk]:
    """Split a body into overlapping chunks that reconstruct it exactly.

    Every chunk after the first starts exactly overlap_chars before the end
    of its predecessor, so dropping that prefix from each later chunk and
    concatenating reproduces the body byte for byte.
    """
    policy.validate()
    body = doc.body
    if not body:
        return []
    chunks: list[Chunk] = []
    pos = 0
    ordinal = 0
    while pos < len(body):
        raw_end = min(pos + policy.target_chars, len(body))
        if raw_end < len(body):
            # progress guard: next start is end - overlap and must advance
            end = _snap_backward(body, raw_end, min_end=pos + policy.overlap_chars + 1)
        else:
            end = raw_end
        chunks.append(
            Chunk(
                chunk_id=f"{doc.doc_id}#{ordinal}",
                doc_id=doc.doc_id,
                span=(pos, end),
                text=body[pos:end],
            )
        )
        ordinal += 1
        if end >= len(body):
            break
        pos = end - policy.overlap_chars
    return chunks


def reconstruct(chunks: list[Chunk], overlap_chars: int) -> str:
    """Overlap-aware concatenation; inverse of chunk_document."""
    parts = []
    for i, chunk in enumerate(chunks):
        parts.append(chunk.text if i == 0 else chunk.text[overlap_chars:])
    return "".join(parts)
