"""Embedding contracts, the deterministic reference embedder, and vector I/O.

All vectors leaving this module are L2-normalized float32, so cosine
similarity downstream reduces to a dot product.
"""

from __future__ import annotations

import hashlib
import json
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .chunking import Chunk
from .errors import ContractError, LoadError

VECTOR_MAGIC = b"GRGV"
VECTOR_VERSION = 1

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass
class EmbeddingVector:
    dim: int
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.shape != (self.dim,):
            raise ContractError(f"vector has {self.values.shape} values, expected ({self.dim},)")
        if not np.all(np.isfinite(self.values)):
            raise ContractError("vector contains non-finite values")
        if self.normalized and abs(float(np.linalg.norm(self.values)) - 1.0) > 1e-6:
            raise ContractError("vector flagged normalized but norm is not 1")


class EmbedderContract(Protocol):
    name: str
    dim: int

    def embed(self, text: str) -> EmbeddingVector: ...


def sentinel_vector(dim: int) -> EmbeddingVector:
    """Fixed unit vector standing in for empty or token-free text."""
    values = np.zeros(dim, dtype=np.float32)
    values[0] = 1.0
    return EmbeddingVector(dim=dim, values=values, normalized=True)


class HashedTrigramEmbedder:
    """Deterministic reference embedder.

    Lowercases, tokenizes on non-alphanumerics, hashes each character
    trigram of each token into one of dim buckets with a fixed seed, counts,
    and L2-normalizes.  Pure: identical output on every platform and run.
    """

    def __init__(self, dim: int, seed: int = 7):
        if dim < 16:
            raise ContractError(f"embedder dim must be >= 16, got {dim}")
        self.name = f"hashed-trigram-{dim}"
        self.dim = dim
        self.seed = seed
        self.concurrent_safe = True

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(f"{self.seed}:{gram}".encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dim

    def embed(self, text: str) -> EmbeddingVector:
        counts = np.zeros(self.dim, dtype=np.float64)
        for token in _TOKEN_RE.findall(text.lower()):
            if len(token) < 3:
                counts[self._bucket(token)] += 1.0
                continue
            for i in range(len(token) - 2):
                counts[self._bucket(token[i : i + 3])] += 1.0
        norm = float(np.linalg.norm(counts))
        if norm == 0.0:
            return sentinel_vector(self.dim)
        values = (counts / norm).astype(np.float32)
        # renormalize in float32 so stored and computed norms agree
        values /= np.linalg.norm(values)
        return EmbeddingVector(dim=self.dim, values=values, normalized=True)


def test_embedder(dim: int) -> HashedTrigramEmbedder:
    """The reference embedder used by tests and stub configurations."""
    return HashedTrigramEmbedder(dim=dim)


# pytest must not collect the factory as a test
test_embedder.__test__ = False


def embed_text(text: str, embedder: EmbedderContract) -> EmbeddingVector:
    """Embed through any backend, normalizing on the engine side."""
    if not text:
        return sentinel_vector(embedder.dim)
    vec = embedder.embed(text)
    if vec.dim != embedder.dim:
        raise ContractError(f"backend returned dim {vec.dim}, embedder declares {embedder.dim}")
    norm = float(np.linalg.norm(vec.values))
    if norm == 0.0:
        return sentinel_vector(embedder.dim)
    values = (vec.values / norm).astype(np.float32)
    return EmbeddingVector(dim=embedder.dim, values=values, normalized=True)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity in [-1, 1]; zero vectors compare as 0."""
    if a.dim != b.dim:
        raise ContractError(f"cosine dim mismatch: {a.dim} vs {b.dim}")
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        return 0.0
    value = float(np.dot(av, bv) / (na * nb))
    return max(-1.0, min(1.0, value))


# ---------------------------------------------------------------------------
# chunk and vector stores


def write_chunks(chunks: list[Chunk], path: str | Path) -> None:
    lines = [
        json.dumps(
            {"chunk_id": c.chunk_id, "doc_id": c.doc_id, "span": list(c.span), "text": c.text},
            ensure_ascii=False,
        )
        for c in chunks
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_chunks(path: str | Path) -> list[Chunk]:
    chunks = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        chunks.append(
            Chunk(
                chunk_id=row["chunk_id"],
                doc_id=row["doc_id"],
                span=(row["span"][0], row["span"][1]),
                text=row["text"],
            )
        )
    return chunks


def write_vectors(pairs: list[tuple[str, EmbeddingVector]], fh) -> None:
    """Binary vector section: GRGV header then length-prefixed records."""
    if not pairs:
        raise ContractError("refusing to write an empty vector store")
    dim = pairs[0][1].dim
    fh.write(VECTOR_MAGIC)
    fh.write(struct.pack("<IIQ", VECTOR_VERSION, dim, len(pairs)))
    for chunk_id, vec in pairs:
        if vec.dim != dim:
            raise ContractError(f"inconsistent dim for {chunk_id}: {vec.dim} != {dim}")
        encoded = chunk_id.encode("utf-8")
        fh.write(struct.pack("<I", len(encoded)))
        fh.write(encoded)
        fh.write(np.asarray(vec.values, dtype="<f4").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise LoadError(f"vector file truncated while reading {what}")
    return data


def read_vectors(fh) -> list[tuple[str, EmbeddingVector]]:
    magic = _read_exact(fh, 4, "magic")
    if magic != VECTOR_MAGIC:
        raise LoadError(f"bad vector magic {magic!r}")
    version, dim, count = struct.unpack("<IIQ", _read_exact(fh, 16, "header"))
    if version != VECTOR_VERSION:
        raise LoadError(f"unsupported vector file version {version}")
    pairs = []
    for _ in range(count):
        (id_len,) = struct.unpack("<I", _read_exact(fh, 4, "record id length"))
        chunk_id = _read_exact(fh, id_len, "record id").decode("utf-8")
        raw = _read_exact(fh, dim * 4, f"vector for {chunk_id}")
        values = np.frombuffer(raw, dtype="<f4").copy()
        pairs.append((chunk_id, EmbeddingVector(dim=dim, values=values)))
    return pairs
