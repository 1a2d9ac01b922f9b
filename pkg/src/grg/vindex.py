"""Top-k similarity index over normalized chunk vectors.

Exact mode is a brute-force dot-product scan and is the correctness oracle
for the approximate mode, a single-layer navigable small-world graph.
Scores are cosine on pre-normalized vectors, i.e. plain dot products.
"""

from __future__ import annotations

import heapq
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import EmbeddingVector, read_vectors, write_vectors
from .errors import BuildError, ContractError, LoadError

INDEX_MAGIC = b"GRGI"
INDEX_VERSION = 1
NO_ENTRY = 0xFFFFFFFFFFFFFFFF

DEFAULT_M = 16
DEFAULT_BUILD_BEAM = 128
DEFAULT_QUERY_BEAM = 64


@dataclass(frozen=True)
class SearchHit:
    chunk_id: str
    score: float
    rank: int


@dataclass
class SmallWorldParams:
    m: int = DEFAULT_M
    build_beam: int = DEFAULT_BUILD_BEAM
    query_beam: int = DEFAULT_QUERY_BEAM


@dataclass
class VectorIndex:
    dim: int
    mode: str  # "exact" | "approximate"
    chunk_ids: list[str]
    matrix: np.ndarray  # float32, rows normalized
    params: SmallWorldParams = field(default_factory=SmallWorldParams)
    neighbors: list[list[int]] = field(default_factory=list)
    entry_point: int | None = None

    def __post_init__(self):
        self._ids_arr = np.array(self.chunk_ids)

    def __len__(self) -> int:
        return len(self.chunk_ids)


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise BuildError("zero vector cannot be indexed")
    return (matrix / norms).astype(np.float32)


def build_index(
    pairs: list[tuple[str, EmbeddingVector]],
    mode: str = "exact",
    params: SmallWorldParams | None = None,
) -> VectorIndex:
    """Build an immutable index from (chunk_id, vector) pairs."""
    if not pairs:
        raise BuildError("cannot build an index from zero vectors")
    if mode not in ("exact", "approximate"):
        raise ContractError(f"unknown index mode {mode!r}")
    seen: set[str] = set()
    for chunk_id, _ in pairs:
        if chunk_id in seen:
            raise BuildError(f"duplicate chunk_id in index build: {chunk_id}")
        seen.add(chunk_id)
    dim = pairs[0][1].dim
    for chunk_id, vec in pairs:
        if vec.dim != dim:
            raise BuildError(f"dim mismatch for {chunk_id}: {vec.dim} != {dim}")
    matrix = _normalize_rows(np.stack([p[1].values for p in pairs]).astype(np.float32))
    index = VectorIndex(
        dim=dim,
        mode=mode,
        chunk_ids=[p[0] for p in pairs],
        matrix=matrix,
        params=params or SmallWorldParams(),
    )
    if mode == "approximate":
        _build_small_world(index)
    return index


def _beam_search(
    index: VectorIndex, query: np.ndarray, beam: int, limit: int | None = None
) -> list[tuple[float, int]]:
    """Deterministic best-first walk of the neighbor graph.

    Returns up to beam (score, node) pairs ordered best-first; ties break
    on chunk_id ascending.  limit restricts the walk to nodes below limit,
    which the incremental build uses.
    """
    n = len(index) if limit is None else limit
    if n == 0:
        return []

    def key(score: float, node: int) -> tuple[float, str]:
        return (-score, index.chunk_ids[node])

    entry = index.entry_point if index.entry_point is not None and index.entry_point < n else 0
    entry_score = float(np.dot(index.matrix[entry], query))
    frontier = [(key(entry_score, entry), entry_score, entry)]
    best: list[tuple[float, int]] = [(entry_score, entry)]
    visited = {entry}
    while frontier:
        node_key, _, node = heapq.heappop(frontier)
        if len(best) >= beam and node_key > max(key(s, i) for s, i in best):
            break  # frontier is best-first, nothing can improve the beam
        fresh = [nb for nb in index.neighbors[node] if nb not in visited and nb < n]
        if not fresh:
            continue
        visited.update(fresh)
        scores = index.matrix[fresh] @ query
        for nb, nb_score in zip(fresh, scores):
            nb_score = float(nb_score)
            best.append((nb_score, nb))
            heapq.heappush(frontier, (key(nb_score, nb), nb_score, nb))
        if len(best) > beam:
            best.sort(key=lambda t: key(t[0], t[1]))
            del best[beam:]
    best.sort(key=lambda t: key(t[0], t[1]))
    return best[:beam]


def _build_small_world(index: VectorIndex) -> None:
    """Insert nodes in input order, wiring each to its m nearest so far."""
    n = len(index)
    m = index.params.m
    max_degree = 2 * m
    index.neighbors = [[] for _ in range(n)]
    index.entry_point = 0
    for node in range(1, n):
        found = _beam_search(index, index.matrix[node], beam=index.params.build_beam, limit=node)
        links = [other for _, other in found[:m]]
        index.neighbors[node] = list(links)
        for other in links:
            index.neighbors[other].append(node)
            if len(index.neighbors[other]) > max_degree:
                scores = index.matrix[index.neighbors[other]] @ index.matrix[other]
                ranked = sorted(
                    zip(index.neighbors[other], scores),
                    key=lambda t: (-float(t[1]), index.chunk_ids[t[0]]),
                )
                index.neighbors[other] = [nb for nb, _ in ranked[:max_degree]]


def search(index: VectorIndex, query: EmbeddingVector, k: int) -> list[SearchHit]:
    """Top-k by cosine with (score desc, chunk_id asc) tie-break.

    Exact mode scans everything and is authoritative; approximate mode
    walks the small-world graph with the configured query beam.  k larger
    than the index returns every entry.
    """
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    if query.dim != index.dim:
        raise ContractError(f"query dim {query.dim} != index dim {index.dim}")
    qnorm = float(np.linalg.norm(query.values))
    q = query.values.astype(np.float32)
    if qnorm > 0:
        q = q / qnorm
    if index.mode == "exact":
        scores = index.matrix @ q
        order = np.lexsort((index._ids_arr, -scores))
        top = [(float(scores[i]), int(i)) for i in order[:k]]
    else:
        beam = max(index.params.query_beam, k)
        top = _beam_search(index, q, beam=beam)[:k]
    return [
        SearchHit(chunk_id=index.chunk_ids[i], score=score, rank=rank)
        for rank, (score, i) in enumerate(top, start=1)
    ]


# ---------------------------------------------------------------------------
# persistence: GRGV vector section followed by a GRGI index section


def persist(index: VectorIndex, path: str | Path) -> None:
    """Write the index; the final rename is atomic so concurrent readers
    see either the old file or the new one, never a partial write."""
    path = Path(path)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    pairs = [
        (chunk_id, EmbeddingVector(dim=index.dim, values=index.matrix[i]))
        for i, chunk_id in enumerate(index.chunk_ids)
    ]
    with open(tmp_path, "wb") as fh:
        write_vectors(pairs, fh)
        fh.write(INDEX_MAGIC)
        mode_byte = 0 if index.mode == "exact" else 1
        fh.write(struct.pack("<IB", INDEX_VERSION, mode_byte))
        if index.mode == "approximate":
            p = index.params
            entry = NO_ENTRY if index.entry_point is None else index.entry_point
            fh.write(struct.pack("<IIIQQ", p.m, p.build_beam, p.query_beam, entry, len(index)))
            for links in index.neighbors:
                fh.write(struct.pack("<I", len(links)))
                fh.write(struct.pack(f"<{len(links)}I", *links))
    os.replace(tmp_path, path)


def load(path: str | Path) -> VectorIndex:
    with open(path, "rb") as fh:
        pairs = read_vectors(fh)
        magic = fh.read(4)
        if magic != INDEX_MAGIC:
            raise LoadError(f"bad index magic {magic!r}")
        header = fh.read(5)
        if len(header) != 5:
            raise LoadError("index file truncated in header")
        version, mode_byte = struct.unpack("<IB", header)
        if version != INDEX_VERSION:
            raise LoadError(f"unsupported index version {version}")
        if mode_byte not in (0, 1):
            raise LoadError(f"unknown index mode byte {mode_byte}")
        mode = "exact" if mode_byte == 0 else "approximate"
        if not pairs:
            raise LoadError("index file holds no vectors")
        index = VectorIndex(
            dim=pairs[0][1].dim,
            mode=mode,
            chunk_ids=[p[0] for p in pairs],
            matrix=np.stack([p[1].values for p in pairs]).astype(np.float32),
        )
        if mode == "approximate":
            raw = fh.read(28)
            if len(raw) != 28:
                raise LoadError("index file truncated in graph parameters")
            m, build_beam, query_beam, entry, count = struct.unpack("<IIIQQ", raw)
            if count != len(index):
                raise LoadError(f"index node count {count} != vector count {len(index)}")
            index.params = SmallWorldParams(m=m, build_beam=build_beam, query_beam=query_beam)
            index.entry_point = None if entry == NO_ENTRY else entry
            neighbors = []
            for node in range(count):
                raw = fh.read(4)
                if len(raw) != 4:
                    raise LoadError(f"index file truncated at node {node}")
                (degree,) = struct.unpack("<I", raw)
                raw = fh.read(4 * degree)
                if len(raw) != 4 * degree:
                    raise LoadError(f"index file truncated in neighbors of node {node}")
                neighbors.append(list(struct.unpack(f"<{degree}I", raw)))
            index.neighbors = neighbors
        return index
