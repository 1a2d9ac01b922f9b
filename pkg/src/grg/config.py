"""Engine configuration: one JSON file, one source of truth for defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import engine, mmio, vindex
from .chunking import ChunkPolicy
from .errors import ConfigError

STORE_ROOT_ENV = "GRG_STORE_ROOT"

ADAPTER_ROLES = ("generator", "judge", "extractor", "captioner", "ocr")


@dataclass
class AdapterConfig:
    kind: str = "stub"  # "stub" | "http"
    endpoint: str = ""
    params: dict = field(default_factory=dict)

    def validate(self, role: str) -> None:
        if self.kind not in ("stub", "http"):
            raise ConfigError(f"adapter {role}: kind must be stub or http, got {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise ConfigError(f"adapter {role}: http adapter needs an endpoint")


@dataclass
class EngineConfig:
    store_root: Path
    chunking: ChunkPolicy = field(default_factory=ChunkPolicy)
    embedder_name: str = "test"
    embedder_dim: int = 64
    index_mode: str = "exact"
    index_params: vindex.SmallWorldParams = field(default_factory=vindex.SmallWorldParams)
    k: int = engine.DEFAULT_K
    depth: int = engine.DEFAULT_DEPTH
    budget_chars: int = engine.DEFAULT_BUDGET_CHARS
    facts_first: bool = True
    confidence_threshold: float = mmio.DEFAULT_CONFIDENCE_THRESHOLD
    default_mode: str = "grg"
    keywords_path: Path | None = None
    denylist_path: Path | None = None
    use_keyword_filter: bool = True
    use_judge_filter: bool = True
    judge_topics: list[str] = field(default_factory=list)
    judge_min_ttr: float = 0.25
    mmio_fixtures_path: Path | None = None
    adapters: dict[str, AdapterConfig] = field(default_factory=dict)

    def __post_init__(self):
        for role in ADAPTER_ROLES:
            self.adapters.setdefault(role, AdapterConfig())

    def validate(self) -> None:
        self.chunking.validate()
        if self.index_mode not in ("exact", "approximate"):
            raise ConfigError(f"index mode must be exact or approximate, got {self.index_mode!r}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.depth not in (1, 2):
            raise ConfigError("depth must be 1 or 2")
        if self.budget_chars < engine.MIN_BUDGET_CHARS:
            raise ConfigError(f"budget_chars must be >= {engine.MIN_BUDGET_CHARS}")
        if not (0.0 <= self.confidence_threshold <= 1.0):
            raise ConfigError("confidence threshold out of [0,1]")
        if self.default_mode not in engine.MODES:
            raise ConfigError(f"default mode must be one of {engine.MODES}")
        if self.embedder_dim < 16:
            raise ConfigError("embedder dim must be >= 16")
        for path in (self.keywords_path, self.denylist_path, self.mmio_fixtures_path):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"configured path does not exist: {path}")
        for role, adapter in self.adapters.items():
            adapter.validate(role)


def _path_or_none(base: Path, value) -> Path | None:
    if value in (None, ""):
        return None
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_config(path: str | Path) -> EngineConfig:
    """Parse and validate a config file; env var overrides store_root."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    base = path.parent
    store_root = os.environ.get(STORE_ROOT_ENV) or data.get("store_root")
    if not store_root:
        raise ConfigError("config needs store_root (or set " + STORE_ROOT_ENV + ")")
    store_root = Path(store_root)
    if not store_root.is_absolute():
        store_root = base / store_root

    chunking = data.get("chunking", {})
    index_cfg = data.get("index", {})
    retrieval = data.get("retrieval", {})
    pipeline = data.get("pipeline", {})
    mmio_cfg = data.get("mmio", {})
    embedder = data.get("embedder", {})
    adapters = {
        role: AdapterConfig(
            kind=entry.get("kind", "stub"),
            endpoint=entry.get("endpoint", ""),
            params=entry.get("params", {}),
        )
        for role, entry in data.get("adapters", {}).items()
    }
    config = EngineConfig(
        store_root=store_root,
        chunking=ChunkPolicy(
            target_chars=chunking.get("target_chars", 1200),
            overlap_chars=chunking.get("overlap_chars", 200),
        ),
        embedder_name=embedder.get("name", "test"),
        embedder_dim=embedder.get("dim", 64),
        index_mode=index_cfg.get("mode", "exact"),
        index_params=vindex.SmallWorldParams(
            m=index_cfg.get("m", vindex.DEFAULT_M),
            build_beam=index_cfg.get("build_beam", vindex.DEFAULT_BUILD_BEAM),
            query_beam=index_cfg.get("query_beam", vindex.DEFAULT_QUERY_BEAM),
        ),
        k=retrieval.get("k", engine.DEFAULT_K),
        depth=retrieval.get("depth", engine.DEFAULT_DEPTH),
        budget_chars=retrieval.get("budget_chars", engine.DEFAULT_BUDGET_CHARS),
        facts_first=retrieval.get("facts_first", True),
        confidence_threshold=mmio_cfg.get("confidence_threshold", mmio.DEFAULT_CONFIDENCE_THRESHOLD),
        default_mode=retrieval.get("mode", "grg"),
        keywords_path=_path_or_none(base, pipeline.get("keywords")),
        denylist_path=_path_or_none(base, pipeline.get("denylist")),
        use_keyword_filter=pipeline.get("use_keyword_filter", True),
        use_judge_filter=pipeline.get("use_judge_filter", True),
        judge_topics=pipeline.get("judge", {}).get("topics", []),
        judge_min_ttr=pipeline.get("judge", {}).get("min_ttr", 0.25),
        mmio_fixtures_path=_path_or_none(base, mmio_cfg.get("fixtures")),
        adapters=adapters,
    )
    config.validate()
    return config
