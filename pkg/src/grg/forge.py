"""Instruction-tuning record generation, quality filtering, and export.

Records carry exactly four fields (Instruction, Input, Output, Metadata)
on the wire.  The stub question generator derives cloze-style QA from
declarative sentences so every answer is grounded in its source chunk by
construction; LLM-backed generators are checked by the same containment
heuristic and flagged when it fails.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .chunking import Chunk
from .errors import AdapterError, ContractError, DataError

logger = logging.getLogger(__name__)

DEFAULT_INSTRUCTION = "This is a Question and Answer task related to 3GPP."

MIN_ANSWER_CHARS = 3
MAX_ANSWER_CHARS = 400


@dataclass(frozen=True)
class InstructionRecord:
    instruction: str
    input: str
    output: str
    metadata: str = ""

    def validate(self) -> None:
        if not self.instruction or not self.input or not self.output:
            raise DataError("instruction, input, and output must all be non-empty")


@dataclass(frozen=True)
class TrainingConfig:
    phase: str  # "pretrain" | "finetune"
    initial_lr: float
    scheduler: str = "cosine"
    optimizer: str = "adam"
    lora_rank: int = 8
    lora_scale: int = 16
    precision: str = "bf16"

    def validate(self) -> None:
        if self.phase not in ("pretrain", "finetune"):
            raise DataError(f"unknown training phase {self.phase!r}")
        if self.initial_lr <= 0:
            raise DataError("learning rate must be positive")
        if self.lora_rank <= 0 or self.lora_scale <= 0:
            raise DataError("LoRA rank and scale must be positive")


def default_training_configs() -> list[TrainingConfig]:
    return [
        TrainingConfig(phase="pretrain", initial_lr=5e-6),
        TrainingConfig(phase="finetune", initial_lr=1e-5),
    ]


@dataclass(frozen=True)
class QaPair:
    question: str
    answer: str
    chunk: Chunk


class QaGeneratorClient(Protocol):
    name: str

    def generate(self, chunk: Chunk) -> list[tuple[str, str]]: ...


_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


def _decap_article(phrase: str) -> str:
    first, _, rest = phrase.partition(" ")
    if first in ("The", "A", "An") and rest:
        return first.lower() + " " + rest
    return phrase


class ClozeStubGenerator:
    """Deterministic QA from declarative sentences.

    'X serves as Y.' asks for the purpose of X and answers with the whole
    sentence; 'X is Y.' asks what X is and answers Y.  Both answers are
    substrings of the chunk, so stub output always passes grounding.
    """

    name = "cloze-stub"

    _SERVES_RE = re.compile(r"^(.{3,120}?)\s+serves\s+as\s+.+$", re.DOTALL)
    _IS_RE = re.compile(r"^(.{3,80}?)\s+is\s+(.{3,}?)[.!?]?$", re.DOTALL)

    def generate(self, chunk: Chunk) -> list[tuple[str, str]]:
        pairs = []
        for sentence in _SENTENCE_SPLIT_RE.split(chunk.text.strip()):
            sentence = sentence.strip()
            if not sentence:
                continue
            m = self._SERVES_RE.match(sentence)
            if m:
                subject = _decap_article(m.group(1).strip())
                pairs.append((f"What is the purpose of {subject}?", sentence))
                continue
            m = self._IS_RE.match(sentence)
            if m:
                subject = _decap_article(m.group(1).strip())
                pairs.append((f"What is {subject}?", m.group(2).strip()))
        return pairs


def is_grounded(answer: str, chunk_text: str) -> bool:
    return answer.lower() in chunk_text.lower()


def generate_qa(
    chunk: Chunk, generator: QaGeneratorClient, instruction_template: str = DEFAULT_INSTRUCTION
) -> list[QaPair]:
    """Generate QA pairs for one chunk; generator failure skips the chunk."""
    if not chunk.text.strip():
        return []
    try:
        raw_pairs = generator.generate(chunk)
    except AdapterError as exc:
        logger.warning("qa generator failed on %s, skipping: %s", chunk.chunk_id, exc)
        return []
    pairs = []
    for question, answer in raw_pairs:
        if not question.strip() or not answer.strip():
            continue
        if not is_grounded(answer, chunk.text):
            logger.warning("ungrounded answer flagged for %s: %r", chunk.chunk_id, answer[:60])
        pairs.append(QaPair(question=question, answer=answer, chunk=chunk))
    return pairs


def format_metadata(chunk: Chunk) -> str:
    start, end = chunk.span
    return f"{chunk.doc_id}, span [{start},{end})"


def build_records(
    qa_pairs: list[QaPair], instruction_template: str = DEFAULT_INSTRUCTION
) -> list[InstructionRecord]:
    """One record per pair, metadata pointing back at the source span."""
    if not instruction_template:
        raise ContractError("instruction template must be non-empty")
    records = []
    for pair in qa_pairs:
        record = InstructionRecord(
            instruction=instruction_template,
            input=pair.question,
            output=pair.answer,
            metadata=format_metadata(pair.chunk),
        )
        record.validate()
        records.append(record)
    return records


# ---------------------------------------------------------------------------
# quality assessment


@dataclass
class RecordScore:
    score: float
    reason: str = ""


class QualityJudgeClient(Protocol):
    def score_record(self, record: InstructionRecord, source_text: str | None) -> RecordScore: ...


class StubQualityJudge:
    """Deterministic scoring: grounding plus answer length bounds."""

    def score_record(self, record: InstructionRecord, source_text: str | None) -> RecordScore:
        n = len(record.output)
        if not (MIN_ANSWER_CHARS <= n <= MAX_ANSWER_CHARS):
            return RecordScore(0.0, f"length {n} outside [{MIN_ANSWER_CHARS},{MAX_ANSWER_CHARS}]")
        if source_text is not None and not is_grounded(record.output, source_text):
            return RecordScore(0.0, "ungrounded")
        return RecordScore(1.0, "ok")


def assess_quality(
    records: list[InstructionRecord],
    judge: QualityJudgeClient,
    min_score: float = 0.5,
    sources: dict[int, str] | None = None,
) -> tuple[list[InstructionRecord], list[tuple[InstructionRecord, str]]]:
    """Partition records into kept and rejected-with-reason.

    Deduplication is a whole-set rule: the second copy of an identical
    record is rejected as a duplicate.  kept + rejected covers the input
    exactly once.
    """
    if not (0.0 <= min_score <= 1.0):
        raise ContractError(f"min_score {min_score} out of [0,1]")
    kept: list[InstructionRecord] = []
    rejected: list[tuple[InstructionRecord, str]] = []
    seen: set[tuple[str, str, str]] = set()
    for i, record in enumerate(records):
        key = (record.instruction, record.input, record.output)
        if key in seen:
            rejected.append((record, "duplicate"))
            continue
        source_text = sources.get(i) if sources else None
        verdict = judge.score_record(record, source_text)
        if verdict.score >= min_score:
            seen.add(key)
            kept.append(record)
        else:
            rejected.append((record, verdict.reason))
    return kept, rejected


# ---------------------------------------------------------------------------
# wire format: four capitalized JSONL fields


def record_to_line(record: InstructionRecord) -> str:
    return json.dumps(
        {
            "Instruction": record.instruction,
            "Input": record.input,
            "Output": record.output,
            "Metadata": record.metadata,
        },
        ensure_ascii=False,
    )


def record_from_line(line: str) -> InstructionRecord:
    try:
        row = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"bad record line: {exc}") from exc
    missing = [k for k in ("Instruction", "Input", "Output") if k not in row]
    if missing:
        raise DataError(f"record missing fields {missing}")
    record = InstructionRecord(
        instruction=row["Instruction"],
        input=row["Input"],
        output=row["Output"],
        metadata=row.get("Metadata", ""),
    )
    record.validate()
    return record


def export_records(records: list[InstructionRecord], path: str | Path) -> None:
    Path(path).write_text(
        "\n".join(record_to_line(r) for r in records) + ("\n" if records else ""),
        encoding="utf-8",
    )


def import_records(path: str | Path) -> list[InstructionRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(record_from_line(line))
    return records


def export_training_bundle(
    records: list[InstructionRecord],
    configs: list[TrainingConfig] | None,
    out_dir: str | Path,
) -> dict[str, str]:
    """Write the records file and the training-config record.

    Returns the paths written, keyed by artifact name.
    """
    if not records:
        raise DataError("nothing to export: no records")
    configs = configs if configs is not None else default_training_configs()
    for config in configs:
        config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.jsonl"
    config_path = out_dir / "training_config.json"
    export_records(records, records_path)
    config_path.write_text(
        json.dumps(
            {
                "configs": [
                    {
                        "phase": c.phase,
                        "initial_lr": c.initial_lr,
                        "scheduler": c.scheduler,
                        "optimizer": c.optimizer,
                        "lora_rank": c.lora_rank,
                        "lora_scale": c.lora_scale,
                        "precision": c.precision,
                    }
                    for c in configs
                ]
            },
            ensure_ascii=False,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return {"records": str(records_path), "training_config": str(config_path)}
