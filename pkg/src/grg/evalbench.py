"""MCQ benchmark harness: run questions through the engine per mode and
report accuracy overall and by difficulty tier."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .errors import AdapterError, ContractError, DataError

logger = logging.getLogger(__name__)

DIFFICULTIES = ("easy", "intermediate", "hard")
# the stated label set is A-D; files may extend to F when they carry
# five or six options
LABELS = ("A", "B", "C", "D", "E", "F")
ABSTAIN = "abstain"


@dataclass(frozen=True)
class McqQuestion:
    qid: str
    stem: str
    options: tuple[tuple[str, str], ...]  # (label, text)
    answer_key: str
    difficulty: str

    def __post_init__(self):
        if not (2 <= len(self.options) <= 6):
            raise DataError(f"{self.qid}: need 2-6 options, got {len(self.options)}")
        labels = [label for label, _ in self.options]
        if len(set(labels)) != len(labels):
            raise DataError(f"{self.qid}: duplicate option labels")
        for label in labels:
            if label not in LABELS:
                raise DataError(f"{self.qid}: unknown option label {label!r}")
        if self.answer_key not in labels:
            raise DataError(f"{self.qid}: answer_key {self.answer_key!r} not among options")
        if self.difficulty not in DIFFICULTIES:
            raise DataError(f"{self.qid}: unknown difficulty {self.difficulty!r}")

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.options]


@dataclass
class TranscriptRow:
    qid: str
    chosen: str  # label or "abstain"
    correct: bool
    context_chars: int


@dataclass
class EvalReport:
    mode: str
    total: int
    correct: int
    accuracy: float
    per_difficulty: dict[str, dict[str, float]]
    transcript: list[TranscriptRow] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "per_difficulty": self.per_difficulty,
            "transcript": [
                {
                    "qid": r.qid,
                    "chosen": r.chosen,
                    "correct": r.correct,
                    "context_chars": r.context_chars,
                }
                for r in self.transcript
            ],
        }

    def summary_table(self) -> str:
        lines = [
            f"mode: {self.mode}",
            f"overall: {self.correct}/{self.total} = {self.accuracy:.3f}",
        ]
        for tier in DIFFICULTIES:
            stats = self.per_difficulty.get(tier)
            if stats:
                lines.append(
                    f"{tier:>12}: {int(stats['correct'])}/{int(stats['total'])} = {stats['accuracy']:.3f}"
                )
        return "\n".join(lines)


def load_benchmark(path: str | Path) -> list[McqQuestion]:
    """Parse a JSON Lines benchmark; malformed rows are rejected by line."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"benchmark file not found: {path}")
    questions: list[McqQuestion] = []
    seen: dict[str, int] = {}
    rejected: list[str] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            question = McqQuestion(
                qid=row["qid"],
                stem=row["stem"],
                options=tuple((o[0], o[1]) for o in row["options"]),
                answer_key=row["answer_key"],
                difficulty=row["difficulty"],
            )
        except DataError as exc:
            rejected.append(f"line {lineno}: {exc}")
            continue
        except (KeyError, TypeError, IndexError, json.JSONDecodeError) as exc:
            rejected.append(f"line {lineno}: {exc!r}")
            continue
        if question.qid in seen:
            raise DataError(
                f"duplicate qid {question.qid!r} at lines {seen[question.qid]} and {lineno}"
            )
        seen[question.qid] = lineno
        questions.append(question)
    for note in rejected:
        logger.warning("benchmark %s rejected %s", path.name, note)
    if not questions:
        raise DataError(f"no valid questions in {path}" + (f" ({rejected[0]})" if rejected else ""))
    return questions


def write_benchmark(questions: list[McqQuestion], path: str | Path) -> None:
    lines = [
        json.dumps(
            {
                "qid": q.qid,
                "stem": q.stem,
                "options": [[label, text] for label, text in q.options],
                "answer_key": q.answer_key,
                "difficulty": q.difficulty,
            },
            ensure_ascii=False,
        )
        for q in questions
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def parse_choice(generator_output: str, labels: list[str]) -> str:
    """First standalone label character wins; none found means abstain."""
    if not labels:
        raise ContractError("parse_choice requires a non-empty label list")
    wanted = {label.upper() for label in labels}
    for match in re.finditer(r"\b([A-Za-z])\b", generator_output):
        letter = match.group(1).upper()
        if letter in wanted:
            return letter
    return ABSTAIN


def render_query(question: McqQuestion) -> str:
    """Stem plus labeled options; retrieval sees the option terms."""
    lines = [question.stem]
    for label, text in question.options:
        lines.append(f"{label}) {text}")
    return "\n".join(lines)


def run_eval(
    questions: list[McqQuestion],
    answer_fn: Callable[[str], tuple[str, int]],
    mode: str,
) -> EvalReport:
    """Evaluate every question once through answer_fn.

    answer_fn takes the rendered query and returns (generator output,
    context char count).  Generator failures count as abstentions and the
    run continues.  The transcript is assembled in qid order so repeated
    runs compare byte for byte.
    """
    if not questions:
        raise DataError("run_eval requires at least one question")
    transcript: list[TranscriptRow] = []
    for question in sorted(questions, key=lambda q: q.qid):
        try:
            output, context_chars = answer_fn(render_query(question))
            chosen = parse_choice(output, question.labels)
        except AdapterError as exc:
            logger.warning("generator failed on %s: %s", question.qid, exc)
            chosen, context_chars = ABSTAIN, 0
        transcript.append(
            TranscriptRow(
                qid=question.qid,
                chosen=chosen,
                correct=chosen == question.answer_key,
                context_chars=context_chars,
            )
        )

    by_difficulty: dict[str, list[TranscriptRow]] = {}
    question_by_id = {q.qid: q for q in questions}
    for row in transcript:
        by_difficulty.setdefault(question_by_id[row.qid].difficulty, []).append(row)
    per_difficulty = {}
    for tier, rows in sorted(by_difficulty.items()):
        correct = sum(r.correct for r in rows)
        per_difficulty[tier] = {
            "total": len(rows),
            "correct": correct,
            "accuracy": correct / len(rows),
        }
    total = len(transcript)
    correct = sum(r.correct for r in transcript)
    return EvalReport(
        mode=mode,
        total=total,
        correct=correct,
        accuracy=correct / total,
        per_difficulty=per_difficulty,
        transcript=transcript,
    )
