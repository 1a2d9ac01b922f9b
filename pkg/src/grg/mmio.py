"""Image-to-text adapters: semantic captioning and OCR, plus query fusion.

Neural captioner/OCR services stay out of process behind two contracts;
the fixture stubs make every consumer testable offline.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .errors import AdapterError, ContractError, DataError

logger = logging.getLogger(__name__)

IMAGE_FORMATS = ("png", "jpg", "jpeg", "gif", "bmp")
DEFAULT_CONFIDENCE_THRESHOLD = 0.5

CAPTION_LABEL = "[image]"
OCR_LABEL = "[ocr]"


@dataclass
class ImageInput:
    image_id: str
    format: str = "png"
    payload: bytes | None = None
    locator: str | None = None

    def __post_init__(self):
        if self.format not in IMAGE_FORMATS:
            raise DataError(f"image format {self.format!r} not in allowlist {IMAGE_FORMATS}")
        if not self.payload and not self.locator and not self.image_id:
            raise DataError("image input needs a payload, locator, or id")


@dataclass(frozen=True)
class Caption:
    text: str
    source: str


@dataclass(frozen=True)
class OcrToken:
    text: str
    confidence: float
    bbox: tuple[int, int, int, int]  # x, y, w, h

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise DataError(f"ocr confidence {self.confidence} out of [0,1]")
        if any(v < 0 for v in self.bbox):
            raise DataError(f"ocr bbox {self.bbox} has negative component")


class CaptionerClient(Protocol):
    name: str

    def caption(self, img: ImageInput) -> str: ...


class OcrClient(Protocol):
    name: str

    def read(self, img: ImageInput) -> list[OcrToken]: ...


class FixtureStub:
    """Deterministic captioner and OCR backed by an image_id lookup table.

    Table shape: {image_id: {"caption": str,
                             "tokens": [{"text", "confidence", "bbox"}]}}
    """

    name = "fixture-stub"

    def __init__(self, table: dict):
        self.table = table

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureStub":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def caption(self, img: ImageInput) -> str:
        entry = self.table.get(img.image_id)
        if entry is None or not entry.get("caption"):
            raise AdapterError(f"no caption fixture for image {img.image_id!r}")
        return entry["caption"]

    def read(self, img: ImageInput) -> list[OcrToken]:
        entry = self.table.get(img.image_id)
        if entry is None:
            raise AdapterError(f"no ocr fixture for image {img.image_id!r}")
        return [
            OcrToken(text=t["text"], confidence=t["confidence"], bbox=tuple(t["bbox"]))
            for t in entry.get("tokens", [])
        ]


def caption_image(img: ImageInput, captioner: CaptionerClient) -> Caption:
    try:
        text = captioner.caption(img)
    except AdapterError:
        raise
    except Exception as exc:  # noqa: BLE001 - wrap backend faults uniformly
        raise AdapterError(f"captioner {captioner.name} failed: {exc}", retryable=True) from exc
    if not text:
        raise AdapterError(f"captioner {captioner.name} returned empty caption")
    return Caption(text=text, source=captioner.name)


def ocr_image(img: ImageInput, ocr: OcrClient) -> list[OcrToken]:
    """Tokens come back ordered top-to-bottom then left-to-right."""
    try:
        tokens = ocr.read(img)
    except AdapterError:
        raise
    except Exception as exc:  # noqa: BLE001
        raise AdapterError(f"ocr {ocr.name} failed: {exc}", retryable=True) from exc
    return sorted(tokens, key=lambda t: (t.bbox[1], t.bbox[0]))


def filter_by_confidence(tokens: list[OcrToken], threshold: float) -> list[OcrToken]:
    """Exactly the tokens with confidence >= threshold, order preserved."""
    if not (0.0 <= threshold <= 1.0):
        raise ContractError(f"threshold {threshold} out of [0,1]")
    return [t for t in tokens if t.confidence >= threshold]


def fuse_query(user_text: str, caption: Caption | None, tokens: list[OcrToken]) -> str:
    """Concatenate query text with labeled caption and OCR blocks.

    Output is only the inputs plus the fixed labels; empty blocks are
    omitted entirely.
    """
    parts = []
    if user_text:
        parts.append(user_text)
    if caption is not None and caption.text:
        parts.append(f"{CAPTION_LABEL} {caption.text}")
    if tokens:
        parts.append(f"{OCR_LABEL} " + " ".join(t.text for t in tokens))
    if not parts:
        raise ContractError("fuse_query needs at least one non-empty input")
    return "\n".join(parts)
