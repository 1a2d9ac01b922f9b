"""HTTP adapters for the pluggable backends, plus the factory that turns
an AdapterConfig into a live client.

Request/response bodies are minimal JSON, documented in docs/FORMATS.md.
Every transport fault surfaces as a retryable AdapterError.
"""

from __future__ import annotations

import httpx

from .config import AdapterConfig
from .corpus import CleanDocument, JudgeVerdict, StubJudge
from .errors import AdapterError
from .extract import PatternStubExtractor, RawTriple
from .generation import GenerationRequest, GenerationResponse, NeedleMockGenerator
from .mmio import FixtureStub, ImageInput, OcrToken


def _post(client: httpx.Client, endpoint: str, payload: dict) -> dict:
    try:
        response = client.post(endpoint, json=payload, timeout=30.0)
        response.raise_for_status()
        return response.json()
    except (httpx.HTTPError, ValueError) as exc:
        raise AdapterError(f"http adapter call to {endpoint} failed: {exc}", retryable=True) from exc


class HttpGenerator:
    name = "http-generator"

    def __init__(self, endpoint: str, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.client = client or httpx.Client()

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        body = {
            "system": request.system,
            "blocks": [{"kind": b.kind, "ref": b.ref, "text": b.text} for b in request.blocks],
            "query": request.query,
        }
        data = _post(self.client, self.endpoint, body)
        if "answer" not in data:
            raise AdapterError(f"generator response missing 'answer': {data}")
        return GenerationResponse(
            answer=data["answer"],
            generator=data.get("generator", self.name),
            usage=data.get("usage", {}),
        )


class HttpJudge:
    name = "http-judge"

    def __init__(self, endpoint: str, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.client = client or httpx.Client()

    def judge_document(self, doc: CleanDocument) -> JudgeVerdict:
        data = _post(self.client, self.endpoint, {"doc_id": doc.doc_id, "title": doc.title, "body": doc.body})
        return JudgeVerdict(decision=data.get("decision", ""), reason=data.get("reason", ""))


class HttpExtractor:
    name = "http-extractor"

    def __init__(self, endpoint: str, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.client = client or httpx.Client()

    def extract_triples(self, text: str) -> list[RawTriple]:
        data = _post(self.client, self.endpoint, {"text": text, "task": "triples"})
        return [
            RawTriple(
                subject=t["subject"],
                predicate=t["predicate"],
                object=t["object"],
                confidence=t.get("confidence", 1.0),
                subject_type=t.get("subject_type", "component"),
                object_type=t.get("object_type", "component"),
            )
            for t in data.get("triples", [])
        ]

    def extract_mentions(self, text: str) -> list[tuple[str, str]]:
        data = _post(self.client, self.endpoint, {"text": text, "task": "mentions"})
        return [(m["surface"], m.get("type_hint", "component")) for m in data.get("mentions", [])]


class HttpCaptioner:
    name = "http-captioner"

    def __init__(self, endpoint: str, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.client = client or httpx.Client()

    def caption(self, img: ImageInput) -> str:
        data = _post(self.client, self.endpoint, {"image_id": img.image_id, "format": img.format})
        return data.get("caption", "")


class HttpOcr:
    name = "http-ocr"

    def __init__(self, endpoint: str, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.client = client or httpx.Client()

    def read(self, img: ImageInput) -> list[OcrToken]:
        data = _post(self.client, self.endpoint, {"image_id": img.image_id, "format": img.format})
        return [
            OcrToken(text=t["text"], confidence=t["confidence"], bbox=tuple(t["bbox"]))
            for t in data.get("tokens", [])
        ]


def build_generator(config: AdapterConfig):
    if config.kind == "http":
        return HttpGenerator(config.endpoint)
    needles = [tuple(pair) for pair in config.params.get("needles", [])]
    return NeedleMockGenerator(
        needle_answers=needles,
        default_answer=config.params.get("default_answer", "none of these options can be confirmed"),
    )


def build_judge(config: AdapterConfig, topics: list[str], min_ttr: float):
    if config.kind == "http":
        return HttpJudge(config.endpoint)
    return StubJudge(topics=topics, min_ttr=min_ttr)


def build_extractor(config: AdapterConfig):
    if config.kind == "http":
        return HttpExtractor(config.endpoint)
    return PatternStubExtractor()


def build_mmio_stub(config: AdapterConfig, fixtures_path) -> FixtureStub:
    if fixtures_path is None:
        return FixtureStub({})
    return FixtureStub.from_file(fixtures_path)


def build_captioner(config: AdapterConfig, fixtures_path):
    if config.kind == "http":
        return HttpCaptioner(config.endpoint)
    return build_mmio_stub(config, fixtures_path)


def build_ocr(config: AdapterConfig, fixtures_path):
    if config.kind == "http":
        return HttpOcr(config.endpoint)
    return build_mmio_stub(config, fixtures_path)
