import httpx
import pytest

from grg.adapters import HttpExtractor, HttpGenerator, HttpJudge, HttpOcr
from grg.corpus import CleanDocument
from grg.errors import AdapterError
from grg.generation import ContextBlock, GenerationRequest
from grg.mmio import ImageInput


def client_returning(payload, status=200):
    def handler(request):
        return httpx.Response(status, json=payload)

    return httpx.Client(transport=httpx.MockTransport(handler))


def doc():
    return CleanDocument(doc_id="d1", source_kind="wiki", title="t", body="b")


class TestHttpGenerator:
    def request(self):
        return GenerationRequest(
            system="s", blocks=[ContextBlock(kind="chunk", ref="c#0", text="x")], query="q"
        )

    def test_answer_passthrough(self):
        gen = HttpGenerator("http://test/generate", client_returning({"answer": "B", "generator": "remote"}))
        response = gen.generate(self.request())
        assert response.answer == "B" and response.generator == "remote"

    def test_missing_answer_is_adapter_error(self):
        gen = HttpGenerator("http://test/generate", client_returning({"nope": 1}))
        with pytest.raises(AdapterError):
            gen.generate(self.request())

    def test_transport_error_is_retryable(self):
        gen = HttpGenerator("http://test/generate", client_returning({}, status=500))
        with pytest.raises(AdapterError) as err:
            gen.generate(self.request())
        assert err.value.retryable


class TestHttpJudge:
    def test_verdict_mapping(self):
        judge = HttpJudge("http://test/judge", client_returning({"decision": "drop", "reason": "off-topic"}))
        verdict = judge.judge_document(doc())
        assert verdict.decision == "drop" and verdict.reason == "off-topic"


class TestHttpExtractor:
    def test_triples_mapping(self):
        extractor = HttpExtractor(
            "http://test/extract",
            client_returning({"triples": [{"subject": "A", "predicate": "uses", "object": "B"}]}),
        )
        triples = extractor.extract_triples("text")
        assert len(triples) == 1 and triples[0].confidence == 1.0

    def test_mentions_mapping(self):
        extractor = HttpExtractor(
            "http://test/extract", client_returning({"mentions": [{"surface": "AMF"}]})
        )
        assert extractor.extract_mentions("text") == [("AMF", "component")]


class TestHttpOcr:
    def test_token_mapping(self):
        ocr = HttpOcr(
            "http://test/ocr",
            client_returning({"tokens": [{"text": "QPSK", "confidence": 0.9, "bbox": [1, 2, 3, 4]}]}),
        )
        tokens = ocr.read(ImageInput(image_id="i1"))
        assert tokens[0].text == "QPSK" and tokens[0].bbox == (1, 2, 3, 4)
