import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grg.chunking import ChunkPolicy, chunk_document, reconstruct
from grg.corpus import CleanDocument
from grg.errors import ContractError


def doc_with(body, doc_id="d"):
    return CleanDocument(doc_id=doc_id, source_kind="other", title="", body=body)


def words_body(n_chars):
    out = []
    i = 0
    while len(" ".join(out)) < n_chars:
        out.append(f"w{i}")
        i += 1
    return " ".join(out)[:n_chars]


class TestChunkDocument:
    def test_250_chars_target_100_no_overlap(self):
        body = words_body(250)
        chunks = chunk_document(doc_with(body), ChunkPolicy(target_chars=100, overlap_chars=0))
        assert len(chunks) == 3
        assert chunks[0].span[0] == 0 and chunks[-1].span[1] == 250
        # derived check: spans are contiguous and rebuild the body exactly
        for prev, nxt in zip(chunks, chunks[1:]):
            assert prev.span[1] == nxt.span[0]
        assert reconstruct(chunks, 0) == body

    def test_body_shorter_than_target_is_single_chunk(self):
        body = "short body"
        chunks = chunk_document(doc_with(body), ChunkPolicy(target_chars=100, overlap_chars=10))
        assert len(chunks) == 1
        assert chunks[0].text == body and chunks[0].span == (0, len(body))

    def test_overlap_start_is_end_minus_overlap(self):
        body = words_body(250)
        chunks = chunk_document(doc_with(body), ChunkPolicy(target_chars=100, overlap_chars=20))
        assert len(chunks) >= 2
        for prev, nxt in zip(chunks, chunks[1:]):
            assert nxt.span[0] == prev.span[1] - 20
            # overlap region carries identical text in both chunks
            assert prev.text[-20:] == nxt.text[:20]
        assert reconstruct(chunks, 20) == body

    def test_chunk_text_matches_span(self):
        body = words_body(500)
        for chunk in chunk_document(doc_with(body), ChunkPolicy(150, 30)):
            assert chunk.text == body[chunk.span[0] : chunk.span[1]]

    def test_ordinals_dense_from_zero(self):
        body = words_body(500)
        chunks = chunk_document(doc_with(body, doc_id="doc9"), ChunkPolicy(100, 0))
        assert [c.chunk_id for c in chunks] == [f"doc9#{i}" for i in range(len(chunks))]

    def test_empty_body_gives_empty_list(self):
        assert chunk_document(doc_with(""), ChunkPolicy(100, 0)) == []

    def test_snaps_to_whitespace(self):
        # a space sits 5 chars before the raw split point
        body = "a" * 95 + " " + "b" * 60
        chunks = chunk_document(doc_with(body), ChunkPolicy(target_chars=100, overlap_chars=0))
        assert chunks[0].span == (0, 96)  # split right after the space

    def test_hard_split_without_whitespace(self):
        body = "x" * 250
        chunks = chunk_document(doc_with(body), ChunkPolicy(target_chars=100, overlap_chars=0))
        assert [c.span for c in chunks] == [(0, 100), (100, 200), (200, 250)]

    def test_invalid_policy_rejected(self):
        with pytest.raises(ContractError):
            chunk_document(doc_with("text"), ChunkPolicy(target_chars=10, overlap_chars=10))


@st.composite
def body_and_policy(draw):
    body = draw(
        st.text(
            alphabet=st.sampled_from(list("abcdef XYZ\n.")),
            min_size=0,
            max_size=3000,
        )
    )
    target = draw(st.integers(min_value=5, max_value=400))
    overlap = draw(st.integers(min_value=0, max_value=target - 1))
    return body, ChunkPolicy(target_chars=target, overlap_chars=overlap)


class TestReconstructionProperty:
    @settings(max_examples=200, deadline=None)
    @given(bp=body_and_policy())
    def test_reconstruction_is_byte_identical(self, bp):
        body, policy = bp
        chunks = chunk_document(doc_with(body), policy)
        assert reconstruct(chunks, policy.overlap_chars) == body
        if body:
            assert chunks[0].span[0] == 0 and chunks[-1].span[1] == len(body)

    @settings(max_examples=100, deadline=None)
    @given(bp=body_and_policy())
    def test_every_chunk_matches_its_span(self, bp):
        body, policy = bp
        for chunk in chunk_document(doc_with(body), policy):
            assert chunk.text == body[chunk.span[0] : chunk.span[1]]
            assert 0 <= chunk.span[0] < chunk.span[1] <= len(body)
