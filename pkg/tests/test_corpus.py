import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from grg import corpus
from grg.corpus import (
    CleanDocument,
    CorpusManifest,
    JudgeVerdict,
    ManifestEntry,
    PipelineConfig,
    StubJudge,
    dedup,
    judge_filter,
    keyword_filter,
    load_inventory,
    load_manifest,
    preprocess,
    strip_markup,
    write_inventory,
    write_manifest,
)
from grg.errors import ConfigError, DataError

from oracles import shingle_jaccard, word_boundary_tokens


class TestStripMarkup:
    def test_tags_removed_anchor_text_kept(self):
        assert strip_markup("<b>5G NR</b> see <a href='x'>link</a>") == "5G NR see link"

    def test_identity_on_plain_text(self):
        assert strip_markup("plain text") == "plain text"

    def test_template_content_removed(self):
        assert strip_markup("{{Infobox}}Spectrum policy") == "Spectrum policy"

    def test_urls_removed(self):
        out = strip_markup("see https://example.org/spec for details")
        assert "https" not in out and "example.org" not in out
        assert out == "see for details"

    def test_paragraph_breaks_preserved(self):
        out = strip_markup("<p>first  para</p><p>second   para</p>")
        assert out == "first para\nsecond para"

    @given(st.text(max_size=300))
    def test_idempotent(self, text):
        once = strip_markup(text)
        assert strip_markup(once) == once

    @given(st.text(max_size=300))
    def test_no_tag_delimiters_or_urls_survive(self, text):
        out = strip_markup(text)
        assert "<" not in out and ">" not in out
        assert "://" not in out


class TestKeywordFilter:
    def test_case_insensitive_match(self, make_doc):
        doc = make_doc(body="review of the 3GPP Rel-17 standard stack")
        decision = keyword_filter(doc, {"3gpp", "mimo"})
        assert decision.keep and decision.matched == ["3gpp"]

    def test_no_match_drops(self, make_doc):
        doc = make_doc(body="cooking recipes")
        assert not keyword_filter(doc, {"3gpp", "mimo"}).keep

    def test_boundary_match_at_hyphen(self, make_doc):
        # oracle: the boundary tokenizer must see "mimo" as its own token
        body = "MIMO-OFDM systems"
        assert "mimo" in word_boundary_tokens(body)
        decision = keyword_filter(make_doc(body=body), {"mimo"})
        assert decision.keep and decision.matched == ["mimo"]

    def test_substring_does_not_match(self, make_doc):
        assert "mimo" not in word_boundary_tokens("pantomimology")
        assert not keyword_filter(make_doc(body="pantomimology"), {"mimo"}).keep

    def test_empty_keywords_is_config_error(self, make_doc):
        with pytest.raises(ConfigError):
            keyword_filter(make_doc(), set())


class TestJudgeFilter:
    def test_stub_allowlist_hit_keeps(self, make_doc):
        doc = make_doc(body="iterative decoding of LDPC codes improves coding gain on noisy channels")
        decision = judge_filter(doc, StubJudge(topics={"coding"}))
        assert decision.keep and not decision.quarantined

    def test_stub_drops_low_quality(self, make_doc):
        doc = make_doc(body="lorem ipsum dolor sit amet " * 30)
        decision = judge_filter(doc, StubJudge(topics={"coding"}))
        assert not decision.keep and decision.reason == "low-quality"

    def test_malformed_verdict_quarantines(self, make_doc):
        class BrokenJudge:
            def judge_document(self, doc):
                return JudgeVerdict(decision="maybe")

        decision = judge_filter(make_doc(), BrokenJudge())
        assert decision.quarantined and not decision.keep


class TestDedup:
    def test_exact_duplicates_collapse_to_smallest_id(self, make_doc):
        a = make_doc("A", body="x y z repeated content")
        b = make_doc("B", body="x y z repeated content")
        kept, report = dedup([b, a])
        assert [d.doc_id for d in kept] == ["A"]
        assert report.duplicate_clusters == [["A", "B"]]
        assert report.dropped_by_stage == {"dedup": 1}

    def test_disjoint_bodies_both_kept(self, make_doc):
        a = make_doc("A", body="alpha beta gamma")
        b = make_doc("B", body="delta epsilon zeta")
        kept, report = dedup([a, b])
        assert len(kept) == 2 and report.duplicate_clusters == []

    def test_near_duplicate_clustering(self, make_doc):
        # doc2 = doc1 plus one appended sentence; pin Jaccard by oracle first
        base = " ".join(f"word{i}" for i in range(200))
        extended = base + " one extra sentence appended here"
        other = " ".join(f"town{i}" for i in range(50))
        j = shingle_jaccard(base, extended)
        assert j >= 0.9, f"fixture must be a near-duplicate, got {j}"
        assert shingle_jaccard(base, other) < 0.9
        kept, report = dedup(
            [make_doc("doc1", body=base), make_doc("doc2", body=extended), make_doc("doc3", body=other)]
        )
        assert sorted(d.doc_id for d in kept) == ["doc1", "doc3"]
        assert report.duplicate_clusters == [["doc1", "doc2"]]

    def test_idempotent(self, make_doc):
        docs = [
            make_doc("A", body="one two three four"),
            make_doc("B", body="one two three four"),
            make_doc("C", body="five six seven eight"),
        ]
        once, _ = dedup(docs)
        twice, report = dedup(once)
        assert [d.doc_id for d in twice] == [d.doc_id for d in once]
        assert report.duplicate_clusters == []

    @given(order=st.permutations(["A", "B", "C", "D"]))
    def test_order_insensitive_kept_set(self, order):
        bodies = {
            "A": "shared body text here",
            "B": "shared body text here",
            "C": "unique content for c",
            "D": "unique content for d",
        }
        docs = [
            CleanDocument(doc_id=i, source_kind="other", title="", body=bodies[i]) for i in order
        ]
        kept, _ = dedup(docs)
        assert sorted(d.doc_id for d in kept) == ["A", "C", "D"]


def six_doc_manifest(tmp_path):
    """Hand-traced fixture: 6 in, 1 keyword-dropped, 2 exact dupes."""
    rows = [
        ("doc1", "standard_3gpp", "The 3GPP access procedure negotiates radio bearers and uplink scheduling grants."),
        ("doc2", "wiki", "MIMO antenna arrays multiply spectral efficiency across fading channels."),
        ("doc3", "paper", "Celebrity gossip weekly roundup with photos and interviews."),  # keyword drop
        ("doc4", "patent", "A duplicated waveform claim body for testing purposes."),
        ("doc5", "patent", "A duplicated waveform claim body for testing purposes."),  # exact dupe of doc4
        ("doc6", "code", "Simulation code for OFDM carrier synchronization and channel estimation."),
    ]
    path = tmp_path / "manifest.jsonl"
    lines = [
        json.dumps({"doc_id": d, "source_kind": k, "locator": "inline:" + b, "meta": {}})
        for d, k, b in rows
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


SIX_DOC_KEYWORDS = {"3gpp", "mimo", "ofdm", "waveform"}


def six_doc_pipeline():
    return PipelineConfig(
        keywords=SIX_DOC_KEYWORDS,
        denylist={"classified-exploit"},
        judge=StubJudge(topics=(), min_ttr=0.2),
    )


class TestPreprocess:
    def test_six_doc_fixture_hand_traced(self, tmp_path):
        manifest = load_manifest(six_doc_manifest(tmp_path))
        docs, report = preprocess(manifest, six_doc_pipeline())
        assert report.input_count == 6
        assert report.kept_count == 4
        assert report.dropped_by_stage == {"keyword_filter": 1, "dedup": 1}
        assert report.duplicate_clusters == [["doc4", "doc5"]]
        assert sorted(d.doc_id for d in docs) == ["doc1", "doc2", "doc4", "doc6"]
        assert report.conserved()

    def test_empty_manifest(self):
        docs, report = preprocess(CorpusManifest(entries=[]), six_doc_pipeline())
        assert docs == [] and report.input_count == 0 and report.conserved()

    def test_filter_trace_has_every_passed_stage_once(self, tmp_path):
        manifest = load_manifest(six_doc_manifest(tmp_path))
        docs, _ = preprocess(manifest, six_doc_pipeline())
        for doc in docs:
            stages = [s for s, _, _ in doc.filter_trace]
            assert stages == ["load", "strip_markup", "keyword_filter", "judge_filter", "dedup", "harmful_screen"]

    def test_harmful_screen_drops(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            json.dumps(
                {
                    "doc_id": "bad1",
                    "source_kind": "wiki",
                    "locator": "inline:ofdm notes plus classified-exploit payload details",
                    "meta": {},
                }
            )
            + "\n",
            encoding="utf-8",
        )
        docs, report = preprocess(load_manifest(path), six_doc_pipeline())
        assert docs == [] and report.dropped_by_stage == {"harmful_screen": 1}

    def test_unresolvable_locator_recorded(self, tmp_path):
        rows = [
            {"doc_id": "ok1", "source_kind": "wiki", "locator": "inline:MIMO fading models", "meta": {}},
            {"doc_id": "gone", "source_kind": "wiki", "locator": "missing-file.txt", "meta": {}},
            {"doc_id": "ok2", "source_kind": "wiki", "locator": "inline:OFDM pilot design", "meta": {}},
        ]
        path = tmp_path / "m.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
        docs, report = preprocess(load_manifest(path), six_doc_pipeline())
        assert report.dropped_by_stage["load"] == 1
        assert report.load_errors[0]["doc_id"] == "gone"
        assert report.conserved()

    def test_majority_load_failure_aborts(self, tmp_path):
        rows = [
            {"doc_id": "g1", "source_kind": "wiki", "locator": "nope1.txt", "meta": {}},
            {"doc_id": "g2", "source_kind": "wiki", "locator": "nope2.txt", "meta": {}},
            {"doc_id": "ok", "source_kind": "wiki", "locator": "inline:MIMO text", "meta": {}},
        ]
        path = tmp_path / "m.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
        with pytest.raises(DataError):
            preprocess(load_manifest(path), six_doc_pipeline())

    def test_quarantine_keeps_conservation(self, tmp_path):
        class FlakyJudge:
            def judge_document(self, doc):
                if doc.doc_id == "doc1":
                    raise TimeoutError("judge timed out")
                return JudgeVerdict("keep", "ok")

        manifest = load_manifest(six_doc_manifest(tmp_path))
        config = PipelineConfig(keywords=SIX_DOC_KEYWORDS, judge=FlakyJudge())
        docs, report = preprocess(manifest, config)
        assert len(report.quarantined) == 1
        assert report.quarantined[0]["doc_id"] == "doc1"
        assert "doc1" not in {d.doc_id for d in docs}
        assert report.conserved()


class TestManifest:
    def test_round_trip(self, tmp_path):
        manifest = CorpusManifest(
            entries=[
                ManifestEntry("a", "standard_3gpp", "inline:x", {"title": "A"}),
                ManifestEntry("b", "wiki", "inline:y", {}),
            ]
        )
        path = tmp_path / "m.jsonl"
        write_manifest(manifest, path)
        loaded = load_manifest(path)
        assert [e.doc_id for e in loaded.entries] == ["a", "b"]
        assert loaded.counts_by_kind == {"standard_3gpp": 1, "wiki": 1}

    def test_duplicate_doc_id_rejected(self):
        with pytest.raises(DataError):
            CorpusManifest(
                entries=[
                    ManifestEntry("a", "wiki", "inline:x", {}),
                    ManifestEntry("a", "wiki", "inline:y", {}),
                ]
            )

    def test_counts_consistent_with_entries(self):
        manifest = CorpusManifest(
            entries=[ManifestEntry(f"d{i}", "patent", "inline:z", {}) for i in range(3)]
        )
        assert manifest.counts_by_kind == {"patent": 3}

    def test_published_inventory_shape_round_trips(self, tmp_path):
        # the documented full-corpus inventory: declared counts per kind
        counts = {
            "standard_3gpp": 15016,
            "standard_ieee": 40,
            "patent": 697717,
            "paper": 90310,
            "code": 14128,
            "wiki": 19543,
        }
        path = tmp_path / "inventory.json"
        write_inventory(counts, path)
        assert load_inventory(path) == counts

    def test_inventory_rejects_unknown_kind(self, tmp_path):
        path = tmp_path / "inventory.json"
        path.write_text(json.dumps({"counts_by_kind": {"scrolls": 3}}), encoding="utf-8")
        with pytest.raises(DataError):
            load_inventory(path)


class TestTermFiles:
    def test_comments_and_blanks_ignored(self, tmp_path):
        path = tmp_path / "kw.txt"
        path.write_text("# comment\nmimo\n\n3gpp  # trailing\n", encoding="utf-8")
        assert corpus.load_term_file(path) == {"mimo", "3gpp"}


class TestCleanDocumentInvariants:
    def test_stage_recorded_twice_rejected(self, make_doc):
        doc = make_doc()
        doc.record("load", "ok")
        with pytest.raises(DataError):
            doc.record("load", "ok")

    def test_empty_body_requires_attachments(self):
        from grg.corpus import RawDocument

        with pytest.raises(DataError):
            RawDocument(doc_id="x", source_kind="wiki", title="t", body="")
