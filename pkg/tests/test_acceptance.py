"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one [acceptance] pass/fail line (visible with -s or -rP)
and enforces the stated runtime bound where the criterion carries one.
"""

import json
import shutil
import time
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from grg.chunking import ChunkPolicy, chunk_document, reconstruct
from grg.cli import main
from grg.config import load_config
from grg.corpus import CleanDocument, PipelineConfig, StubJudge, load_manifest, load_term_file, preprocess
from grg.embedding import EmbeddingVector
from grg.extract import PatternStubExtractor
from grg.forge import (
    default_training_configs,
    export_training_bundle,
    import_records,
    record_from_line,
    record_to_line,
)
from grg.kgraph import build_graph, neighborhood
from grg.mmio import OcrToken, filter_by_confidence
from grg.service import build_app
from grg.vindex import build_index, search

from oracles import bfs_reachable, brute_force_search_np
from test_kgraph import twenty_chunks

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def report(name, started, bound=None):
    elapsed = time.perf_counter() - started
    budget = f", bound {bound:.0f}s" if bound else ""
    print(f"[acceptance] {name}: PASS ({elapsed:.2f}s{budget})")
    if bound is not None:
        assert elapsed < bound, f"{name} exceeded its {bound}s budget: {elapsed:.2f}s"


def random_vectors(n, dim, seed):
    rng = np.random.default_rng(seed)
    return [
        (f"c{i:04d}", EmbeddingVector(dim=dim, values=rng.standard_normal(dim).astype(np.float32)))
        for i in range(n)
    ]


class TestAcceptance:
    def test_vector_search_oracle_equivalence(self):
        started = time.perf_counter()
        pairs = random_vectors(1000, 64, seed=2024)
        index = build_index(pairs, mode="exact")
        rows = [index.matrix[i] for i in range(len(index))]
        rng = np.random.default_rng(7)
        for _ in range(100):
            q = rng.standard_normal(64).astype(np.float32)
            qn = q / np.linalg.norm(q)
            for k in (1, 5, 20):
                expected = brute_force_search_np(index.chunk_ids, rows, qn, k)
                got = search(index, EmbeddingVector(dim=64, values=q), k)
                assert [(h.chunk_id, h.rank) for h in got] == [(e[0], e[2]) for e in expected]
                for hit, (_, score, _) in zip(got, expected):
                    assert hit.score == pytest.approx(score, abs=1e-5)
        report("vector-search oracle equivalence (1000x100, k in {1,5,20})", started, bound=10)

    def test_ann_recall_gate(self):
        started = time.perf_counter()
        pairs = random_vectors(1000, 64, seed=2024)
        exact = build_index(pairs, mode="exact")
        approx = build_index(pairs, mode="approximate")
        rng = np.random.default_rng(8)
        hits = 0
        for _ in range(100):
            q = EmbeddingVector(dim=64, values=rng.standard_normal(64).astype(np.float32))
            truth = {h.chunk_id for h in search(exact, q, 10)}
            got = {h.chunk_id for h in search(approx, q, 10)}
            hits += len(truth & got)
        recall = hits / 1000
        assert recall >= 0.95, f"recall@10 = {recall}"
        report(f"ANN recall gate (recall@10 = {recall:.3f} >= 0.95)", started, bound=30)

    def test_chunk_reconstruction_property(self):
        started = time.perf_counter()
        rng = np.random.default_rng(9)
        alphabet = np.array(list("abcdefgh  \n."))
        for i in range(500):
            length = int(rng.integers(0, 20_001))
            body = "".join(rng.choice(alphabet, size=length))
            target = int(rng.integers(50, 2000))
            overlap = int(rng.integers(0, target))
            doc = CleanDocument(doc_id=f"r{i}", source_kind="other", title="", body=body)
            policy = ChunkPolicy(target_chars=target, overlap_chars=overlap)
            chunks = chunk_document(doc, policy)
            assert reconstruct(chunks, policy.overlap_chars) == body
        report("chunk reconstruction byte-identity (500 random docs)", started, bound=5)

    def test_graph_integrity_suite(self):
        started = time.perf_counter()
        graph = build_graph(twenty_chunks(), PatternStubExtractor())
        graph.check_integrity()  # referential integrity is re-checked, not assumed
        chunk_ids = {c.chunk_id for c in twenty_chunks()}
        for entity in graph.entities.values():
            assert entity.provenance and entity.provenance <= chunk_ids
        for relation in graph.relations:
            assert relation.provenance and relation.provenance <= chunk_ids
        rebuilt = build_graph(twenty_chunks(), PatternStubExtractor())
        assert set(rebuilt.entities) == set(graph.entities)
        assert [
            (r.subject_id, r.predicate, r.object_id) for r in rebuilt.relations
        ] == [(r.subject_id, r.predicate, r.object_id) for r in graph.relations]

        # neighborhood vs BFS oracle: 50-node random graphs, 20 seeds, depth 1 and 2
        from grg.kgraph import Entity, KnowledgeGraph, Relation, entity_id_for

        rng = np.random.default_rng(11)
        random_graph = KnowledgeGraph()
        ids = []
        for i in range(50):
            eid = entity_id_for(f"vertex{i}", "component")
            random_graph.entities[eid] = Entity(
                entity_id=eid, canonical_name=f"vertex{i}", type="component",
                aliases={f"vertex{i}"}, provenance={"c00"},
            )
            ids.append(eid)
        seen = set()
        for _ in range(90):
            a, b = (int(x) for x in rng.integers(0, 50, size=2))
            if a == b or (a, b) in seen:
                continue
            seen.add((a, b))
            random_graph.relations.append(Relation(ids[a], "uses", ids[b], 1.0, {"c00"}))
        random_graph.rebuild_adjacency()
        random_graph.rebuild_norm_index()
        edges = [(r.subject_id, r.object_id) for r in random_graph.relations]
        for seed_idx in rng.integers(0, 50, size=20):
            seed = ids[int(seed_idx)]
            for depth in (1, 2):
                expected = bfs_reachable(edges, [seed], depth)
                sub, _ = neighborhood(random_graph, [seed], depth)
                assert set(sub.entities) == expected
        report("graph integrity + BFS-oracle neighborhood", started)

    def test_ablation_trend_reproduction(self, tmp_path):
        started = time.perf_counter()
        work = tmp_path / "ablation"
        shutil.copytree(FIXTURES / "ablation", work)
        cfg = str(work / "config.json")
        assert main(["--config", cfg, "ingest", "--manifest", str(work / "manifest.jsonl")]) == 0
        assert main(["--config", cfg, "index"]) == 0
        assert main(["--config", cfg, "graph"]) == 0

        expected = {"base": 10, "rag": 20, "grg": 30}
        transcripts = {}
        for mode, correct in expected.items():
            out = work / f"report_{mode}.json"
            assert main([
                "--config", cfg, "eval",
                "--benchmark", str(work / "benchmark.jsonl"),
                "--mode", mode, "--out", str(out),
            ]) == 0
            body = json.loads(out.read_text())
            assert body["total"] == 30
            assert body["correct"] == correct, f"{mode}: {body['correct']}/30, want {correct}/30"
            assert body["accuracy"] == pytest.approx(correct / 30)
            transcripts[mode] = body["transcript"]

        # deterministic across runs: a second grg pass matches transcript-for-transcript
        rerun = work / "report_grg2.json"
        assert main([
            "--config", cfg, "eval", "--benchmark", str(work / "benchmark.jsonl"),
            "--mode", "grg", "--out", str(rerun),
        ]) == 0
        assert json.loads(rerun.read_text())["transcript"] == transcripts["grg"]
        report("ablation trend base=10/30 rag=20/30 grg=30/30, deterministic", started, bound=10)

    def test_worked_instruction_record_round_trip(self):
        started = time.perf_counter()
        line = json.dumps(
            {
                "Instruction": "This is a Question and Answer task related to 3GPP.",
                "Input": "What is the purpose of the SIP-based protocol framework?",
                "Output": (
                    "The SIP-based protocol framework serves as a means of user configuration "
                    "of supplementary services in the IM CN subsystem."
                ),
                "Metadata": "Section 4.1, General description in 24238-c00",
            },
            ensure_ascii=False,
        )
        record = record_from_line(line)
        record.validate()
        assert record_to_line(record) == line
        report("worked instruction record byte-identical round-trip", started)

    def test_training_config_fidelity(self, tmp_path):
        started = time.perf_counter()
        by_phase = {c.phase: c for c in default_training_configs()}
        assert by_phase["pretrain"].initial_lr == 5e-6
        assert by_phase["finetune"].initial_lr == 1e-5
        for config in by_phase.values():
            assert config.lora_rank == 8
            assert config.lora_scale == 16
            assert config.precision == "bf16"
            assert config.scheduler == "cosine"
            assert config.optimizer == "adam"
        record = record_from_line(
            '{"Instruction": "i", "Input": "q", "Output": "a", "Metadata": ""}'
        )
        export_training_bundle([record], None, tmp_path / "bundle")
        exported = json.loads((tmp_path / "bundle" / "training_config.json").read_text())
        exported_by_phase = {c["phase"]: c for c in exported["configs"]}
        assert exported_by_phase["pretrain"]["initial_lr"] == 5e-6
        assert exported_by_phase["finetune"]["initial_lr"] == 1e-5
        assert exported_by_phase["finetune"]["lora_rank"] == 8
        assert exported_by_phase["finetune"]["lora_scale"] == 16
        assert exported_by_phase["finetune"]["precision"] == "bf16"
        assert import_records(tmp_path / "bundle" / "records.jsonl") == [record]
        report("training-config fidelity (lr 5e-6/1e-5, LoRA 8/16, bf16)", started)

    def test_pipeline_conservation_on_six_doc_fixture(self):
        started = time.perf_counter()
        manifest = load_manifest(FIXTURES / "corpus6" / "manifest.jsonl")
        config = PipelineConfig(
            keywords=load_term_file(FIXTURES / "corpus6" / "keywords.txt"),
            denylist=load_term_file(FIXTURES / "corpus6" / "denylist.txt"),
            judge=StubJudge(topics=(), min_ttr=0.2),
        )
        docs, rep = preprocess(manifest, config)
        dropped = sum(rep.dropped_by_stage.values())
        assert rep.input_count == rep.kept_count + dropped + len(rep.quarantined)
        # hand-traced per-stage counts
        assert rep.input_count == 6 and rep.kept_count == 4
        assert rep.dropped_by_stage == {"keyword_filter": 1, "dedup": 1}
        assert rep.duplicate_clusters == [["doc4", "doc5"]]
        assert sorted(d.doc_id for d in docs) == ["doc1", "doc2", "doc4", "doc6"]
        report("pipeline conservation on the 6-doc fixture", started)

    def test_ocr_threshold_law(self):
        started = time.perf_counter()
        rng = np.random.default_rng(13)
        for _ in range(300):
            tokens = [
                OcrToken(text=f"t{i}", confidence=float(c), bbox=(i, 0, 1, 1))
                for i, c in enumerate(rng.random(int(rng.integers(0, 25))))
            ]
            thresholds = sorted(float(t) for t in rng.random(3))
            previous = None
            for threshold in thresholds:
                kept = filter_by_confidence(tokens, threshold)
                assert kept == [t for t in tokens if t.confidence >= threshold]
                if previous is not None:
                    assert len(kept) <= len(previous)
                    assert set(kept) <= set(previous)
                previous = kept
        report("OCR threshold law (exact set, monotone shrinking)", started)

    def test_cli_http_determinism_bridge(self, tmp_path, capsys):
        started = time.perf_counter()
        work = tmp_path / "ablation"
        shutil.copytree(FIXTURES / "ablation", work)
        cfg = str(work / "config.json")
        assert main(["--config", cfg, "ingest", "--manifest", str(work / "manifest.jsonl")]) == 0
        assert main(["--config", cfg, "index"]) == 0
        assert main(["--config", cfg, "graph"]) == 0
        capsys.readouterr()

        text = "Sector staging review: which unit receives the handoff that GAMMA-NODE-21 initiates?"
        assert main(["--config", cfg, "query", "--mode", "grg", "--text", text]) == 0
        cli_payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])

        app = build_app(load_config(cfg))
        with TestClient(app) as client:
            http_payload = client.post("/v1/query", json={"text": text, "mode": "grg"}).json()
        assert cli_payload["answer"] == http_payload["answer"]
        assert cli_payload["context"] == http_payload["context"]
        assert http_payload["answer"] == "The answer is D."
        report("CLI/HTTP determinism bridge", started)
