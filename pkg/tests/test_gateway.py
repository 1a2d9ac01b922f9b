import json
import shutil
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from grg.cli import main
from grg.config import load_config
from grg.errors import ConfigError
from grg.service import build_app

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def copy_fixture(name, tmp_path):
    work = tmp_path / name
    shutil.copytree(FIXTURES / name, work)
    return work


def run_cli(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    line = captured.out.strip().splitlines()[-1] if captured.out.strip() else ""
    return rc, (json.loads(line) if line else {}), captured.err


@pytest.fixture(scope="module")
def ablation_store(tmp_path_factory):
    """Built stores for the shipped ablation fixture, shared per module."""
    tmp_path = tmp_path_factory.mktemp("ablation")
    work = copy_fixture("ablation", tmp_path)
    cfg = str(work / "config.json")
    assert main(["--config", cfg, "ingest", "--manifest", str(work / "manifest.jsonl")]) == 0
    assert main(["--config", cfg, "index"]) == 0
    assert main(["--config", cfg, "graph"]) == 0
    return work


class TestCliIngest:
    def test_six_doc_fixture_counts(self, tmp_path, capsys):
        work = copy_fixture("corpus6", tmp_path)
        rc, result, _ = run_cli(
            capsys,
            ["--config", str(work / "config.json"), "ingest", "--manifest", str(work / "manifest.jsonl")],
        )
        assert rc == 0
        assert result["input_count"] == 6
        assert result["kept_count"] == 4
        assert result["dropped_by_stage"] == {"keyword_filter": 1, "dedup": 1}
        assert result["duplicate_clusters"] == [["doc4", "doc5"]]

    def test_missing_config_is_config_error(self, capsys):
        rc = main(["ingest", "--manifest", "nowhere.jsonl"])
        assert rc == ConfigError.exit_code

    def test_bad_manifest_is_data_error(self, tmp_path, capsys):
        work = copy_fixture("corpus6", tmp_path)
        rc = main(["--config", str(work / "config.json"), "ingest", "--manifest", str(work / "nope.jsonl")])
        assert rc != 0


class TestCliPipeline:
    def test_query_emits_answer_and_provenance(self, ablation_store, capsys):
        cfg = str(ablation_store / "config.json")
        rc, result, _ = run_cli(
            capsys,
            ["--config", cfg, "query", "--mode", "grg", "--text",
             "Sector staging review: which unit receives the handoff that GAMMA-NODE-21 initiates?"],
        )
        assert rc == 0
        assert result["answer"] == "The answer is D."
        facts = result["context"]["facts"]
        assert any("GAMMA-NODE-21 —selects→ DELTA-NODE-21" in f["text"] for f in facts)
        assert all({"chunk_id", "doc_id", "span", "text", "score", "rank"} <= set(c) for c in result["context"]["chunks"])

    def test_query_base_mode_has_empty_context(self, ablation_store, capsys):
        cfg = str(ablation_store / "config.json")
        rc, result, _ = run_cli(
            capsys, ["--config", cfg, "query", "--mode", "base", "--text", "anything"]
        )
        assert rc == 0
        assert result["context"]["facts"] == [] and result["context"]["chunks"] == []

    def test_eval_writes_report(self, ablation_store, capsys, tmp_path):
        cfg = str(ablation_store / "config.json")
        out = tmp_path / "report.json"
        rc, result, err = run_cli(
            capsys,
            ["--config", cfg, "eval", "--benchmark", str(ablation_store / "benchmark.jsonl"),
             "--mode", "rag", "--out", str(out)],
        )
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["mode"] == "rag"
        assert report["total"] == 30 and report["correct"] == 20

    def test_forge_exports_bundle(self, ablation_store, capsys, tmp_path):
        cfg = str(ablation_store / "config.json")
        out = tmp_path / "bundle"
        rc, result, _ = run_cli(capsys, ["--config", cfg, "forge", "--out", str(out)])
        assert rc == 0
        assert result["kept"] >= 1
        config = json.loads((out / "training_config.json").read_text())
        assert {c["phase"] for c in config["configs"]} == {"pretrain", "finetune"}

    def test_query_before_index_is_state_error(self, tmp_path, capsys):
        work = copy_fixture("corpus6", tmp_path)
        cfg = str(work / "config.json")
        assert main(["--config", cfg, "ingest", "--manifest", str(work / "manifest.jsonl")]) == 0
        rc = main(["--config", cfg, "query", "--mode", "rag", "--text", "x"])
        assert rc == 4  # store-state category


@pytest.fixture(scope="module")
def client(ablation_store):
    config = load_config(ablation_store / "config.json")
    app = build_app(config)
    with TestClient(app) as c:
        yield c


class TestHttpService:
    def test_health_ok_when_built(self, client):
        response = client.get("/v1/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok"
        assert body["stores"]["vectors"] == "built"

    def test_health_409_before_build(self, tmp_path):
        work = copy_fixture("corpus6", tmp_path)
        config = load_config(work / "config.json")
        app = build_app(config)
        with TestClient(app) as c:
            response = c.get("/v1/health")
            assert response.status_code == 409
            assert response.json()["error"]["code"] == "stores_not_built"

    def test_query_base_mode_empty_context(self, client):
        response = client.post("/v1/query", json={"text": "anything", "mode": "base"})
        assert response.status_code == 200
        body = response.json()
        assert body["context"]["facts"] == [] and body["context"]["chunks"] == []

    def test_query_grg_returns_fact(self, client):
        response = client.post(
            "/v1/query",
            json={"text": "Sector staging review: which unit receives the handoff that GAMMA-NODE-21 initiates?", "mode": "grg"},
        )
        body = response.json()
        assert body["answer"] == "The answer is D."
        assert any("GAMMA-NODE-21" in f["subject_name"] for f in body["context"]["facts"])

    def test_query_bad_mode_400(self, client):
        response = client.post("/v1/query", json={"text": "x", "mode": "warp"})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "bad_request"

    def test_query_empty_input_400(self, client):
        response = client.post("/v1/query", json={"text": "", "mode": "base"})
        assert response.status_code == 400

    def test_graph_entity_endpoint(self, client):
        query = client.post(
            "/v1/query", json={"text": "What does GAMMA-NODE-21 initiate?", "mode": "grg"}
        ).json()
        entity_id = query["context"]["facts"][0]["subject_id"]
        response = client.get(f"/v1/graph/entity/{entity_id}", params={"depth": 1})
        assert response.status_code == 200
        body = response.json()
        names = {e["canonical_name"] for e in body["entities"]}
        assert names == {"GAMMA-NODE-21", "DELTA-NODE-21"}
        assert len(body["relations"]) == 1

    def test_graph_entity_unknown_404(self, client):
        response = client.get("/v1/graph/entity/e0000000000000000")
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "not_found"

    def test_chunk_endpoint(self, client):
        # chunk ids contain '#', which must ride URL-encoded
        response = client.get("/v1/chunks/graph21%230")
        assert response.status_code == 200
        body = response.json()
        assert body["doc_id"] == "graph21"
        assert "GAMMA-NODE-21" in body["text"]
        assert body["doc"]["source_kind"] == "other"

    def test_chunk_unknown_404(self, client):
        assert client.get("/v1/chunks/nope#9").status_code == 404

    def test_eval_endpoint(self, client, ablation_store):
        response = client.post(
            "/v1/eval",
            json={"benchmark_path": str(ablation_store / "benchmark.jsonl"), "mode": "base"},
        )
        assert response.status_code == 200
        body = response.json()
        assert body["total"] == 30 and body["correct"] == 10

    def test_image_query_uses_fixture_stub(self, client):
        response = client.post(
            "/v1/query",
            json={"text": "what does the staging diagram show?", "image_ids": ["img-staging-diagram"], "mode": "grg"},
        )
        assert response.status_code == 200
        body = response.json()
        # caption mentions the entity, so the graph fact resolves from the image
        assert any("GAMMA-NODE-21" in f["text"] for f in body["context"]["facts"])


class TestDeterminismBridge:
    def test_cli_and_http_answers_identical(self, ablation_store, client, capsys):
        text = "Which certification ledger governs the spectral lattice harmonizer deployments covering crystal oscillator calibration at grade four?"
        cfg = str(ablation_store / "config.json")
        rc, cli_result, _ = run_cli(
            capsys, ["--config", cfg, "query", "--mode", "grg", "--text", text]
        )
        assert rc == 0
        http_result = client.post("/v1/query", json={"text": text, "mode": "grg"}).json()
        assert cli_result["answer"] == http_result["answer"]
        assert cli_result["context"] == http_result["context"]


class TestStoreRootOverride:
    def test_env_var_overrides_config(self, tmp_path, monkeypatch):
        work = copy_fixture("corpus6", tmp_path)
        override = tmp_path / "elsewhere"
        monkeypatch.setenv("GRG_STORE_ROOT", str(override))
        config = load_config(work / "config.json")
        assert config.store_root == override
