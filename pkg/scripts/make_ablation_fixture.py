#!/usr/bin/env python3
"""Regenerate the shipped ablation fixture under fixtures/ablation/.

The fixture is built so each retrieval tier flips exactly its ten
questions:

  * easy tier: the answer needle sits in the question stem, so every
    mode answers it;
  * intermediate tier: the needle sits in exactly one corpus chunk and
    the stem shares that chunk's vocabulary, so retrieval (rag, grg)
    surfaces it;
  * hard tier: the needle is the rendered graph fact "S —selects→ O",
    a string that exists nowhere in any chunk, so only grg sees it.

Hard-tier correct labels are all D while every other needle maps to
A/B/C, so a stray chunk hit can never accidentally answer a hard
question.  Everything is deterministic: rerunning this script writes
byte-identical files.
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "ablation"

CHUNK_THEMES = [
    ("spectral lattice harmonizer", "crystal oscillator calibration at grade four"),
    ("ferrite waveguide coupler", "azimuth trimming of the polar mount bracket"),
    ("photonic splice enclosure", "dampening gel cartridge inspection rounds"),
    ("doppler beacon synchronizer", "drift ledger against the quartz reference"),
    ("cryogenic amplifier manifold", "helium loop insulation jacket checks"),
    ("mesh backhaul arbitration", "token rotation under the quorum scheduler"),
    ("ionospheric sounder array", "chirp cadence of the receiver mast anchors"),
    ("solar flare attenuation", "transponder safeguard drill scheduling"),
    ("undersea repeater buoyancy", "ballast actuator trim service intervals"),
    ("microwave relay gusset", "fatigue torque audits on the tower flange"),
]

FILLER_BODIES = [
    "Telemetry fabric bulletin. General circulation memo on seasonal maintenance windows and crew rotations across the metropolitan footprint.",
    "Telemetry fabric bulletin. Inventory reconciliation summary covering spare patch panels, splice trays, and weatherproof closures.",
    "Telemetry fabric bulletin. Training calendar announcement for rigging refreshers and elevated work permits in the coming quarter.",
    "Telemetry fabric bulletin. Vendor escrow update describing firmware archive custody and release note retention policies.",
    # declarative sentences keep the record forge exercised on this corpus
    "Telemetry fabric bulletin. The quarterly digest is the canonical record of field advisories issued by the operations desk.",
    "Telemetry fabric bulletin. The escalation ladder is the ordered list of duty contacts for outage triage.",
]

STEM_LABELS = ["A", "B", "C", "D"]
CHUNK_LABELS = ["A", "B", "C"]

DISTRACTORS = [
    "the northern ring registry",
    "the seasonal audit roster",
    "the dormant archive shelf",
    "the interim waiver list",
    "the legacy compliance binder",
]


def build():
    manifest = []
    benchmark = []
    needles = []

    # hard tier corpus docs: one isolated relation per question
    for i in range(10):
        n = 21 + i
        body = (
            "Telemetry fabric bulletin. Staging control notes for sector "
            f"{n}. The GAMMA-NODE-{n} selects the DELTA-NODE-{n} during staging windows."
        )
        manifest.append({"doc_id": f"graph{n}", "source_kind": "other", "locator": "inline:" + body, "meta": {}})
        needles.append((f"GAMMA-NODE-{n} —selects→ DELTA-NODE-{n}", "The answer is D."))
        benchmark.append(
            {
                "qid": f"q{n}",
                "stem": f"Sector staging review: which unit receives the handoff that GAMMA-NODE-{n} initiates?",
                "options": [
                    ["A", DISTRACTORS[i % 5]],
                    ["B", DISTRACTORS[(i + 1) % 5]],
                    ["C", DISTRACTORS[(i + 2) % 5]],
                    ["D", f"DELTA-NODE-{n}"],
                ],
                "answer_key": "D",
                "difficulty": "hard",
            }
        )

    # intermediate tier corpus docs: unique vocabulary plus a chunk needle
    for i, (theme, detail) in enumerate(CHUNK_THEMES):
        n = 11 + i
        label = CHUNK_LABELS[i % 3]
        body = (
            f"Telemetry fabric bulletin. Field guidance for the {theme} covering {detail}. "
            f"Certification ledger CHUNK-KEY-QC{n} governs every {theme} deployment this cycle."
        )
        manifest.append({"doc_id": f"chunk{n}", "source_kind": "other", "locator": "inline:" + body, "meta": {}})
        needles.append((f"CHUNK-KEY-QC{n}", f"The answer is {label}."))
        options = []
        for pos, option_label in enumerate(STEM_LABELS):
            text = "the registered deployment ledger" if option_label == label else DISTRACTORS[(i + pos) % 5]
            options.append([option_label, text])
        benchmark.append(
            {
                "qid": f"q{n}",
                "stem": f"Which certification ledger governs the {theme} deployments covering {detail}?",
                "options": options,
                "answer_key": label,
                "difficulty": "intermediate",
            }
        )

    # easy tier: needle rides in the stem itself, no corpus support needed
    for i in range(10):
        n = 1 + i
        label = STEM_LABELS[i % 4]
        needles.append((f"STEM-KEY-QS{n:02d}", f"The answer is {label}."))
        options = []
        for pos, option_label in enumerate(STEM_LABELS):
            text = "the published advisory figure" if option_label == label else DISTRACTORS[(i + pos) % 5]
            options.append([option_label, text])
        benchmark.append(
            {
                "qid": f"q{n:02d}",
                "stem": f"Advisory STEM-KEY-QS{n:02d} names which figure for the quarterly telemetry digest?",
                "options": options,
                "answer_key": label,
                "difficulty": "easy",
            }
        )

    for i, body in enumerate(FILLER_BODIES):
        manifest.append({"doc_id": f"filler{i + 1}", "source_kind": "wiki", "locator": "inline:" + body, "meta": {}})

    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "manifest.jsonl").write_text(
        "\n".join(json.dumps(row, ensure_ascii=False) for row in manifest) + "\n", encoding="utf-8"
    )
    (OUT / "benchmark.jsonl").write_text(
        "\n".join(json.dumps(row, ensure_ascii=False) for row in sorted(benchmark, key=lambda r: r["qid"])) + "\n",
        encoding="utf-8",
    )
    (OUT / "keywords.txt").write_text("# corpus keep-list\ntelemetry\n", encoding="utf-8")
    (OUT / "denylist.txt").write_text("# harmful-content screen terms (none for the fixture)\n", encoding="utf-8")

    config = {
        "store_root": "store",
        "chunking": {"target_chars": 600, "overlap_chars": 0},
        "embedder": {"name": "test", "dim": 128},
        "index": {"mode": "exact"},
        "retrieval": {"k": 4, "depth": 1, "budget_chars": 12000, "mode": "grg"},
        "mmio": {"confidence_threshold": 0.5, "fixtures": "mmio_fixtures.json"},
        "pipeline": {
            "keywords": "keywords.txt",
            "denylist": "denylist.txt",
            "use_keyword_filter": True,
            "use_judge_filter": True,
            "judge": {"topics": ["telemetry"], "min_ttr": 0.2},
        },
        "adapters": {
            "generator": {
                "kind": "stub",
                "params": {
                    "needles": [[n, a] for n, a in needles],
                    "default_answer": "none of these options can be confirmed",
                },
            },
            "judge": {"kind": "stub"},
            "extractor": {"kind": "stub"},
            "captioner": {"kind": "stub"},
            "ocr": {"kind": "stub"},
        },
    }
    (OUT / "config.json").write_text(json.dumps(config, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")

    mmio_fixtures = {
        "img-staging-diagram": {
            "caption": "staging fabric diagram with GAMMA-NODE-21 handing off downstream",
            "tokens": [
                {"text": "GAMMA-NODE-21", "confidence": 0.97, "bbox": [4, 8, 120, 14]},
                {"text": "staging", "confidence": 0.88, "bbox": [4, 30, 60, 14]},
                {"text": "smudge", "confidence": 0.22, "bbox": [90, 30, 40, 14]},
            ],
        },
        "img-blank": {"caption": "empty calibration slide", "tokens": []},
    }
    (OUT / "mmio_fixtures.json").write_text(
        json.dumps(mmio_fixtures, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote fixture to {OUT}: {len(manifest)} docs, {len(benchmark)} questions")


if __name__ == "__main__":
    build()
