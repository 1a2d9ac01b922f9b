#!/usr/bin/env python3
"""Build stores from the shipped fixture and run the retrieval ablation.

Runs the full pipeline (ingest, index, graph) into a scratch store, then
evaluates the 30-question benchmark in base, rag, and grg modes and
prints the accuracy ladder.  Everything is stub-driven and deterministic;
expected output is base 10/30, rag 20/30, grg 30/30.

Usage: python scripts/run_ablation.py [workdir]
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from grg.cli import main as cli

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "ablation"


def run(workdir: Path) -> int:
    work = workdir / "ablation"
    if work.exists():
        shutil.rmtree(work)
    shutil.copytree(FIXTURE, work)
    cfg = str(work / "config.json")

    for step in (
        ["--config", cfg, "ingest", "--manifest", str(work / "manifest.jsonl")],
        ["--config", cfg, "index"],
        ["--config", cfg, "graph"],
    ):
        rc = cli(step)
        if rc != 0:
            print(f"step {step[2]} failed with exit code {rc}", file=sys.stderr)
            return rc

    print()
    print(f"{'mode':>6} | {'correct':>7} | accuracy | easy  inter  hard")
    print("-" * 58)
    for mode in ("base", "rag", "grg"):
        out = work / f"report_{mode}.json"
        rc = cli([
            "--config", cfg, "eval",
            "--benchmark", str(work / "benchmark.jsonl"),
            "--mode", mode, "--out", str(out),
        ])
        if rc != 0:
            return rc
        report = json.loads(out.read_text(encoding="utf-8"))
        tiers = report["per_difficulty"]
        tier_cells = "  ".join(
            f"{int(tiers[t]['correct'])}/{int(tiers[t]['total'])}"
            for t in ("easy", "intermediate", "hard")
        )
        print(
            f"{mode:>6} | {report['correct']:>4}/{report['total']} |   {report['accuracy']:.3f}  | {tier_cells}"
        )
    print(f"\nreports and stores under {work}")
    return 0


if __name__ == "__main__":
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="grg-ablation-"))
    sys.exit(run(workdir))
