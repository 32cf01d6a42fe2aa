"""Markdown report assembled from the artifacts listed in a run manifest."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .artifacts import Manifest, read_generations_csv, read_json
from .errors import MissingArtifact

REPORT = "report.md"


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def generation_table(rows: list[dict], bold_last_top: int = 0) -> str:
    """Chromosome/accuracy grid with one column pair per generation."""
    by_gen = defaultdict(list)
    for row in rows:
        by_gen[row["generation"]].append(row)
    gens = sorted(by_gen)
    bold = set()
    if bold_last_top and gens:
        last = by_gen[gens[-1]]
        ranked = sorted(range(len(last)), key=lambda i: -last[i]["fitness"])
        bold = {last[i]["index"] for i in ranked[:bold_last_top]}
    header = "| " + " | ".join(f"Gen {g + 1} chromosome | Test acc" for g in gens) + " |"
    sep = "|" + "---|---:|" * len(gens)
    lines = [header, sep]
    height = max(len(by_gen[g]) for g in gens)
    for i in range(height):
        cells = []
        for g in gens:
            col = sorted(by_gen[g], key=lambda r: r["index"])
            if i < len(col):
                r = col[i]
                ch = "[" + ",".join(map(str, r["chromosome"])) + "]"
                acc = _fmt(r["fitness"])
                if g == gens[-1] and r["index"] in bold:
                    ch, acc = f"**{ch}**", f"**{acc}**"
                cells += [ch, acc]
            else:
                cells += ["", ""]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines)


def convergence_table(rows: list[dict]) -> str:
    by_gen = defaultdict(list)
    for row in rows:
        by_gen[row["generation"]].append(row["fitness"])
    lines = ["| Generation | Best | Mean | Best so far |", "|---:|---:|---:|---:|"]
    running = -np.inf
    for g in sorted(by_gen):
        vals = by_gen[g]
        running = max(running, max(vals))
        lines.append(f"| {g + 1} | {_fmt(max(vals))} | {_fmt(float(np.mean(vals)))} | {_fmt(running)} |")
    return "\n".join(lines)


def selection_table(selection: dict) -> str:
    lines = ["| Rank | Chromosome | Test acc | Resources |", "|---:|---|---:|---|"]
    for s in selection["selected"]:
        ch = "[" + ",".join(map(str, s["chromosome"])) + "]"
        lines.append(f"| {s['rank']} | {ch} | {_fmt(s['fitness'])} | {s['resources']} |")
    return "\n".join(lines)


def comparison_table(path: Path) -> str:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    lines = [
        "| Backend | GA-trained (best selected) | Regular (best selected) | Delta (GA - regular) | GA macro | Regular macro |",
        "|---|---:|---:|---:|---:|---:|",
    ]
    for r in rows:
        delta = float(r["delta"])
        lines.append(
            f"| {r['backend']} | {_fmt(float(r['ga_best']))} | {_fmt(float(r['regular_best']))} | "
            f"{delta:+.3f} | {_fmt(float(r['ga_macro']))} | {_fmt(float(r['regular_macro']))} |"
        )
    return "\n".join(lines)


def render(run_dir) -> str:
    """Build the report text; sections without artifacts are left out."""
    manifest = Manifest(run_dir)
    if not manifest.path.exists():
        raise MissingArtifact(f"no manifest in {run_dir}")
    out = ["# GA-trained HQNN run report", ""]

    train_cfg = manifest.doc["commands"].get("train", {}).get("config")
    if train_cfg:
        keys = ["n_qubits", "classes", "train_per_class", "test_per_class", "synthetic", "population_size",
                "generations", "parent_fraction", "mutation_rate", "crossover_points", "epochs", "learning_rate",
                "batch_size", "optimizer", "backend", "aggregation", "seed"]
        out += ["## Configuration", "", "| Key | Value |", "|---|---|"]
        out += [f"| {k} | {train_cfg.get(k)} |" for k in keys]
        out.append("")

    path = manifest.file("train_generations.csv")
    if path:
        rows = read_generations_csv(path)
        out += ["## Training-stage GA (test accuracy per generation)", "", generation_table(rows), ""]
        out += ["### Convergence", "", convergence_table(rows), ""]

    path = manifest.file("infer_generations.csv")
    if path:
        rows = read_generations_csv(path)
        top_k = manifest.doc["commands"].get("infer", {}).get("config", {}).get("top_k", 3)
        out += ["## Inference-stage GA (frozen pool, test accuracy)", "",
                "Generation 1 is the seed population taken from the final training generation.", "",
                generation_table(rows, bold_last_top=top_k), ""]

    path = manifest.file("selection.json")
    if path:
        out += ["## Selected microCircuits", "", selection_table(read_json(path)), ""]

    path = manifest.file("backend_comparison.csv")
    if path:
        out += ["## Backend comparison (GA-trained vs regularly trained pool)", "", comparison_table(path), ""]

    return "\n".join(out).rstrip() + "\n"


def write_report(run_dir) -> Path:
    text = render(run_dir)
    path = Path(run_dir) / REPORT
    path.write_text(text)
    return path
