"""On-disk artifact formats: generation CSVs, population/selection JSON, manifest."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import __version__
from .chromosome import to_json
from .circuit import ResourceCount, resource_count
from .errors import MissingArtifact
from .ga import FitnessRecord, GenerationLog

CSV_HEADER = ["stage", "generation", "index", "chromosome", "fitness", "rx", "cnot", "seconds"]
MANIFEST = "manifest.json"


def write_json(path, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, sort_keys=True)
        f.write("\n")


def read_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError as exc:
        raise MissingArtifact(f"missing file {path}") from exc


def write_generations_csv(path, logs: Sequence[GenerationLog], record_timings: bool = False) -> None:
    """One row per evaluated chromosome; ``seconds`` stays blank unless timings are recorded."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for entry in logs:
            for r in entry.records:
                seconds = f"{r.seconds:.4f}" if record_timings else ""
                w.writerow([r.stage, entry.generation, r.index, to_json(r.chromosome), repr(float(r.fitness)),
                            r.resources.rx, r.resources.cnot, seconds])


def read_generations_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    for row in rows:
        row["generation"] = int(row["generation"])
        row["index"] = int(row["index"])
        row["chromosome"] = tuple(json.loads(row["chromosome"]))
        row["fitness"] = float(row["fitness"])
        row["rx"] = int(row["rx"])
        row["cnot"] = int(row["cnot"])
    return rows


def record_to_dict(r: FitnessRecord) -> dict:
    return {
        "chromosome": list(r.chromosome),
        "fitness": float(r.fitness),
        "rx": r.resources.rx,
        "cnot": r.resources.cnot,
        "generation": r.generation,
        "index": r.index,
    }


def record_from_dict(d: dict) -> FitnessRecord:
    ch = tuple(int(g) for g in d["chromosome"])
    return FitnessRecord(
        chromosome=ch,
        fitness=float(d["fitness"]),
        resources=resource_count(ch),
        generation=int(d.get("generation", 0)),
        stage=d.get("stage", "infer"),
        index=int(d.get("index", 0)),
    )


def write_population(path, records: Iterable[FitnessRecord], stage: str, **extra) -> None:
    records = list(records)
    doc = {
        "stage": stage,
        "chromosomes": [list(r.chromosome) for r in records],
        "records": [record_to_dict(r) for r in records],
    }
    doc.update(extra)
    write_json(path, doc)


def read_population(path) -> tuple[list[tuple[int, ...]], list[FitnessRecord]]:
    doc = read_json(path)
    chromosomes = [tuple(int(g) for g in ch) for ch in doc["chromosomes"]]
    return chromosomes, [record_from_dict(d) for d in doc.get("records", [])]


def resources_text(rc: ResourceCount) -> str:
    return f"{rc.rx} RX, {rc.cnot} CNOT"


class Manifest:
    """Tracks which files each subcommand wrote into a run directory."""

    def __init__(self, run_dir):
        self.run_dir = Path(run_dir)
        self.path = self.run_dir / MANIFEST
        if self.path.exists():
            self.doc = read_json(self.path)
        else:
            self.doc = {"tool": "gatqnn", "version": __version__, "commands": {}, "artifacts": []}

    def record(self, command: str, config: dict, files: Sequence[str], seconds: float) -> None:
        self.doc["version"] = __version__
        self.doc["commands"][command] = {"config": config, "artifacts": sorted(files), "seconds": round(seconds, 3)}
        self.doc["artifacts"] = sorted({f for c in self.doc["commands"].values() for f in c["artifacts"]})
        write_json(self.path, self.doc)

    @property
    def artifacts(self) -> list[str]:
        return list(self.doc["artifacts"])

    def has(self, name: str) -> bool:
        return name in self.doc["artifacts"]

    def file(self, name: str) -> Optional[Path]:
        """Path of a manifest-listed artifact, ``None`` if not listed."""
        if not self.has(name):
            return None
        path = self.run_dir / name
        if not path.exists():
            raise MissingArtifact(f"{name} is listed in the manifest but missing from {self.run_dir}")
        return path


def relative(path, run_dir) -> str:
    return os.path.relpath(path, run_dir)
