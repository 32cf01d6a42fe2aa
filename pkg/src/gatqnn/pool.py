"""Shared macroCircuit parameters.

A :class:`ParameterPool` is treated as an immutable snapshot: its arrays are
flagged read-only, :func:`extract` hands out copies, and :func:`reintegrate`
returns a new pool. That makes concurrent reads within a generation safe and
confines writes to the generation barrier.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chromosome import Chromosome
from .circuit import SlotId, slot_set
from .errors import EmptyResults, GatQnnError

AGGREGATION_POLICIES = ("best", "weighted")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ParameterPool:
    n: int
    max_layers: int
    n_classes: int
    quantum: np.ndarray  # (max_layers, n); slot (layer, wire) -> quantum[layer - 1, wire]
    head_weights: np.ndarray  # (n_classes, n)
    head_bias: np.ndarray  # (n_classes,)
    revision: int = 0

    def __post_init__(self):
        for name, shape in (
            ("quantum", (self.max_layers, self.n)),
            ("head_weights", (self.n_classes, self.n)),
            ("head_bias", (self.n_classes,)),
        ):
            arr = _frozen(getattr(self, name))
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)

    def angle(self, slot: SlotId) -> float:
        return float(self.quantum[slot.layer - 1, slot.wire])

    @property
    def slots(self) -> list[SlotId]:
        return [SlotId(layer, w) for layer in range(1, self.max_layers + 1) for w in range(self.n)]

    def replace(self, **changes) -> "ParameterPool":
        fields = dict(
            n=self.n,
            max_layers=self.max_layers,
            n_classes=self.n_classes,
            quantum=self.quantum,
            head_weights=self.head_weights,
            head_bias=self.head_bias,
            revision=self.revision,
        )
        fields.update(changes)
        return ParameterPool(**fields)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "L_max": self.max_layers,
            "C": self.n_classes,
            "revision": self.revision,
            "quantum": [{"layer": s.layer, "wire": s.wire, "angle": self.angle(s)} for s in self.slots],
            "head_weights": self.head_weights.ravel().tolist(),
            "head_bias": self.head_bias.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterPool":
        n, lmax, c = int(d["n"]), int(d["L_max"]), int(d["C"])
        quantum = np.full((lmax, n), np.nan)
        for entry in d["quantum"]:
            quantum[int(entry["layer"]) - 1, int(entry["wire"])] = float(entry["angle"])
        if np.isnan(quantum).any():
            raise GatQnnError("pool document does not cover every slot")
        return cls(
            n=n,
            max_layers=lmax,
            n_classes=c,
            quantum=quantum,
            head_weights=np.asarray(d["head_weights"], dtype=float).reshape(c, n),
            head_bias=np.asarray(d["head_bias"], dtype=float),
            revision=int(d["revision"]),
        )

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "ParameterPool":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass
class ModelParams:
    """Copy of the parameters one microCircuit reads from the pool."""

    slots: list[SlotId]
    angles: np.ndarray
    head_weights: np.ndarray
    head_bias: np.ndarray


@dataclass
class TrainedResult:
    chromosome: Chromosome
    fitness: float
    slots: list[SlotId]
    angles: np.ndarray
    head_weights: np.ndarray
    head_bias: np.ndarray


def init_pool(n: int, max_layers: int, n_classes: int, rng: np.random.Generator) -> ParameterPool:
    """Angles uniform in [-pi, pi], head weights uniform in +/- 1/sqrt(n), zero bias."""
    if min(n, max_layers, n_classes) < 1:
        raise ValueError("n, max_layers and n_classes must be >= 1")
    quantum = rng.uniform(-np.pi, np.pi, size=(max_layers, n))
    a = 1.0 / np.sqrt(n)
    weights = rng.uniform(-a, a, size=(n_classes, n))
    return ParameterPool(n, max_layers, n_classes, quantum, weights, np.zeros(n_classes))


def extract(pool: ParameterPool, ch: Sequence[int]) -> ModelParams:
    slots = slot_set(ch)
    for s in slots:
        if not (1 <= s.layer <= pool.max_layers and 0 <= s.wire < pool.n):
            raise GatQnnError(f"slot {s} outside the pool ({pool.max_layers} layers, {pool.n} wires)")
    return ModelParams(
        slots=slots,
        angles=np.array([pool.angle(s) for s in slots]),
        head_weights=np.array(pool.head_weights),
        head_bias=np.array(pool.head_bias),
    )


def reintegrate(pool: ParameterPool, results: Sequence[TrainedResult], policy: str = "best") -> ParameterPool:
    """Fold one generation of trained microCircuits back into the pool.

    ``best``: every slot takes the angle from the fittest result that trained
    it (ties -> lower population index); the head comes from the fittest
    result overall. ``weighted``: fitness-weighted means per slot and for the
    head (uniform weights if all fitnesses are zero). Slots no result touched
    keep their value; the revision always advances by one.
    """
    if not results:
        raise EmptyResults("nothing to reintegrate")
    if policy not in AGGREGATION_POLICIES:
        raise ValueError(f"unknown aggregation policy {policy!r}")
    quantum = np.array(pool.quantum)
    # stable sort: descending fitness, population order on ties
    order = sorted(range(len(results)), key=lambda i: -results[i].fitness)

    if policy == "best":
        claimed = set()
        for i in order:
            r = results[i]
            for slot, angle in zip(r.slots, r.angles):
                if slot not in claimed:
                    claimed.add(slot)
                    quantum[slot.layer - 1, slot.wire] = angle
        top = results[order[0]]
        weights, bias = top.head_weights, top.head_bias
    else:
        fit = np.array([r.fitness for r in results], dtype=float)
        if fit.sum() <= 0:
            fit = np.ones_like(fit)
        acc: dict[SlotId, list[tuple[float, float]]] = {}
        for r, w in zip(results, fit):
            for slot, angle in zip(r.slots, r.angles):
                acc.setdefault(slot, []).append((w, angle))
        for slot, pairs in acc.items():
            ws = np.array([p[0] for p in pairs])
            vals = np.array([p[1] for p in pairs])
            if ws.sum() <= 0:
                ws = np.ones_like(ws)
            # normalize first so tiny fitness values cannot underflow the products
            quantum[slot.layer - 1, slot.wire] = (ws / ws.sum()) @ vals
        fit = fit / fit.sum()
        weights = sum(w * r.head_weights for r, w in zip(results, fit))
        bias = sum(w * r.head_bias for r, w in zip(results, fit))

    return pool.replace(quantum=quantum, head_weights=weights, head_bias=bias, revision=pool.revision + 1)


def write_slots(pool: ParameterPool, params: ModelParams) -> ParameterPool:
    """Overwrite the pool with one model's parameters (revision + 1)."""
    quantum = np.array(pool.quantum)
    for slot, angle in zip(params.slots, params.angles):
        quantum[slot.layer - 1, slot.wire] = angle
    return pool.replace(
        quantum=quantum,
        head_weights=params.head_weights,
        head_bias=params.head_bias,
        revision=pool.revision + 1,
    )


def pool_hash(pool: ParameterPool) -> str:
    """SHA-256 over shape and parameter bytes (revision excluded)."""
    h = hashlib.sha256()
    h.update(np.array([pool.n, pool.max_layers, pool.n_classes], dtype="<i8").tobytes())
    for arr in (pool.quantum, pool.head_weights, pool.head_bias):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return h.hexdigest()
