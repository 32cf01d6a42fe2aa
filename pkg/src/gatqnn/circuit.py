"""Chromosome -> microCircuit mapping and resource accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .backend import GateOp
from .chromosome import layers
from .errors import WidthExceedsQubits


class SlotId(NamedTuple):
    """Position of a trainable angle in the macroCircuit: 1-based layer, 0-based wire."""

    layer: int
    wire: int


class ResourceCount(NamedTuple):
    rx: int
    cnot: int

    def __str__(self):
        return f"{self.rx} RX, {self.cnot} CNOT"


@dataclass(frozen=True)
class MicroCircuitSpec:
    n: int
    gates: tuple[GateOp, ...]
    slots: tuple[SlotId, ...]
    slot_index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "slot_index", {s: i for i, s in enumerate(self.slots)})

    @property
    def resources(self) -> ResourceCount:
        rx = sum(g.kind == "RX" for g in self.gates)
        return ResourceCount(rx, len(self.gates) - rx)


def build(ch: Sequence[int], n: int) -> MicroCircuitSpec:
    """Instantiate the microCircuit selected by ``ch`` on ``n`` wires.

    Layer ``l`` places RX gates on wires ``0..gR-1`` (slot ``(l, wire)``), then
    ``gC`` ring CNOTs ``j -> j+1 (mod n)`` for ``j = 0..gC-1``.
    """
    gates: list[GateOp] = []
    slots: list[SlotId] = []
    for layer, (g_rx, g_cnot) in enumerate(layers(ch), start=1):
        if g_rx > n or g_cnot > n:
            raise WidthExceedsQubits(f"layer {layer} widths ({g_rx}, {g_cnot}) exceed {n} qubits")
        for wire in range(g_rx):
            slot = SlotId(layer, wire)
            gates.append(GateOp("RX", (wire,), slot))
            slots.append(slot)
        for j in range(g_cnot):
            gates.append(GateOp("CNOT", (j % n, (j + 1) % n)))
    return MicroCircuitSpec(n, tuple(gates), tuple(slots))


def slot_set(ch: Sequence[int]) -> list[SlotId]:
    return [SlotId(layer, w) for layer, (g_rx, _) in enumerate(layers(ch), start=1) for w in range(g_rx)]


def param_count(ch: Sequence[int]) -> int:
    return sum(g_rx for g_rx, _ in layers(ch))


def resource_count(ch: Sequence[int]) -> ResourceCount:
    pairs = layers(ch)
    return ResourceCount(sum(r for r, _ in pairs), sum(c for _, c in pairs))


def draw(spec: MicroCircuitSpec) -> str:
    """Text diagram, one line per wire, one column per gate."""
    rows = [[f"q{w}: "] for w in range(spec.n)]
    for gate in spec.gates:
        if gate.kind == "RX":
            cells = {gate.wires[0]: f"RX{gate.slot.layer}{gate.slot.wire}"}
        else:
            c, t = gate.wires
            lo, hi = min(c, t), max(c, t)
            cells = {c: "●", t: "⊕"}
            cells.update({w: "│" for w in range(lo + 1, hi)})
        width = max(len(s) for s in cells.values())
        for w in range(spec.n):
            rows[w].append(cells.get(w, "").center(width, "─"))
    return "\n".join("─".join(r) + "─" for r in rows)
