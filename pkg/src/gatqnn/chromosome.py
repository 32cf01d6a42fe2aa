"""Integer chromosomes and the genetic operators acting on them.

A chromosome is a plain tuple ``(g1R, g1C, g2R, g2C, ..., L)``: one
(rotation width, entangling width) pair per possible layer followed by the
active depth ``L``. Only the first ``2L`` genes shape the circuit; the rest are
carried along but ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidChromosome, TooManyPoints

Chromosome = tuple[int, ...]


@dataclass(frozen=True)
class GeneBounds:
    """Inclusive admissible ranges for width genes and the depth gene."""

    width: tuple[int, int] = (1, 4)
    depth: tuple[int, int] = (1, 2)
    n_qubits: int = 4
    # layer capacity of the chromosome; None means max(2, depth max)
    layers: Optional[int] = None

    def __post_init__(self):
        wlo, whi = self.width
        dlo, dhi = self.depth
        if not (1 <= wlo <= whi) or not (1 <= dlo <= dhi):
            raise ValueError(f"bad bounds width={self.width} depth={self.depth}")
        if whi > self.n_qubits:
            raise ValueError(f"width max {whi} exceeds {self.n_qubits} qubits")
        if self.layers is not None and dhi > self.layers:
            raise ValueError(f"depth max {dhi} exceeds the layer capacity {self.layers}")

    @property
    def max_layers(self) -> int:
        return self.layers if self.layers is not None else max(2, self.depth[1])

    @property
    def length(self) -> int:
        return 2 * self.max_layers + 1

    def admissible(self, position: int) -> np.ndarray:
        lo, hi = self.depth if position == self.length - 1 else self.width
        return np.arange(lo, hi + 1)

    def full(self) -> Chromosome:
        """The macroCircuit chromosome: every width gene at max, all layers active."""
        return (self.width[1],) * (self.length - 1) + (self.depth[1],)


def validate(ch: Sequence[int], bounds: GeneBounds) -> Chromosome:
    ch = tuple(int(g) for g in ch)
    if len(ch) != bounds.length:
        raise InvalidChromosome(f"{list(ch)}: expected {bounds.length} genes")
    for pos, g in enumerate(ch):
        allowed = bounds.admissible(pos)
        if not allowed[0] <= g <= allowed[-1]:
            raise InvalidChromosome(f"{list(ch)}: gene {pos} = {g} outside [{allowed[0]}, {allowed[-1]}]")
    return ch


def depth(ch: Sequence[int]) -> int:
    return int(ch[-1])


def active_genes(ch: Sequence[int]) -> list[int]:
    return [int(g) for g in ch[: 2 * depth(ch)]]


def layers(ch: Sequence[int]) -> list[tuple[int, int]]:
    """Active (rotation width, entangling width) pairs, one per layer."""
    genes = active_genes(ch)
    return [(genes[i], genes[i + 1]) for i in range(0, len(genes), 2)]


def random_chromosome(bounds: GeneBounds, rng: np.random.Generator) -> Chromosome:
    return tuple(int(rng.choice(bounds.admissible(pos))) for pos in range(bounds.length))


def crossover(
    p1: Sequence[int],
    p2: Sequence[int],
    num_points: int,
    rng: np.random.Generator,
    cuts: Optional[Sequence[int]] = None,
) -> Chromosome:
    """Multi-point crossover producing a single child.

    ``num_points`` distinct cut positions are drawn from the internal
    boundaries ``1..len-1``; segments are copied alternately from ``p1`` (first)
    and ``p2``. Passing ``cuts`` fixes the boundaries instead of drawing them.
    """
    length = len(p1)
    if len(p2) != length:
        raise InvalidChromosome("parents differ in length")
    if not 0 <= num_points < length:
        raise TooManyPoints(f"{num_points} cut points on a {length}-gene chromosome")
    if cuts is None:
        cuts = rng.choice(np.arange(1, length), size=num_points, replace=False)
    cuts = sorted(int(c) for c in cuts)
    if len(set(cuts)) != num_points or any(not 0 < c < length for c in cuts):
        raise TooManyPoints(f"invalid cut positions {cuts}")
    child = []
    parents = (p1, p2)
    bounds = [0, *cuts, length]
    for seg, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        child.extend(int(g) for g in parents[seg % 2][a:b])
    return tuple(child)


def mutate(
    ch: Sequence[int],
    bounds: GeneBounds,
    rng: np.random.Generator,
    position: Optional[int] = None,
) -> Chromosome:
    """Resample one gene to a different admissible value.

    Positions whose admissible set is a singleton cannot change and are never
    picked; if every set is a singleton the chromosome comes back unchanged.
    """
    ch = tuple(int(g) for g in ch)
    if position is None:
        mutable = [pos for pos in range(len(ch)) if len(bounds.admissible(pos)) > 1]
        if not mutable:
            return ch
        position = int(rng.choice(mutable))
    choices = [v for v in bounds.admissible(position) if v != ch[position]]
    if not choices:
        return ch
    out = list(ch)
    out[position] = int(rng.choice(choices))
    return tuple(out)


def to_json(ch: Sequence[int]) -> str:
    return "[" + ",".join(str(int(g)) for g in ch) + "]"
