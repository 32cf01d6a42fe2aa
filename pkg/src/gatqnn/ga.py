"""Evolutionary loops: GA-driven macroCircuit training and inference-only search.

Every stochastic step draws from its own stream derived from
``(master seed, stage, generation, index)``, so results do not depend on how
fitness evaluations are scheduled across worker threads.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .backend import BackendConfig
from .chromosome import Chromosome, GeneBounds, crossover, mutate, random_chromosome, validate
from .circuit import ResourceCount, build, resource_count
from .errors import EmptyPopulation, KTooLarge, PoolMutationDetected, TooFewParents
from .hqnn import HybridModel, TrainConfig, evaluate, train
from .pool import ParameterPool, TrainedResult, extract, init_pool, pool_hash, reintegrate, write_slots

log = logging.getLogger(__name__)

STAGES = {"init": 0, "train": 1, "infer": 2, "breed-train": 3, "breed-infer": 4, "pool": 5, "macro": 6, "split": 7}


def stream(seed: int, stage: str, generation: int = 0, index: int = 0) -> np.random.Generator:
    """Independent random stream for one (stage, generation, index) task."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), STAGES[stage], int(generation), int(index)]))


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 10
    generations: int = 5
    parent_fraction: float = 0.4
    mutation_rate: float = 0.6
    crossover_points: int = 3
    seed: int = 0
    aggregation: str = "best"
    # reuse a carried-over parent's previous training result instead of retraining it
    cache_parent_fitness: bool = False
    # > 0: hold out this fraction of the training split and use it for fitness
    validation_fraction: float = 0.0

    def __post_init__(self):
        if not 0 < self.parent_fraction <= 1:
            raise ValueError("parent_fraction must be in (0, 1]")
        if self.n_parents < 2:
            raise ValueError("population_size * parent_fraction must leave at least 2 parents")
        if not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must be in [0, 1)")

    @property
    def n_parents(self) -> int:
        return math.floor(self.population_size * self.parent_fraction + 1e-9)


@dataclass
class FitnessRecord:
    chromosome: Chromosome
    fitness: float
    resources: ResourceCount
    generation: int = 0
    stage: str = "infer"
    index: int = 0
    seconds: float = 0.0


@dataclass
class GenerationLog:
    generation: int
    records: list[FitnessRecord]
    pool_revision: int
    pool_digest: str = ""


@dataclass
class StageResult:
    pool: ParameterPool
    population: list[Chromosome]
    logs: list[GenerationLog] = field(default_factory=list)

    @property
    def records(self) -> list[FitnessRecord]:
        return [r for g in self.logs for r in g.records]


def _map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda it: fn(*it), items))


def _rank(records: Sequence[FitnessRecord]) -> list[int]:
    # descending fitness, population index breaks ties
    return sorted(range(len(records)), key=lambda i: -records[i].fitness)


def select_parents(records: Sequence[FitnessRecord], parent_fraction: float) -> list[Chromosome]:
    if not records:
        raise EmptyPopulation("no records to select from")
    count = math.floor(len(records) * parent_fraction + 1e-9)
    return [records[i].chromosome for i in _rank(records)[:count]]


def next_generation(
    parents: Sequence[Chromosome], config: GaConfig, bounds: GeneBounds, rng: np.random.Generator
) -> list[Chromosome]:
    """Parents first (unchanged), then crossover offspring, each mutated with ``mutation_rate``."""
    if len(parents) < 2:
        raise TooFewParents(f"need at least 2 parents, got {len(parents)}")
    population = [tuple(p) for p in parents][: config.population_size]
    while len(population) < config.population_size:
        a, b = rng.choice(len(parents), size=2, replace=False)
        child = crossover(parents[a], parents[b], config.crossover_points, rng)
        if rng.random() < config.mutation_rate:
            child = mutate(child, bounds, rng)
        population.append(validate(child, bounds))
    return population


def model_for(ch: Sequence[int], pool: ParameterPool) -> HybridModel:
    return HybridModel.from_params(build(ch, pool.n), extract(pool, ch))


def evaluate_fitness_train(
    ch: Sequence[int],
    pool: ParameterPool,
    train_data,
    fitness_data,
    backend: BackendConfig,
    train_config: TrainConfig,
    rng: Optional[np.random.Generator] = None,
) -> TrainedResult:
    """Train the microCircuit from the pool snapshot; fitness = accuracy on ``fitness_data``."""
    if rng is None:
        rng = np.random.default_rng(train_config.seed)
    model = model_for(ch, pool)
    trained, _ = train(model, train_data, train_config, backend, rng)
    fitness = evaluate(trained, fitness_data, backend, rng)
    return TrainedResult(
        chromosome=tuple(ch),
        fitness=fitness,
        slots=list(trained.spec.slots),
        angles=trained.angles,
        head_weights=trained.head_weights,
        head_bias=trained.head_bias,
    )


def evaluate_fitness_infer(
    ch: Sequence[int],
    pool: ParameterPool,
    test_data,
    backend: BackendConfig,
    rng: Optional[np.random.Generator] = None,
    generation: int = 0,
    index: int = 0,
) -> FitnessRecord:
    """Accuracy of the microCircuit using frozen pool parameters."""
    start = time.perf_counter()
    if backend.stochastic and rng is None:
        rng = np.random.default_rng(backend.seed)
    acc = evaluate(model_for(ch, pool), test_data, backend, rng)
    return FitnessRecord(
        chromosome=tuple(ch),
        fitness=acc,
        resources=resource_count(ch),
        generation=generation,
        stage="infer",
        index=index,
        seconds=time.perf_counter() - start,
    )


def _split_fitness_data(config: GaConfig, train_data, test_data):
    if config.validation_fraction <= 0:
        return train_data, test_data
    order = stream(config.seed, "split").permutation(len(train_data))
    n_val = max(1, int(round(config.validation_fraction * len(train_data))))
    return train_data.take(np.sort(order[n_val:])), train_data.take(np.sort(order[:n_val]))


def run_training_stage(
    config: GaConfig,
    bounds: GeneBounds,
    train_data,
    test_data,
    backend: BackendConfig,
    train_config: TrainConfig,
    n_classes: Optional[int] = None,
    pool: Optional[ParameterPool] = None,
    threads: int = 1,
    on_generation: Optional[Callable[[GenerationLog], None]] = None,
) -> StageResult:
    """GA-driven macroCircuit training.

    Each generation trains every chromosome against the same pool snapshot,
    folds the results back into the pool, then breeds the next population
    from the top parents. The returned population is the last one evaluated.
    """
    if n_classes is None:
        n_classes = int(train_data.n_classes)
    if pool is None:
        pool = init_pool(bounds.n_qubits, bounds.max_layers, n_classes, stream(config.seed, "pool"))
    fit_train, fit_data = _split_fitness_data(config, train_data, test_data)
    init_rng = stream(config.seed, "init")
    population = [random_chromosome(bounds, init_rng) for _ in range(config.population_size)]
    logs: list[GenerationLog] = []
    cache: dict[Chromosome, TrainedResult] = {}

    def task(g, i, ch, snapshot):
        start = time.perf_counter()
        if config.cache_parent_fitness and ch in cache:
            result = cache[ch]
        else:
            result = evaluate_fitness_train(
                ch, snapshot, fit_train, fit_data, backend, train_config, stream(config.seed, "train", g, i)
            )
        return result, time.perf_counter() - start

    for g in range(config.generations):
        snapshot = pool
        outcome = _map(task, [(g, i, ch, snapshot) for i, ch in enumerate(population)], threads)
        results = [r for r, _ in outcome]
        pool = reintegrate(snapshot, results, config.aggregation)
        records = [
            FitnessRecord(r.chromosome, r.fitness, resource_count(r.chromosome), g, "train", i, secs)
            for i, (r, secs) in enumerate(outcome)
        ]
        if config.cache_parent_fitness:
            cache = {r.chromosome: r for r in results}
        entry = GenerationLog(g, records, pool.revision, pool_hash(pool))
        logs.append(entry)
        log.info("train generation %d: best %.4f", g, max(r.fitness for r in records))
        if on_generation:
            on_generation(entry)
        if g < config.generations - 1:
            parents = select_parents(records, config.parent_fraction)
            population = next_generation(parents, config, bounds, stream(config.seed, "breed-train", g))
    return StageResult(pool, population, logs)


def run_inference_stage(
    pool: ParameterPool,
    seed_population: Sequence[Sequence[int]],
    config: GaConfig,
    bounds: GeneBounds,
    test_data,
    backend: BackendConfig,
    threads: int = 1,
) -> tuple[list[FitnessRecord], list[GenerationLog]]:
    """Inference-only GA over a frozen pool.

    Generation 0 evaluates the seed population; ``config.generations`` further
    generations are bred and evaluated. Returns the last generation ranked by
    fitness (descending) and all generation logs.
    """
    digest = pool_hash(pool)
    population = [validate(ch, bounds) for ch in seed_population]
    if len(population) != config.population_size:
        raise ValueError(f"seed population has {len(population)} chromosomes, expected {config.population_size}")
    logs: list[GenerationLog] = []

    def task(g, i, ch):
        rng = stream(config.seed, "infer", g, i) if backend.stochastic else None
        return evaluate_fitness_infer(ch, pool, test_data, backend, rng, g, i)

    for g in range(config.generations + 1):
        records = _map(task, [(g, i, ch) for i, ch in enumerate(population)], threads)
        logs.append(GenerationLog(g, records, pool.revision, digest))
        log.info("infer generation %d: best %.4f", g, max(r.fitness for r in records))
        if g < config.generations:
            parents = select_parents(records, config.parent_fraction)
            population = next_generation(parents, config, bounds, stream(config.seed, "breed-infer", g))
    if pool_hash(pool) != digest:
        raise PoolMutationDetected("pool parameters changed during inference")
    last = logs[-1].records
    return [last[i] for i in _rank(last)], logs


def select_top_k(records: Iterable[FitnessRecord], k: int) -> list[FitnessRecord]:
    """Top ``k`` distinct chromosomes by fitness (first occurrence of duplicates kept)."""
    seen = set()
    unique = []
    for r in records:
        key = tuple(r.chromosome)
        if key not in seen:
            seen.add(key)
            unique.append(r)
    if k > len(unique):
        raise KTooLarge(f"k={k} but only {len(unique)} distinct chromosomes")
    return [unique[i] for i in _rank(unique)[:k]]


def train_full_macro(
    pool: ParameterPool,
    train_data,
    train_config: TrainConfig,
    backend: BackendConfig,
    rng: Optional[np.random.Generator] = None,
) -> ParameterPool:
    """Conventional baseline: train the full macroCircuit and write every parameter back."""
    full = (pool.n,) * (2 * pool.max_layers) + (pool.max_layers,)
    model = model_for(full, pool)
    if rng is None:
        rng = np.random.default_rng(train_config.seed)
    trained, _ = train(model, train_data, train_config, backend, rng)
    return write_slots(pool, trained.to_params())
