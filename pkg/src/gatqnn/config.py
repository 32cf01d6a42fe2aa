"""Run configuration: one flat ``key = value`` file plus command-line overrides.

Example file::

    # desk-scale MNIST
    n_qubits = 4
    classes = [0, 1, 2, 3]
    train_per_class = 600
    test_per_class = 100
    data_dir = data/mnist
    population_size = 10
    generations = 5
    backend = exact

Values are parsed as JSON where possible (numbers, booleans, lists) and kept
as strings otherwise. Unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .backend import BACKEND_KINDS, BackendConfig
from .chromosome import GeneBounds
from .errors import ConfigError
from .ga import GaConfig
from .hqnn import TrainConfig
from .pool import AGGREGATION_POLICIES


@dataclass
class RunConfig:
    # problem
    n_qubits: int = 4
    classes: list = field(default_factory=lambda: [0, 1, 2, 3])
    train_per_class: int = 6000
    test_per_class: int = 1000
    data_dir: Optional[str] = None
    synthetic: bool = False
    synthetic_spread: float = 0.3
    width_max: Optional[int] = None  # defaults to n_qubits
    depth_max: int = 2
    # genetic algorithm
    population_size: int = 10
    generations: int = 5
    infer_generations: Optional[int] = None  # defaults to generations
    parent_fraction: float = 0.4
    mutation_rate: float = 0.6
    crossover_points: int = 3
    aggregation: str = "best"
    cache_parent_fitness: bool = False
    validation_fraction: float = 0.0
    # microCircuit training
    epochs: int = 3
    learning_rate: float = 0.01
    batch_size: int = 32
    optimizer: str = "adam"
    # execution
    backend: str = "exact"
    shots: int = 1024
    noise_p: float = 0.01
    # run
    top_k: int = 3
    seed: int = 0
    out: str = "runs/default"
    threads: int = 1
    record_timings: bool = False

    def validate(self, needs_data: bool = True) -> "RunConfig":
        if not 1 <= self.n_qubits <= 10:
            raise ConfigError(f"n_qubits must be in [1, 10], got {self.n_qubits}")
        if len(self.classes) < 2 or len(set(self.classes)) != len(self.classes):
            raise ConfigError(f"need at least two distinct classes, got {self.classes}")
        if len(self.classes) > 1 << self.n_qubits:
            raise ConfigError(f"{len(self.classes)} classes exceed 2^{self.n_qubits} features")
        if self.width_max is not None and not 1 <= self.width_max <= self.n_qubits:
            raise ConfigError(f"width_max {self.width_max} must be in [1, n_qubits]")
        if self.backend not in BACKEND_KINDS:
            raise ConfigError(f"backend must be one of {BACKEND_KINDS}")
        if self.aggregation not in AGGREGATION_POLICIES:
            raise ConfigError(f"aggregation must be one of {AGGREGATION_POLICIES}")
        if self.top_k < 0 or self.threads < 1:
            raise ConfigError("top_k must be >= 0 and threads >= 1")
        if self.top_k > self.population_size:
            raise ConfigError(f"top_k {self.top_k} exceeds population_size {self.population_size}")
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise ConfigError("train_per_class and test_per_class must be >= 1")
        if needs_data and not self.synthetic and not self.data_dir:
            raise ConfigError("no data source: set data_dir or use --synthetic")
        # delegate the remaining range checks to the component configs
        try:
            self.bounds(), self.ga(), self.train_config(), self.backend_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def bounds(self) -> GeneBounds:
        return GeneBounds((1, self.width_max or self.n_qubits), (1, self.depth_max), self.n_qubits)

    def ga(self, inference: bool = False) -> GaConfig:
        generations = self.generations
        if inference and self.infer_generations is not None:
            generations = self.infer_generations
        return GaConfig(
            population_size=self.population_size,
            generations=generations,
            parent_fraction=self.parent_fraction,
            mutation_rate=self.mutation_rate,
            crossover_points=self.crossover_points,
            seed=self.seed,
            aggregation=self.aggregation,
            cache_parent_fitness=self.cache_parent_fitness,
            validation_fraction=self.validation_fraction,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            optimizer=self.optimizer,
            seed=self.seed,
        )

    def backend_config(self, kind: Optional[str] = None) -> BackendConfig:
        return BackendConfig(kind or self.backend, shots=self.shots, p=self.noise_p, seed=self.seed)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, value: Any) -> Any:
    if key not in FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    if isinstance(value, str):
        text = value.strip()
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            lowered = text.lower()
            value = {"true": True, "false": False, "none": None, "null": None}.get(lowered, text)
    default = getattr(RunConfig(), key)
    if isinstance(default, bool) and not isinstance(value, bool):
        raise ConfigError(f"{key} must be true/false, got {value!r}")
    if isinstance(default, int) and not isinstance(default, bool) and isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if key == "data_dir" and value is not None:
        value = str(value)
    return value


def parse_config_text(text: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return {k: _coerce(k, v) for k, v in parser["run"].items()}


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    values: dict = {}
    if path:
        try:
            with open(path) as f:
                values.update(parse_config_text(f.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = _coerce(k, v)
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
