"""Command-line entry point: ``gatqnn <subcommand> [options]``.

Subcommands mirror the pipeline stages: ``train`` (GA-driven macroCircuit
training), ``baseline`` (conventional full-macroCircuit training), ``infer``
(inference-only GA on a frozen pool), ``select`` (top-k deployment report),
``compare-backends`` and ``report``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path
from typing import Optional

from . import __version__
from .artifacts import (
    Manifest,
    read_population,
    record_to_dict,
    resources_text,
    write_generations_csv,
    write_json,
    write_population,
)
from .chromosome import to_json
from .config import RunConfig, load_config
from .data import PcaModel, load_mnist, fit_pca, project_and_normalize, subset_classes, synthetic_blobs
from .errors import ConfigError, GatQnnError
from .ga import (
    evaluate_fitness_infer,
    run_inference_stage,
    run_training_stage,
    select_top_k,
    stream,
    train_full_macro,
)
from .pool import ParameterPool, init_pool, pool_hash
from .report import REPORT, write_report

log = logging.getLogger("gatqnn")


# --- data ----------------------------------------------------------------

def load_data(cfg: RunConfig, pca: Optional[PcaModel] = None):
    """Train/test splits for a config; MNIST runs also return the PCA model.

    Subsets are drawn from seeded streams, so every subcommand sees the same
    samples for the same config. A supplied ``pca`` is reused instead of refit.
    """
    n_classes = len(cfg.classes)
    dim = 1 << cfg.n_qubits
    if cfg.synthetic:
        train = synthetic_blobs(n_classes, dim, cfg.train_per_class, cfg.synthetic_spread, stream(cfg.seed, "split", 1))
        test = synthetic_blobs(n_classes, dim, cfg.test_per_class, cfg.synthetic_spread, stream(cfg.seed, "split", 2))
        return train, test, None
    train_raw = subset_classes(load_mnist(cfg.data_dir, "train"), cfg.classes, cfg.train_per_class,
                               stream(cfg.seed, "split", 1))
    test_raw = subset_classes(load_mnist(cfg.data_dir, "test"), cfg.classes, cfg.test_per_class,
                              stream(cfg.seed, "split", 2))
    if pca is None:
        pca = fit_pca(train_raw.flat(), dim)
    elif pca.out_dim != dim:
        raise ConfigError(f"PCA model has {pca.out_dim} components, expected {dim}")
    return project_and_normalize(pca, train_raw, cfg.classes), project_and_normalize(pca, test_raw, cfg.classes), pca


def _pca_beside(pool_path: Path) -> Optional[PcaModel]:
    candidate = pool_path.parent / "pca.json"
    return PcaModel.load(candidate) if candidate.exists() else None


def _check_pool(pool: ParameterPool, cfg: RunConfig) -> None:
    if pool.n != cfg.n_qubits or pool.n_classes != len(cfg.classes):
        raise ConfigError(
            f"pool has {pool.n} qubits / {pool.n_classes} classes, config has {cfg.n_qubits} / {len(cfg.classes)}"
        )


# --- subcommands -----------------------------------------------------------

def cmd_train(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    train, test, pca = load_data(cfg)
    written = []
    if pca is not None:
        pca.save(out / "pca.json")
        written.append("pca.json")
    result = run_training_stage(
        cfg.ga(), cfg.bounds(), train, test, cfg.backend_config(), cfg.train_config(),
        n_classes=len(cfg.classes), threads=cfg.threads,
    )
    result.pool.save(out / "pool.json")
    write_generations_csv(out / "train_generations.csv", result.logs, cfg.record_timings)
    if result.logs:
        write_population(out / "final_population.json", result.logs[-1].records, "train")
    else:
        # zero generations: the unevaluated initial population is the seed
        write_json(out / "final_population.json",
                   {"stage": "train", "chromosomes": [list(c) for c in result.population], "records": []})
    written += ["pool.json", "train_generations.csv", "final_population.json"]
    best = max((r.fitness for r in result.records), default=float("nan"))
    print(f"train: {len(result.records)} evaluations, best fitness {best:.4f}, pool revision {result.pool.revision}")
    return {"files": written}


def cmd_baseline(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    train, test, pca = load_data(cfg)
    written = []
    if pca is not None:
        pca.save(out / "pca.json")
        written.append("pca.json")
    pool = init_pool(cfg.n_qubits, cfg.depth_max, len(cfg.classes), stream(cfg.seed, "pool"))
    trained = train_full_macro(pool, train, cfg.train_config(), cfg.backend_config(), stream(cfg.seed, "macro"))
    trained.save(out / "pool_regular.json")
    written.append("pool_regular.json")
    full = cfg.bounds().full()
    acc = evaluate_fitness_infer(full, trained, test, cfg.backend_config(), stream(cfg.seed, "macro", 1)).fitness
    print(f"baseline: full macroCircuit {to_json(full)} test accuracy {acc:.4f}")
    return {"files": written}


def _infer(cfg: RunConfig, pool: ParameterPool, seed_population, test, backend_kind: Optional[str] = None):
    backend = cfg.backend_config(backend_kind)
    return run_inference_stage(pool, seed_population, cfg.ga(inference=True), cfg.bounds(), test, backend,
                               threads=cfg.threads)


def cmd_infer(cfg: RunConfig, pool_path: Path, population_path: Path) -> dict:
    out = Path(cfg.out)
    pool = ParameterPool.load(pool_path)
    _check_pool(pool, cfg)
    seed_population, _ = read_population(population_path)
    _, test, _ = load_data(cfg, _pca_beside(pool_path))
    before = pool_hash(pool)
    ranked, logs = _infer(cfg, pool, seed_population, test)
    after = pool_hash(pool)
    write_generations_csv(out / "infer_generations.csv", logs, cfg.record_timings)
    write_population(out / "ranked_population.json", ranked, "infer", pool_digest=after, backend=cfg.backend)
    status = "unchanged" if before == after else "CHANGED"
    print(f"pool digest before {before} after {after} ({status})")
    print(f"infer: best {to_json(ranked[0].chromosome)} fitness {ranked[0].fitness:.4f}")
    return {"files": ["infer_generations.csv", "ranked_population.json"]}


def format_selection(selected) -> str:
    lines = [f"{'rank':>4}  {'chromosome':<13} {'test acc':>8}  resources"]
    for i, r in enumerate(selected, start=1):
        lines.append(f"{i:>4}  {to_json(r.chromosome):<13} {r.fitness:>8.3f}  {resources_text(r.resources)}")
    return "\n".join(lines)


def cmd_select(cfg: RunConfig, ranked_path: Path, k: int) -> dict:
    out = Path(cfg.out)
    _, records = read_population(ranked_path)
    selected = select_top_k(records, k)
    doc = {
        "k": k,
        "selected": [
            dict(record_to_dict(r), rank=i, resources=resources_text(r.resources))
            for i, r in enumerate(selected, start=1)
        ],
    }
    write_json(out / "selection.json", doc)
    print(format_selection(selected))
    return {"files": ["selection.json"]}


def cmd_compare_backends(cfg: RunConfig, ga_pool_path: Path, regular_pool_path: Path, population_path: Path) -> dict:
    out = Path(cfg.out)
    pools = {"ga": ParameterPool.load(ga_pool_path), "regular": ParameterPool.load(regular_pool_path)}
    for pool in pools.values():
        _check_pool(pool, cfg)
    seed_population, _ = read_population(population_path)
    _, test, _ = load_data(cfg, _pca_beside(ga_pool_path))
    full = cfg.bounds().full()
    k = max(cfg.top_k, 1)
    rows = []
    for kind in ("exact", "shots", "noisy"):
        row = {"backend": kind}
        for name, pool in pools.items():
            ranked, _ = _infer(cfg, pool, seed_population, test, kind)
            top = select_top_k(ranked, min(k, len({r.chromosome for r in ranked})))
            row[f"{name}_best"] = max(r.fitness for r in top)
            row[f"{name}_top"] = to_json(top[0].chromosome)
            backend = cfg.backend_config(kind)
            rng = stream(cfg.seed, "macro", 2) if backend.stochastic else None
            row[f"{name}_macro"] = evaluate_fitness_infer(full, pool, test, backend, rng).fitness
        row["delta"] = row["ga_best"] - row["regular_best"]
        rows.append(row)
        print(f"{kind:>6}: GA {row['ga_best']:.4f}  regular {row['regular_best']:.4f}  delta {row['delta']:+.4f}")
    columns = ["backend", "ga_best", "regular_best", "delta", "ga_top", "regular_top", "ga_macro", "regular_macro"]
    with open(out / "backend_comparison.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(row[c])) if isinstance(row[c], float) else row[c] for c in columns])
    return {"files": ["backend_comparison.csv"]}


def cmd_report(run_dir: Path) -> dict:
    path = write_report(run_dir)
    print(f"report written to {path}")
    return {"files": [REPORT]}


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="run directory")
    common.add_argument("--backend", choices=["exact", "shots", "noisy"])
    common.add_argument("--shots", type=int)
    common.add_argument("--noise-p", dest="noise_p", type=float)
    common.add_argument("--threads", type=int)
    common.add_argument("--synthetic", action="store_true", default=None)
    common.add_argument("--top-k", dest="top_k", type=int)
    common.add_argument("--data-dir", dest="data_dir")
    common.add_argument("--population-size", dest="population_size", type=int)
    common.add_argument("--generations", type=int)
    common.add_argument("--epochs", type=int)
    common.add_argument("--record-timings", dest="record_timings", action="store_true", default=None)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gatqnn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gatqnn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="GA-driven macroCircuit training")
    sub.add_parser("baseline", parents=[common], help="conventional full-macroCircuit training")
    p = sub.add_parser("infer", parents=[common], help="inference-only GA on a frozen pool")
    p.add_argument("--pool", help="pool JSON (default <out>/pool.json)")
    p.add_argument("--population", help="seed population JSON (default <out>/final_population.json)")
    p = sub.add_parser("select", parents=[common], help="top-k microCircuit selection")
    p.add_argument("--ranked", help="ranked population JSON (default <out>/ranked_population.json)")
    p = sub.add_parser("compare-backends", parents=[common], help="GA vs regular pools on every backend")
    p.add_argument("--ga-pool", help="default <out>/pool.json")
    p.add_argument("--regular-pool", help="default <out>/pool_regular.json")
    p.add_argument("--population", help="default <out>/final_population.json")
    p = sub.add_parser("report", parents=[common], help="markdown summary of a run directory")
    p.add_argument("--run-dir", help="default <out>")
    return parser


OVERRIDE_KEYS = ["seed", "out", "backend", "shots", "noise_p", "threads", "synthetic", "top_k", "data_dir",
                 "population_size", "generations", "epochs", "record_timings"]


def config_from_args(args) -> RunConfig:
    overrides = {k: getattr(args, k) for k in OVERRIDE_KEYS}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value
    return load_config(args.config, overrides)


NEEDS_DATA = {"train", "baseline", "infer", "compare-backends"}


def run(args) -> None:
    cfg = config_from_args(args)
    cfg.validate(needs_data=args.command in NEEDS_DATA)
    out = Path(cfg.out)
    run_dir = Path(args.run_dir) if getattr(args, "run_dir", None) else out
    run_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    if args.command == "train":
        result = cmd_train(cfg)
    elif args.command == "baseline":
        result = cmd_baseline(cfg)
    elif args.command == "infer":
        result = cmd_infer(cfg, Path(args.pool or out / "pool.json"),
                           Path(args.population or out / "final_population.json"))
    elif args.command == "select":
        result = cmd_select(cfg, Path(args.ranked or out / "ranked_population.json"), cfg.top_k)
    elif args.command == "compare-backends":
        result = cmd_compare_backends(cfg, Path(args.ga_pool or out / "pool.json"),
                                      Path(args.regular_pool or out / "pool_regular.json"),
                                      Path(args.population or out / "final_population.json"))
    else:
        result = cmd_report(run_dir)
    Manifest(run_dir).record(args.command, cfg.to_dict(), result["files"], time.perf_counter() - start)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except (GatQnnError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
