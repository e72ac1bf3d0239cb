"""Experiment runner: multi-trial training + pruning sweeps, aggregation,
and plot-ready CSV output."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .data import Dataset, SplitSpec, load_cifar, load_mnist, split_train_validation
from .errors import ConfigError, NumericalError
from .models import ModelSpec, build_network, count_parameters, model_spec
from .pruning import PruneSchedule, RoundResult, iterative_lottery
from .training import TrainSettings, evaluate_accuracy, train

VALIDATION_SIZE = 5000


@dataclass
class ExperimentConfig:
    model: str
    dataset: str
    field: str
    epochs: int
    batch_size: int
    lr: float
    trials: int = 5
    prune_rate: float = 0.2
    stop_threshold: float = 0.3
    early_stop: bool = False
    patience: int = 10
    base_seed: int = 0
    data_dir: str = "data"
    out_dir: str = "results"
    workers: int = 1
    train_subset: int = 0  # 0 = full training set; >0 = smoke profile
    rounds: Optional[int] = None  # bound on pruning iterations; None = stop rule only

    @classmethod
    def from_model_dataset(cls, model: str, dataset: str, fld: str, **overrides) -> "ExperimentConfig":
        """Defaults reproduce the per-model training table (epochs/batch/lr)."""
        spec = model_spec(model, dataset, fld)
        cfg = cls(
            model=model,
            dataset=dataset,
            field=fld,
            epochs=spec.epochs,
            batch_size=spec.batch_size,
            lr=spec.lr,
        )
        for key, value in overrides.items():
            if value is None:
                continue
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config field {key!r}")
            setattr(cfg, key, value)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        model_spec(self.model, self.dataset, self.field)  # raises ConfigError on bad triples
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError(f"invalid epochs/batch: {self.epochs}/{self.batch_size}")
        if not (0.0 < self.prune_rate < 1.0):
            raise ConfigError(f"prune rate must lie in (0,1), got {self.prune_rate}")
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def spec(self) -> ModelSpec:
        return model_spec(self.model, self.dataset, self.field)


@dataclass
class TrialResult:
    seed: int
    curve: list[float] = field(default_factory=list)  # dense test accuracy per epoch
    rounds: list[RoundResult] = field(default_factory=list)
    wall_seconds: float = 0.0
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class AggregateResult:
    config: ExperimentConfig
    seeds: list[int]
    # (epoch, mean accuracy, std, n trials)
    curve_stats: list[tuple[int, float, float, int]]
    # (sparsity, mean accuracy, std, n trials, real-relative sparsity)
    sweep_stats: list[tuple[float, float, float, int, float]]
    trials: list[TrialResult]
    failures: int
    wall_seconds: float


def load_datasets(config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    if config.dataset == "mnist":
        train_set, test_set = load_mnist(config.data_dir)
    else:
        train_set, test_set = load_cifar(config.data_dir, 10 if config.dataset == "cifar10" else 100)
    if config.train_subset:
        train_set = train_set.subset(config.train_subset)
    return train_set, test_set


def _real_prunable_count(config: ExperimentConfig) -> int:
    """Prunable weight count of the real twin (shared sweep axis)."""
    real = model_spec(config.model, config.dataset, "real")
    return count_parameters(build_network(real, seed=0), include_biases=False)


def run_trial(
    config: ExperimentConfig,
    seed: int,
    datasets: Optional[tuple[Dataset, Dataset]] = None,
) -> TrialResult:
    """One fully deterministic trial: build, train, pruning sweep.

    The seed drives initialization, batch shuffling, and the validation
    split.  Returns a failed record (``error`` set) on numerical failure.
    """
    started = time.monotonic()
    if datasets is None:
        datasets = load_datasets(config)
    train_full, test_set = datasets
    result = TrialResult(seed=seed)
    rng = np.random.default_rng(seed)
    spec = config.spec()

    validation = None
    train_set = train_full
    if config.early_stop:
        vs = VALIDATION_SIZE if len(train_full) > 5 * VALIDATION_SIZE else max(1, len(train_full) // 5)
        train_set, validation = split_train_validation(train_full, SplitSpec(vs, seed))

    net = build_network(spec, rng=rng)
    settings = TrainSettings(
        epochs=config.epochs,
        batch_size=config.batch_size,
        lr=config.lr,
        early_stop=config.early_stop,
        patience=config.patience,
    )
    schedule = PruneSchedule(
        rate=config.prune_rate,
        stop_threshold=config.stop_threshold,
        retrain_epochs=config.epochs,
    )

    first_round = True

    def train_fn(network, mask):
        nonlocal first_round
        rec = train(
            network,
            train_set,
            settings,
            rng,
            mask=mask,
            test_data=test_set if first_round else None,
            validation_data=validation,
        )
        if first_round:
            result.curve = rec.epoch_test_accuracy
            first_round = False

    def eval_fn(network):
        return evaluate_accuracy(network, test_set)

    try:
        result.rounds = iterative_lottery(net, schedule, train_fn, eval_fn, max_rounds=config.rounds)
    except NumericalError as e:
        result.error = f"{type(e).__name__}: {e}"
    result.wall_seconds = time.monotonic() - started
    return result


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def run_experiment(config: ExperimentConfig) -> AggregateResult:
    """Run ``config.trials`` trials (seeds base..base+trials-1) and aggregate.

    Failed trials are reported via ``failures``; statistics aggregate the
    trials that reached each epoch/sparsity level.
    """
    config.validate()
    started = time.monotonic()
    datasets = load_datasets(config)
    seeds = [config.base_seed + i for i in range(config.trials)]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            trials = list(pool.map(lambda s: run_trial(config, s, datasets), seeds))
    else:
        trials = [run_trial(config, s, datasets) for s in seeds]

    ok = [t for t in trials if not t.failed]
    curve_stats = []
    if ok:
        for epoch in range(max((len(t.curve) for t in ok), default=0)):
            vals = [t.curve[epoch] for t in ok if epoch < len(t.curve)]
            mean, std = _mean_std(vals)
            curve_stats.append((epoch, mean, std, len(vals)))

    real_total = _real_prunable_count(config)
    sweep_stats = []
    if ok:
        for level in range(max((len(t.rounds) for t in ok), default=0)):
            rounds = [t.rounds[level] for t in ok if level < len(t.rounds)]
            vals = [r.accuracy for r in rounds]
            mean, std = _mean_std(vals)
            sweep_stats.append(
                (rounds[0].sparsity, mean, std, len(vals), rounds[0].kept / real_total)
            )

    return AggregateResult(
        config=config,
        seeds=seeds,
        curve_stats=curve_stats,
        sweep_stats=sweep_stats,
        trials=trials,
        failures=sum(t.failed for t in trials),
        wall_seconds=time.monotonic() - started,
    )


def emit_results(result: AggregateResult, directory: str) -> list[str]:
    """Write training_curve.csv, sparsity_sweep.csv, and manifest.json.

    Column order and headers are stable; identical experiments produce
    byte-identical CSVs.
    """
    os.makedirs(directory, exist_ok=True)
    fld = result.config.field
    paths = []

    curve_path = os.path.join(directory, "training_curve.csv")
    with open(curve_path, "w", newline="") as f:
        f.write("epoch,field,mean_acc,std_acc\n")
        for epoch, mean, std, _n in result.curve_stats:
            f.write(f"{epoch},{fld},{mean!r},{std!r}\n")
    paths.append(curve_path)

    sweep_path = os.path.join(directory, "sparsity_sweep.csv")
    with open(sweep_path, "w", newline="") as f:
        f.write("sparsity_fraction,field,mean_acc,std_acc,n_trials,real_relative_sparsity\n")
        for sparsity, mean, std, n, rel in result.sweep_stats:
            f.write(f"{sparsity!r},{fld},{mean!r},{std!r},{n},{rel!r}\n")
    paths.append(sweep_path)

    manifest_path = os.path.join(directory, "manifest.json")
    manifest = {
        "config": asdict(result.config),
        "seeds": result.seeds,
        "trials_failed": result.failures,
        "trial_errors": [t.error for t in result.trials if t.failed],
        "wall_seconds": result.wall_seconds,
        "version": __version__,
    }
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    paths.append(manifest_path)
    return paths
