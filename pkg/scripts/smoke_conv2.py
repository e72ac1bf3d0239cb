#!/usr/bin/env python3
"""Smoke run: Conv-2 on a 5,000-image CIFAR-10 subset, two pruning rounds.

Exercises the whole pipeline (train, global prune, rewind, retrain, CSV
emission) in minutes rather than hours.  Accuracy on the reduced subset is
well below the full-data numbers; this is a plumbing check, not a result.
"""

import argparse
import sys

from qprune.harness import ExperimentConfig, emit_results, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", default="data/cifar10")
    parser.add_argument("--out", default="results/smoke-conv2")
    parser.add_argument("--field", choices=["real", "quat"], default="quat")
    parser.add_argument("--epochs", type=int, default=1)
    parser.add_argument("--rounds", type=int, default=2)
    args = parser.parse_args()

    config = ExperimentConfig.from_model_dataset(
        "conv2", "cifar10", args.field,
        trials=1, epochs=args.epochs, rounds=args.rounds,
        train_subset=5000, stop_threshold=0.0, data_dir=args.data,
    )
    result = run_experiment(config)
    paths = emit_results(result, args.out)
    for sparsity, mean, _std, _n, rel in result.sweep_stats:
        print(f"sparsity {sparsity:.4f} (real-rel {rel:.4f}): acc {mean:.4f}")
    for p in paths:
        print("wrote", p)
    return 3 if result.failures else 0


if __name__ == "__main__":
    sys.exit(main())
