#!/usr/bin/env python3
"""CIFAR sweep: Conv-2/4/6, real vs quaternion, CIFAR-10 or CIFAR-100.

Writes one result directory per (model, field).  The full ladders are
multi-day runs on a laptop CPU; use --rounds/--trials/--subset to scale
the experiment to the hardware at hand.
"""

import argparse
import os
import sys

from qprune.harness import ExperimentConfig, emit_results, run_experiment

CIFAR100_MODELS = ("conv4", "conv6")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", default="data/cifar10", help="directory with the binary batches")
    parser.add_argument("--dataset", choices=["cifar10", "cifar100"], default="cifar10")
    parser.add_argument("--out", default=None, help="output root (default results/<dataset>)")
    parser.add_argument("--models", nargs="+", default=["conv2", "conv4", "conv6"])
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--rounds", type=int, default=None)
    parser.add_argument("--subset", type=int, default=0, help="train on first N images only")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--early-stop", action="store_true")
    args = parser.parse_args()

    out_root = args.out or os.path.join("results", args.dataset)
    models = args.models
    if args.dataset == "cifar100":
        models = [m for m in models if m in CIFAR100_MODELS]

    for model in models:
        for field in ("real", "quat"):
            config = ExperimentConfig.from_model_dataset(
                model, args.dataset, field,
                trials=args.trials, rounds=args.rounds, workers=args.workers,
                base_seed=args.seed, early_stop=args.early_stop or None,
                train_subset=args.subset, data_dir=args.data,
            )
            out_dir = os.path.join(out_root, f"{model}-{field}")
            print(f"== {model}/{args.dataset}/{field} -> {out_dir}")
            result = run_experiment(config)
            emit_results(result, out_dir)
            for sparsity, mean, std, n, rel in result.sweep_stats:
                print(f"  sparsity {sparsity:.4f} (real-rel {rel:.4f}): {mean:.4f} +/- {std:.4f} [{n}]")
            if result.failures:
                print(f"  WARNING: {result.failures} trial(s) failed", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
