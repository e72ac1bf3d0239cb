#!/usr/bin/env python3
"""Full MNIST sweep: Lenet-300-100 and Lenet-12, real vs quaternion.

One output directory per (model, field) pair, each holding
training_curve.csv / sparsity_sweep.csv / manifest.json.  With default
settings this is a long run (5 trials x full pruning ladders); trim with
--trials/--rounds for a quick look.
"""

import argparse
import os
import sys

from qprune.harness import ExperimentConfig, emit_results, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", default="data/mnist", help="directory with the four IDX files")
    parser.add_argument("--out", default="results/mnist", help="output root")
    parser.add_argument("--models", nargs="+", default=["lenet300", "lenet12"])
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--rounds", type=int, default=None, help="bound pruning iterations")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--early-stop", action="store_true")
    args = parser.parse_args()

    for model in args.models:
        for field in ("real", "quat"):
            config = ExperimentConfig.from_model_dataset(
                model, "mnist", field,
                trials=args.trials, rounds=args.rounds, workers=args.workers,
                base_seed=args.seed, early_stop=args.early_stop or None,
                data_dir=args.data,
            )
            out_dir = os.path.join(args.out, f"{model}-{field}")
            print(f"== {model}/{field} -> {out_dir}")
            result = run_experiment(config)
            emit_results(result, out_dir)
            for sparsity, mean, std, n, rel in result.sweep_stats:
                print(f"  sparsity {sparsity:.4f} (real-rel {rel:.4f}): {mean:.4f} +/- {std:.4f} [{n}]")
            if result.failures:
                print(f"  WARNING: {result.failures} trial(s) failed", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
