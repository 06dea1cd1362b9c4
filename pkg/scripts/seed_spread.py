#!/usr/bin/env python3
"""Baseline metrics across data seeds, to show how far a single-seed run can drift.

Example:
    python3 scripts/seed_spread.py --case fan --seeds 0 1 2 3 4 5 6 7 8 9
"""

import argparse
import statistics
import sys

from reachset.harness import ExperimentConfig, run_experiment


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--case", choices=["fan", "bimodal"], default="fan")
    p.add_argument("--seeds", type=int, nargs="+", default=list(range(10)))
    p.add_argument("--n-test", type=int, default=100_000)
    args = p.parse_args(argv)
    ratios, area_ratios = [], []
    for seed in args.seeds:
        m = run_experiment(ExperimentConfig(case=args.case, seed=seed, N_test=args.n_test)).methods
        h, b = m["heuristic"], m["bounding_box"]
        ratios.append(h["ratio"])
        area_ratios.append(h["area_m2"] / b["area_m2"])
        print(f"seed {seed:>3}: heuristic ratio {h['ratio']:.4f}  area/bbox {area_ratios[-1]:.3f}  "
              f"optimal ratio {m['optimal']['ratio']:.4f}  optimal area {m['optimal']['area_m2']:.1f}",
              flush=True)
    print(f"heuristic ratio: mean {statistics.mean(ratios):.4f}, min {min(ratios):.4f}, max {max(ratios):.4f}")
    print(f"area/bbox: mean {statistics.mean(area_ratios):.3f}, max {max(area_ratios):.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
