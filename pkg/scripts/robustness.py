#!/usr/bin/env python3
"""Heuristic robustness over n_s: Jaccard distance to the optimal reference and solve time.

Example:
    python3 scripts/robustness.py --case fan --ns 50 60 70 80 90 --repeats 10 --out results/robustness
"""

import argparse
import sys
from pathlib import Path

from reachset.harness import ExperimentConfig, emit_study, robustness_study


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--case", choices=["fan", "bimodal"], default="fan")
    p.add_argument("--ns", type=int, nargs="+", default=[50, 60, 70, 80, 90])
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", type=Path, default=Path("results/robustness"))
    args = p.parse_args(argv)
    study = robustness_study(ExperimentConfig(case=args.case, seed=args.seed), args.ns, args.repeats)
    emit_study(study, args.out)
    ref = study.reference
    print(f"reference: area {ref['area_m2']:.1f} m2, objective {ref['objective']}")
    print(f"{'n_s':>5} {'jaccard':>9} {'var':>9} {'time_s':>8} {'infeasible':>10}")
    for r in study.rows:
        print(f"{r['n_s']:>5} {r['jaccard_mean']:>9.4f} {r['jaccard_var']:>9.5f} "
              f"{r['time_mean']:>8.3f} {r['infeasible_runs']:>10}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
