"""``reachset`` command line: run, robustness, export-model.

A ``--config`` file (TOML or JSON) supplies defaults; explicit flags win.
Exit codes: 0 success, 2 some solver returned infeasible, 1 any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .distributions import SampleFileError
from .harness import (ConfigError, ExperimentConfig, config_from_dict, emit_report, emit_study,
                      load_data, robustness_study, run_experiment)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2

# flag dest -> ExperimentConfig field
FLAG_FIELDS = {
    "case": "case", "samples": "samples", "n_sides": "n", "grid": "N", "alpha": "alpha",
    "ns": "n_s", "np": "n_p", "budget": "budget_s", "seed": "seed", "n_test": "N_test",
    "n_ds": "N_ds", "eps": "eps", "coeff_bound": "coeff_bound", "pad": "pad",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TOML or JSON file with default settings")
    p.add_argument("--case", choices=["fan", "bimodal", "file"])
    p.add_argument("--samples", help="x,y CSV file (case=file)")
    p.add_argument("--n-sides", dest="n_sides", type=int)
    p.add_argument("--grid", type=int, help="grid points per axis")
    p.add_argument("--alpha", type=float)
    p.add_argument("--ns", type=int, help="cells sampled per heuristic round")
    p.add_argument("--np", type=int, help="heuristic rounds")
    p.add_argument("--budget", type=float, help="wall-clock cap per solve, seconds")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--n-ds", dest="n_ds", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--coeff-bound", dest="coeff_bound", type=float)
    p.add_argument("--pad", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reachset", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="solve one case with all three methods")
    _add_common(run)
    run.add_argument("--out", type=Path, required=True)
    rob = sub.add_parser("robustness", help="Jaccard/time study of the heuristic over n_s")
    _add_common(rob)
    rob.add_argument("--ns-list", dest="ns_list", help="comma-separated, e.g. 50,60,70")
    rob.add_argument("--repeats", type=int)
    rob.add_argument("--out", type=Path, required=True)
    exp = sub.add_parser("export-model", help="write the full model in text form")
    _add_common(exp)
    exp.add_argument("--out", type=Path, required=True, help="output model file")
    return parser


def read_config_file(path: Path) -> dict:
    text = Path(path).read_bytes()
    if Path(path).suffix.lower() == ".json":
        return json.loads(text)
    return tomllib.loads(text.decode())


def _normalise_keys(d: dict) -> dict:
    """Accept both field names and flag spellings (``n-sides``, ``ns``...)."""
    out = {}
    for key, val in d.items():
        k = key.replace("-", "_")
        out[FLAG_FIELDS.get(k, key if key in ("N", "N_ds", "N_test") else k)] = val
    return out


def resolve(args: argparse.Namespace) -> tuple[ExperimentConfig, dict]:
    """Merge file settings and flags; returns the config and study-only extras."""
    file_cfg = read_config_file(args.config) if args.config else {}
    study = dict(file_cfg.pop("robustness", {}))
    merged = _normalise_keys(file_cfg)
    for dest, fld in FLAG_FIELDS.items():
        val = getattr(args, dest, None)
        if val is not None:
            merged[fld] = val
    if getattr(args, "ns_list", None):
        study["ns_list"] = [int(v) for v in args.ns_list.split(",") if v.strip()]
    if getattr(args, "repeats", None) is not None:
        study["repeats"] = args.repeats
    return config_from_dict(merged), study


def _summary(report) -> str:
    lines = [f"{'method':<14}{'status':<16}{'ratio':>8}{'area_m2':>10}{'time_s':>9}"]
    for name, m in report.methods.items():
        ratio = "-" if m["ratio"] is None else f"{m['ratio']:.3f}"
        area = "-" if m["area_m2"] is None else f"{m['area_m2']:.1f}"
        lines.append(f"{name:<14}{m['status']:<16}{ratio:>8}{area:>10}{m['time_s']:>9.3f}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, study = resolve(args)
        if args.command == "run":
            report = run_experiment(cfg)
            emit_report(report, args.out)
            print(_summary(report))
            return EXIT_INFEASIBLE if report.any_infeasible else EXIT_OK
        if args.command == "robustness":
            res = robustness_study(cfg, study.get("ns_list", [50, 60, 70, 80, 90]),
                                   int(study.get("repeats", 10)))
            emit_study(res, args.out)
            for row in res.rows:
                print(f"n_s={row['n_s']:>4}  jaccard={row['jaccard_mean']:.3f}  "
                      f"time={row['time_mean']:.3f}s")
            return EXIT_INFEASIBLE if any(r["infeasible_runs"] for r in res.rows) else EXIT_OK
        from .kde import estimate
        from .polyopt import build_model, export_model
        wg = estimate(load_data(cfg), cfg.N, cfg.pad)
        export_model(build_model(wg, cfg.n, cfg.alpha, cfg.eps, cfg.coeff_bound), args.out)
        print(f"wrote {args.out}")
        return EXIT_OK
    except (ConfigError, SampleFileError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"reachset: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except RuntimeError as exc:
        print(f"reachset: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE if "infeasible" in str(exc) else EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
