"""Experiment runner: sample, estimate, solve three ways, test on fresh data, report.

Seeds: the experiment seed feeds the solvers directly; the data set and the
fresh test set come from independent child seeds, so changing ``N_test``
never changes the solutions.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from .distributions import (BimodalParams, CaseIParams, Mixture1D, SampleSet, TruncGauss,
                            load_samples, sample_bimodal, sample_fan)
from .geometry import jaccard, vertices
from .kde import WeightedGrid, estimate
from .polyopt import (PolySolution, bounding_box, build_model, derive_seed, solve_heuristic,
                      solve_optimal)

CASES = ("fan", "bimodal", "file")
METHODS = ("optimal", "heuristic", "bounding_box")
DEFAULT_NS = {"fan": 70, "bimodal": 60, "file": 70}
DATA_STREAM, TEST_STREAM = 0, 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    case: str = "fan"
    samples: str | None = None
    N_ds: int = 1000
    N: int = 20
    n: int = 4
    alpha: float = 0.9
    n_s: int | None = None
    n_p: int = 10
    eps: float = 1e-6
    coeff_bound: float | None = None
    budget_s: float = 60.0
    seed: int = 7
    N_test: int = 100_000
    pad: float = 0.05
    fan: CaseIParams = field(default_factory=CaseIParams)
    bimodal: BimodalParams = field(default_factory=BimodalParams)

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case!r}")
        if self.case == "file" and not self.samples:
            raise ConfigError("case 'file' needs a samples path")
        for name in ("N_ds", "N", "n_p", "N_test"):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)) or val < 1:
                raise ConfigError(f"{name} must be a positive integer, got {val!r}")
        if self.N < 2:
            raise ConfigError(f"N must be >= 2, got {self.N}")
        if self.n < 3:
            raise ConfigError(f"n must be >= 3, got {self.n}")
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.n_s is not None and self.n_s < 1:
            raise ConfigError(f"n_s must be a positive integer, got {self.n_s}")
        if not self.eps > 0 or not self.budget_s > 0 or self.pad < 0:
            raise ConfigError("eps and budget_s must be positive and pad non-negative")
        if self.coeff_bound is not None and not self.coeff_bound > 0:
            raise ConfigError("coeff_bound must be positive")

    @property
    def sample_count(self) -> int:
        return self.n_s if self.n_s is not None else DEFAULT_NS[self.case]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _mixture(d: dict) -> Mixture1D:
    return Mixture1D(tuple(d["weights"]), tuple(d["means"]), tuple(d["sigmas"]))


def _trunc(d: dict) -> TruncGauss:
    return TruncGauss(d["mu"], d["sigma"], d["lo"], d["hi"])


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build a config from plain data (nested tables for ``fan`` / ``bimodal``)."""
    d = dict(d)
    unknown = set(d) - {f.name for f in dataclasses.fields(ExperimentConfig)}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if isinstance(d.get("bimodal"), dict):
        b = d["bimodal"]
        d["bimodal"] = BimodalParams(_mixture(b["x"]), _mixture(b["y"]))
    if isinstance(d.get("fan"), dict):
        f = d["fan"]
        d["fan"] = CaseIParams(_trunc(f["speed"]), _trunc(f["heading"]), f.get("dt", 1.0),
                               tuple(f.get("prev_pos", (0.0, 0.0))))
    return ExperimentConfig(**d)


# sampling ---------------------------------------------------------------------

def make_sampler(cfg: ExperimentConfig, data: SampleSet | None = None) -> Callable[[int, int], SampleSet]:
    """``sampler(count, seed)`` for the configured case; file data is bootstrapped."""
    if cfg.case == "fan":
        return lambda count, seed: sample_fan(cfg.fan, count, seed)
    if cfg.case == "bimodal":
        return lambda count, seed: sample_bimodal(cfg.bimodal, count, seed)
    if data is None:
        data = load_samples(cfg.samples)

    def bootstrap(count, seed):
        idx = np.random.default_rng(seed).integers(0, data.count, count)
        return SampleSet(data.points[idx])
    return bootstrap


def load_data(cfg: ExperimentConfig) -> SampleSet:
    if cfg.case == "file":
        return load_samples(cfg.samples)
    return make_sampler(cfg)(cfg.N_ds, derive_seed(cfg.seed, DATA_STREAM))


def ratio_test(poly, sampler, N_test: int, seed: int) -> float:
    """Fraction of ``N_test`` fresh samples inside ``poly`` (boundary counts, no slack)."""
    if N_test < 1:
        raise ValueError(f"N_test must be >= 1, got {N_test}")
    pts = sampler(N_test, seed)
    pts = pts.points if isinstance(pts, SampleSet) else np.asarray(pts, dtype=float)
    return float(np.count_nonzero(poly.contains_points(pts, tol=0.0))) / N_test


# experiment ---------------------------------------------------------------------

def environment_stamp() -> dict:
    return {"python": sys.version.split()[0], "numpy": np.__version__,
            "scipy": scipy.__version__, "platform": platform.platform()}


@dataclass
class ExperimentReport:
    config: dict
    methods: dict
    environment: dict
    samples: SampleSet | None = None
    grid: WeightedGrid | None = None
    solutions: dict = field(default_factory=dict)

    @property
    def any_infeasible(self) -> bool:
        return any(m["status"] == "infeasible" for m in self.methods.values())

    def to_dict(self) -> dict:
        return {"config": self.config, "methods": self.methods, "environment": self.environment}


def _method_entry(sol: PolySolution, ratio: float | None, alpha: float) -> dict:
    entry = {"status": sol.status, "ratio": ratio,
             "area_m2": None if not sol.feasible else sol.area,
             "time_s": sol.solve_time, "solution": sol.to_dict()}
    if sol.feasible:
        entry["generalization_gap"] = bool(sol.coverage_full < alpha - 1e-12)
    return entry


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    data = load_data(cfg)
    sampler = make_sampler(cfg, data if cfg.case == "file" else None)
    wg = estimate(data, cfg.N, cfg.pad)
    model = build_model(wg, cfg.n, cfg.alpha, cfg.eps, cfg.coeff_bound)
    sols = {
        "optimal": solve_optimal(model, cfg.budget_s, cfg.seed),
        "heuristic": solve_heuristic(model, cfg.sample_count, cfg.n_p, cfg.budget_s, cfg.seed),
        "bounding_box": bounding_box(wg, cfg.alpha),
    }
    test_seed = derive_seed(cfg.seed, TEST_STREAM)
    methods = {}
    for name, sol in sols.items():
        ratio = ratio_test(sol.polygon, sampler, cfg.N_test, test_seed) if sol.feasible else None
        methods[name] = _method_entry(sol, ratio, cfg.alpha)
    return ExperimentReport(cfg.to_dict(), methods, environment_stamp(), data, wg, sols)


# robustness ---------------------------------------------------------------------

@dataclass
class StudyReport:
    config: dict
    reference: dict
    rows: list
    environment: dict

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def robustness_study(cfg: ExperimentConfig, n_s_list, repeats: int = 10,
                     distinct_seeds: bool = True) -> StudyReport:
    """Jaccard distance of repeated heuristic runs to one optimal reference, per ``n_s``."""
    if repeats < 2:
        raise ValueError(f"repeats must be >= 2, got {repeats}")
    data = load_data(cfg)
    wg = estimate(data, cfg.N, cfg.pad)
    model = build_model(wg, cfg.n, cfg.alpha, cfg.eps, cfg.coeff_bound)
    ref = solve_optimal(model, cfg.budget_s, cfg.seed)
    if not ref.feasible:
        raise RuntimeError("robustness reference is infeasible")
    ref_chain = vertices(ref.polygon)
    rows = []
    for n_s in n_s_list:
        dists, times, areas = [], [], []
        for r in range(repeats):
            seed = derive_seed(cfg.seed, int(n_s), r if distinct_seeds else 0)
            sol = solve_heuristic(model, int(n_s), cfg.n_p, cfg.budget_s, seed)
            if not sol.feasible:
                dists.append(None)
            else:
                dists.append(jaccard(ref_chain, vertices(sol.polygon)))
                areas.append(sol.area)
            times.append(sol.solve_time)
        ok = np.array([d for d in dists if d is not None], dtype=float)
        rows.append({
            "n_s": int(n_s), "jaccard": dists, "time_s": times, "area_m2": areas,
            "jaccard_mean": float(ok.mean()) if len(ok) else None,
            "jaccard_var": float(ok.var()) if len(ok) else None,
            "time_mean": float(np.mean(times)), "time_var": float(np.var(times)),
            "infeasible_runs": int(sum(d is None for d in dists)),
        })
    reference = {"status": ref.status, "budget_s": cfg.budget_s, **ref.to_dict(),
                 "budget_hit": bool(ref.diagnostics.get("budget_hit", False))}
    return StudyReport(cfg.to_dict(), reference, rows, environment_stamp())


# output ------------------------------------------------------------------------

def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _num(x):
    return "" if x is None else repr(float(x))


def emit_report(report: ExperimentReport, out_dir) -> Path:
    """Write report.json, table.csv, polygons.json and plotdata/*.csv under ``out_dir``."""
    out = Path(out_dir)
    plot = out / "plotdata"
    plot.mkdir(parents=True, exist_ok=True)
    _write_json(report.to_dict(), out / "report.json")
    _write_csv(out / "table.csv", ["method", "ratio", "area_m2", "time_s"],
               [[name, _num(m["ratio"]), _num(m["area_m2"]), _num(m["time_s"])]
                for name, m in report.methods.items()])
    polys = {name: m["solution"] for name, m in report.methods.items()}
    _write_json(polys, out / "polygons.json")
    if report.grid is not None:
        g, wg = report.grid.grid, report.grid
        _write_csv(plot / "heatmap.csv", ["i", "j", "x", "y", "z_kde", "w"],
                   [[i, j, _num(g.xs[i]), _num(g.ys[j]), _num(wg.z_kde[i, j]), _num(wg.w[i, j])]
                    for i in range(g.N) for j in range(g.N)])
    for name, m in report.methods.items():
        verts = m["solution"]["vertices"] or []
        _write_csv(plot / f"polygon_{name}.csv", ["x", "y"], [[_num(x), _num(y)] for x, y in verts])
    if report.samples is not None:
        _write_csv(plot / "samples.csv", ["x", "y"],
                   [[_num(x), _num(y)] for x, y in report.samples.points])
    return out


def emit_study(study: StudyReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(study.to_dict(), out / "study.json")
    _write_csv(out / "study.csv", ["n_s", "jaccard_mean", "jaccard_var", "time_mean", "time_var"],
               [[r["n_s"], _num(r["jaccard_mean"]), _num(r["jaccard_var"]),
                 _num(r["time_mean"]), _num(r["time_var"])] for r in study.rows])
    return out


def strip_volatile(obj):
    """Drop environment and timing fields (for determinism comparisons)."""
    if isinstance(obj, dict):
        return {k: strip_volatile(v) for k, v in obj.items()
                if k != "environment" and "time" not in k}
    if isinstance(obj, list):
        return [strip_volatile(v) for v in obj]
    return obj
