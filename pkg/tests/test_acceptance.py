"""Acceptance criteria 1-9. Each test records one PASS/FAIL line (printed
immediately and again in the terminal summary) before asserting."""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from instances import lattice_instance, random_grid
from oracles import (enumerate_cell_assignments, enumerate_joint, kde_direct,
                     lattice_optimum)
from reachset.distributions import SampleSet
from reachset.geometry import (LinePolygon, canonical_order, check_enclosed, check_nondegenerate,
                               contains, validate_ngon, vertices)
from reachset.harness import ExperimentConfig, load_data, robustness_study, run_experiment
from reachset.kde import bandwidth, build_grid, estimate, fft_kde
from reachset.polyopt import (build_model, build_rows, implied_assignment, solve_heuristic,
                              solve_optimal)

# lattice-oracle optima for lattice_instance(0..19), 21 x 21 (a, b) lattice
LATTICE_OPTIMA = [9, 8, 6, 4, 11, 12, 9, 10, 6, 12, 12, 6, 6, 11, 12, 10, 8, 12, 9, 7]
LATTICE_AXIS = 21


def record(k, ok, detail, capsys):
    ACCEPTANCE[k] = (bool(ok), detail)
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def case1():
    return run_experiment(ExperimentConfig(case="fan"))


@pytest.fixture(scope="module")
def case2():
    return run_experiment(ExperimentConfig(case="bimodal"))


# -- 1 ------------------------------------------------------------------------

def test_c1_fft_kde_matches_oracle(capsys):
    r = np.random.default_rng(2024)
    s = SampleSet(np.column_stack([r.normal(10, 4, 200), r.standard_t(5, 200) * 3]))
    g = build_grid(s, 64)
    hx, hy = bandwidth(s)
    fft_kde(s, g, hx, hy)  # warm-up, so timing excludes first-call import cost
    t0 = time.perf_counter()
    got = fft_kde(s, g, hx, hy).z_kde
    dt = time.perf_counter() - t0
    ref = kde_direct(s.points, g.xs, g.ys, hx, hy)
    dev = float(np.max(np.abs(got - ref)) / ref.max())
    record(1, dev <= 1e-8 and dt < 1.0, f"max rel dev {dev:.2e} (<= 1e-8), runtime {dt:.3f}s (< 1s)", capsys)


# -- 2 ------------------------------------------------------------------------

def _random_line_set(r):
    n = int(r.integers(3, 6))
    if r.random() < 0.5:
        c = r.uniform(-2, 2, (n, 2))
    else:
        gaps = r.uniform(0.05, 1.0, n)
        ang = r.uniform(0, 2 * math.pi) + np.cumsum(gaps / gaps.sum() * 2 * math.pi)
        c = np.column_stack([np.cos(ang), np.sin(ang)]) / r.uniform(0.1, 10, n)[:, None]
    return c[canonical_order(c)]


def test_c2_validated_line_sets_give_convex_ngons(capsys):
    r = np.random.default_rng(99)
    t0 = time.perf_counter()
    checked, failures, sizes = 0, 0, {3: 0, 4: 0, 5: 0}
    while checked < 10_000:
        c = _random_line_set(r)
        if not validate_ngon(c).ok:
            continue
        anchor = tuple(r.uniform(-50, 50, 2))
        poly = LinePolygon.from_coeffs(anchor, c)
        v = vertices(poly).vertices
        chain = np.vstack([v, v[:1]])
        e = np.roll(v, -1, axis=0) - v
        en = np.roll(e, -1, axis=0)
        convex = bool(np.all(e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0] > 0))
        ok = (check_enclosed(chain) and check_nondegenerate(chain, len(c)) and convex
              and contains(poly, anchor))
        failures += not ok
        checked += 1
        sizes[len(c)] += 1
    dt = time.perf_counter() - t0
    record(2, failures == 0 and dt < 10.0,
           f"{checked - failures}/{checked} valid sets pass (n counts {sizes}), runtime {dt:.2f}s (< 10s)",
           capsys)


# -- 3 ------------------------------------------------------------------------

def test_c3_implied_binary_exactness(capsys):
    r = np.random.default_rng(7)
    agree, empty, cases = 0, 0, 100
    for case in range(cases):
        N = 2 if case % 2 == 0 else 3
        m = build_model(random_grid(N, r), 3, float(r.uniform(0.2, 0.9)), coeff_bound=10.0)
        # valid triangle inside the coefficient box (|a|, |b| <= 1 / 0.2 = 5 <= 10)
        while True:
            gaps = r.uniform(0.05, 1.0, 3)
            ang = r.uniform(0, 2 * math.pi) + np.cumsum(gaps / gaps.sum() * 2 * math.pi)
            c = np.column_stack([np.cos(ang), np.sin(ang)]) / r.uniform(0.2, 2.0, 3)[:, None]
            c = c[canonical_order(c)]
            if validate_ngon(c).ok:
                break
        em = build_rows(m)
        cells = [tuple(map(int, x)) for x in m.cells]
        asg = implied_assignment(c, m)
        implied = {cell: tuple(int(v) for v in asg.l[p]) + (int(asg.z[p]),)
                   for p, cell in enumerate(cells)}
        if N == 2:
            joint = enumerate_joint(em.rows, c, 3, cells)
            sols = [{cell: tuple(s[f"l_{cell[0]}_{cell[1]}_{k}"] for k in range(3))
                     + (s[f"z_{cell[0]}_{cell[1]}"],) for cell in cells} for s in joint]
        else:
            by_cell = {cell: [] for cell in cells}
            for row in em.rows:
                parts = row.name.split("_")
                if parts[0] in ("lab1", "lab2", "zl1", "zl2"):
                    by_cell[(int(parts[1]), int(parts[2]))].append(row)
            per = enumerate_cell_assignments(by_cell, c, 3, cells)
            sols = [] if any(not v for v in per.values()) else (
                [{cell: per[cell][0] for cell in cells}] if all(len(v) == 1 for v in per.values())
                else [None, None])
        aff = m.offsets @ c.T - 1.0
        in_band = bool(np.any((aff > 0) & (aff < m.eps)))
        if in_band:
            # the model admits no assignment for lines this close to a node
            ok = sols == []
            empty += ok
        else:
            ok = len(sols) == 1 and sols[0] == implied
        agree += ok
    record(3, agree == cases,
           f"{agree}/{cases} instances agree (N in {{2,3}}, n=3; {empty} with empty eps-band sets)",
           capsys)


# -- 4 ------------------------------------------------------------------------

@pytest.mark.slow
def test_c4_case_one_baseline(case1, capsys):
    m = case1.methods
    h, b = m["heuristic"], m["bounding_box"]
    checks = {
        "ratio in [0.87,0.95]": 0.87 <= h["ratio"] <= 0.95,
        "area <= 0.75 bbox": h["area_m2"] <= 0.75 * b["area_m2"],
        "bbox ratio >= heuristic": b["ratio"] >= h["ratio"],
        "time <= 5s": h["time_s"] <= 5.0,
    }
    detail = (f"heuristic ratio {h['ratio']:.4f}, area {h['area_m2']:.1f} vs bbox {b['area_m2']:.1f} "
              f"({h['area_m2'] / b['area_m2']:.3f}), bbox ratio {b['ratio']:.4f}, time {h['time_s']:.2f}s; "
              f"failed: {[k for k, v in checks.items() if not v]}")
    record(4, all(checks.values()), detail, capsys)


# -- 5 ------------------------------------------------------------------------

@pytest.mark.slow
def test_c5_case_two_baseline(case2, capsys):
    m = case2.methods
    h, b = m["heuristic"], m["bounding_box"]
    checks = {
        "ratio in [0.87,0.95]": 0.87 <= h["ratio"] <= 0.95,
        "area <= 0.75 bbox": h["area_m2"] <= 0.75 * b["area_m2"],
        "time <= 5s": h["time_s"] <= 5.0,
    }
    detail = (f"heuristic ratio {h['ratio']:.4f}, area {h['area_m2']:.1f} vs bbox {b['area_m2']:.1f} "
              f"({h['area_m2'] / b['area_m2']:.3f}), time {h['time_s']:.2f}s; "
              f"failed: {[k for k, v in checks.items() if not v]}")
    record(5, all(checks.values()), detail, capsys)


# -- 6 ------------------------------------------------------------------------

@pytest.mark.slow
def test_c6_alpha_one(capsys):
    rep = run_experiment(ExperimentConfig(case="fan", alpha=1.0))
    ratios = {k: v["ratio"] for k, v in rep.methods.items()}
    ok = all(r is not None and r >= 0.995 for r in ratios.values())
    record(6, ok, "ratios " + ", ".join(f"{k} {v:.4f}" for k, v in ratios.items()) + " (>= 0.995)", capsys)


# -- 7 ------------------------------------------------------------------------

@pytest.mark.slow
def test_c7_monotone_in_sides(capsys):
    areas = {"optimal": {}, "heuristic": {}}
    for n in (3, 4, 5):
        opt, heu = [], []
        for seed in range(10):
            cfg = ExperimentConfig(case="fan", n=n, seed=seed)
            model = build_model(estimate(load_data(cfg), cfg.N, cfg.pad), n, cfg.alpha)
            opt.append(solve_optimal(model, cfg.budget_s, seed).area)
            heu.append(solve_heuristic(model, cfg.sample_count, cfg.n_p, cfg.budget_s, seed).area)
        areas["optimal"][n] = float(np.median(opt))
        areas["heuristic"][n] = float(np.median(heu))
    ok = all(a[4] <= 1.05 * a[3] and a[5] <= 1.05 * a[4] for a in areas.values())
    detail = "; ".join(f"{k} median " + " -> ".join(f"{a[n]:.0f}" for n in (3, 4, 5))
                       for k, a in areas.items()) + " m2 (each step <= +5%)"
    record(7, ok, detail, capsys)


# -- 8 ------------------------------------------------------------------------

@pytest.mark.slow
def test_c8_robustness(capsys):
    cfg = ExperimentConfig(case="fan")
    ns = [50, 60, 70, 80, 90]
    st = robustness_study(cfg, ns, repeats=10)
    means = [r["jaccard_mean"] for r in st.rows]
    ses = [math.sqrt(r["jaccard_var"] / len(r["jaccard"])) for r in st.rows]
    # an increase counts only beyond two standard errors of the difference
    trend = all(means[k + 1] - means[k] <= 2 * math.hypot(ses[k], ses[k + 1]) for k in range(len(ns) - 1))
    same = robustness_study(cfg, [70], repeats=3, distinct_seeds=False)
    zero_var = same.rows[0]["jaccard_var"] == 0.0
    final = means[-1] <= 0.20
    detail = (f"mean Jaccard " + ", ".join(f"{n}:{m:.3f}" for n, m in zip(ns, means))
              + f"; n_s=90 <= 0.20: {final}; trend non-increasing within noise: {trend}; "
              f"identical-seed variance zero: {zero_var}")
    record(8, final and trend and zero_var, detail, capsys)


# -- 9 ------------------------------------------------------------------------

@pytest.mark.slow
def test_c9_tiny_instance_near_optimality(capsys):
    total, worse = 0.0, []
    for s, oracle in enumerate(LATTICE_OPTIMA):
        m = build_model(lattice_instance(s), 3, 0.8)
        t0 = time.perf_counter()
        sol = solve_optimal(m, seed=s)
        total += time.perf_counter() - t0
        if not sol.feasible or sol.objective > oracle + 1:
            worse.append((s, sol.objective, oracle))
    record(9, not worse and total < 30.0,
           f"{20 - len(worse)}/20 within oracle + 1 (violations {worse}), solve time {total:.1f}s (< 30s)",
           capsys)


@pytest.mark.slow
def test_lattice_oracle_values_are_frozen():
    got = []
    for s in range(20):
        m = build_model(lattice_instance(s), 3, 0.8)
        got.append(lattice_optimum(m.offsets, m.weights, LATTICE_AXIS, m.coeff_bound, 0.8)[0])
    assert got == LATTICE_OPTIMA


# -- published bands that sit outside the numbered criteria ----------------------

@pytest.mark.slow
def test_case_one_optimal_area_band(case1):
    assert 1500.0 <= case1.methods["optimal"]["area_m2"] <= 2300.0


@pytest.mark.slow
def test_case_one_bbox_area_band(case1):
    b = case1.methods["bounding_box"]
    assert 2700.0 <= b["area_m2"] <= 3800.0
    assert b["ratio"] >= case1.methods["optimal"]["ratio"]


@pytest.mark.slow
@pytest.mark.parametrize("case", ["case1", "case2"])
def test_anti_conservatism(case, request):
    m = request.getfixturevalue(case).methods
    assert m["optimal"]["area_m2"] < m["bounding_box"]["area_m2"]
    assert m["heuristic"]["area_m2"] < m["bounding_box"]["area_m2"]
